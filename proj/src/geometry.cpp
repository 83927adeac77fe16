#include "morphocause/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "morphocause/random.hpp"

namespace morphocause::geometry {

Eigen::MatrixXd paired_center(const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& pairs) {
    if (pairs.empty()) throw GeometryError("no pairs to center");
    const auto dim = pairs.front().first.size();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(2 * pairs.size()), dim);
    for (size_t i = 0; i < pairs.size(); ++i) {
        const auto& [a, b] = pairs[i];
        if (a.size() != dim || b.size() != dim) throw GeometryError("pair members of different dimension");
        Eigen::VectorXd half = (a - b) / 2.0;
        out.row(static_cast<Eigen::Index>(2 * i)) = half.transpose();
        out.row(static_cast<Eigen::Index>(2 * i + 1)) = -half.transpose();
    }
    return out;
}

Eigen::MatrixXd paired_center(const Eigen::MatrixXd& interleaved) {
    if (interleaved.rows() == 0 || interleaved.rows() % 2 != 0)
        throw GeometryError("interleaved matrix needs an even, nonzero row count");
    Eigen::MatrixXd out(interleaved.rows(), interleaved.cols());
    for (Eigen::Index i = 0; i < interleaved.rows(); i += 2) {
        Eigen::RowVectorXd half = (interleaved.row(i) - interleaved.row(i + 1)) / 2.0;
        out.row(i) = half;
        out.row(i + 1) = -half;
    }
    return out;
}

PcaResult pca(const Eigen::MatrixXd& rows, size_t k) {
    if (rows.rows() < 2) throw GeometryError("PCA needs at least two rows");
    const size_t limit = static_cast<size_t>(std::min(rows.rows(), rows.cols()));
    if (k == 0 || k > limit) throw GeometryError("k must lie in [1, min(rows, dim)]");

    const Eigen::RowVectorXd mean = rows.colwise().mean();
    const Eigen::MatrixXd centered = rows.rowwise() - mean;
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(rows.rows());

    PcaResult result;
    result.total_variance = cov.trace();
    if (!(result.total_variance > 0.0)) {
        result.components.resize(0, rows.cols());
        return result;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw GeometryError("eigendecomposition failed");
    const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
    const Eigen::MatrixXd& vectors = solver.eigenvectors();

    result.k = k;
    result.components.resize(static_cast<Eigen::Index>(k), rows.cols());
    for (size_t i = 0; i < k; ++i) {
        const Eigen::Index src = values.size() - 1 - static_cast<Eigen::Index>(i);
        Eigen::VectorXd v = vectors.col(src);
        const double scale = v.cwiseAbs().maxCoeff();
        for (Eigen::Index c = 0; c < v.size(); ++c) {
            if (std::abs(v(c)) > 1e-12 * scale) {
                if (v(c) < 0) v = -v;
                break;
            }
        }
        result.components.row(static_cast<Eigen::Index>(i)) = v.transpose();
        const double lambda = std::max(0.0, values(src));
        result.eigenvalues.push_back(lambda);
        result.explained_variance_ratio.push_back(lambda / result.total_variance);
    }
    return result;
}

nlohmann::json PcaResult::scree_json() const {
    nlohmann::json j;
    j["k"] = k;
    j["total_variance"] = total_variance;
    j["eigenvalues"] = eigenvalues;
    j["explained_variance_ratio"] = explained_variance_ratio;
    return j;
}

std::string PcaResult::scree_tsv() const {
    std::string out = "component\teigenvalue\tratio\tcumulative\n";
    double cum = 0.0;
    char buf[96];
    for (size_t i = 0; i < k; ++i) {
        cum += explained_variance_ratio[i];
        std::snprintf(buf, sizeof buf, "%zu\t%.9g\t%.9f\t%.9f\n", i + 1, eigenvalues[i], explained_variance_ratio[i], cum);
        out += buf;
    }
    return out;
}

std::vector<double> project(const Eigen::MatrixXd& reps, const Eigen::VectorXd& component, bool* renormalized) {
    if (reps.cols() != component.size()) throw GeometryError("component and representations differ in dimension");
    const double norm = component.norm();
    if (norm == 0.0) throw GeometryError("cannot project onto a zero vector");
    const bool fix = std::abs(norm - 1.0) > 1e-9;
    if (renormalized) *renormalized = fix;
    const Eigen::VectorXd unit = fix ? Eigen::VectorXd(component / norm) : component;
    const Eigen::VectorXd p = reps * unit;
    return {p.data(), p.data() + p.size()};
}

Eigen::MatrixXd random_baseline(size_t n, size_t dim, uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    for (Eigen::Index r = 0; r < out.rows(); ++r)
        for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) = rng.normal();
    return out;
}

std::optional<repstore::Store> load_random_weights_baseline(const std::filesystem::path& dir) {
    if (dir.empty() || !std::filesystem::exists(dir / "manifest.json")) return std::nullopt;
    auto store = repstore::read_store(dir);
    if (store.manifest.baseline != "random-weights")
        throw repstore::ConsistencyError(dir.string() + " is not flagged as a random-weights baseline");
    return store;
}

double alignment(const PcaResult& result, const estimators::EffectEstimate& psi) {
    if (result.k == 0) throw GeometryError("PCA result has no components");
    if (psi.vector.size() != result.components.cols()) throw GeometryError("estimate and components differ in dimension");
    if (psi.vector.norm() == 0.0) throw GeometryError("alignment with a zero estimate is undefined");
    return std::abs(estimators::cosine(Eigen::VectorXd(result.components.row(0).transpose()), psi.vector));
}

}  // namespace morphocause::geometry
