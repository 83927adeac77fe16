#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <json.hpp>

#include "morphocause/estimators.hpp"
#include "morphocause/repstore.hpp"

namespace morphocause::geometry {

class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rows 2i and 2i+1 are pair i's members minus their mean. Computed as
/// +-(a - b) / 2 so the two rows cancel exactly.
Eigen::MatrixXd paired_center(const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& pairs);
/// Same operation on an interleaved matrix (pair i in rows 2i, 2i+1).
Eigen::MatrixXd paired_center(const Eigen::MatrixXd& interleaved);

struct PcaResult {
    Eigen::MatrixXd components;  // k x dim, orthonormal rows, descending eigenvalue
    std::vector<double> eigenvalues;
    std::vector<double> explained_variance_ratio;
    size_t k = 0;
    double total_variance = 0.0;

    nlohmann::json scree_json() const;
    std::string scree_tsv() const;
};

/// Top-k principal directions of the column-centred rows (covariance with 1/rows
/// normalization). Each component's first nonzero coordinate is positive. An
/// all-zero matrix gives an empty result.
PcaResult pca(const Eigen::MatrixXd& rows, size_t k);

/// Inner products with `component`; a non-unit component is normalized and
/// `renormalized` (when given) reports it.
std::vector<double> project(const Eigen::MatrixXd& reps, const Eigen::VectorXd& component,
                            bool* renormalized = nullptr);

/// i.i.d. standard-normal rows.
Eigen::MatrixXd random_baseline(size_t n, size_t dim, uint64_t seed);

/// A randomized-weights representation store, if one exists at `dir`.
std::optional<repstore::Store> load_random_weights_baseline(const std::filesystem::path& dir);

/// |cos(component 1, psi)|.
double alignment(const PcaResult& result, const estimators::EffectEstimate& psi);

}  // namespace morphocause::geometry
