#include "morphocause/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "morphocause/random.hpp"

namespace morphocause::estimators {

std::string to_string(EstimateKind kind) {
    switch (kind) {
        case EstimateKind::Paired: return "paired";
        case EstimateKind::Naive: return "naive";
        case EstimateKind::TemplatedPaired: return "templated_paired";
    }
    return "paired";
}

std::optional<EstimateKind> parse_estimate_kind(std::string_view text) {
    if (text == "paired") return EstimateKind::Paired;
    if (text == "naive") return EstimateKind::Naive;
    if (text == "templated_paired") return EstimateKind::TemplatedPaired;
    return std::nullopt;
}

std::string EffectEstimate::label() const {
    const char* prefix = kind == EstimateKind::Paired ? "P." : kind == EstimateKind::Naive ? "N." : "T.";
    return corpus.empty() ? std::string(prefix) : std::string(prefix) + " " + corpus;
}

namespace {

Eigen::VectorXd sum_range(const std::vector<Eigen::VectorXd>& v, size_t lo, size_t hi) {
    if (hi - lo <= 8) {
        Eigen::VectorXd acc = v[lo];
        for (size_t i = lo + 1; i < hi; ++i) acc += v[i];
        return acc;
    }
    const size_t mid = lo + (hi - lo) / 2;
    return sum_range(v, lo, mid) + sum_range(v, mid, hi);
}

void check_dims(const std::vector<Eigen::VectorXd>& v) {
    for (const auto& x : v)
        if (x.size() != v.front().size()) throw EstimatorError("vectors of different dimension");
}

}  // namespace

Eigen::VectorXd pairwise_sum(const std::vector<Eigen::VectorXd>& vectors) {
    if (vectors.empty()) throw EstimatorError("sum of an empty sequence");
    check_dims(vectors);
    return sum_range(vectors, 0, vectors.size());
}

Eigen::VectorXd pairwise_mean(const std::vector<Eigen::VectorXd>& vectors) {
    return pairwise_sum(vectors) / static_cast<double>(vectors.size());
}

ITEVector ite(const repstore::RepPair& pair) {
    if (pair.original.size() != pair.counterfactual.size())
        throw EstimatorError("pair " + pair.intervention_id + " has vectors of different dimension");
    const bool original_is_positive = is_positive_pole(pair.focus.source_value);
    const auto& pos = original_is_positive ? pair.original : pair.counterfactual;
    const auto& neg = original_is_positive ? pair.counterfactual : pair.original;
    return {pair.intervention_id, pos - neg};
}

EffectEstimate ate_paired(const std::vector<repstore::RepPair>& pairs, std::string corpus) {
    if (pairs.empty()) throw EstimatorError("paired estimator needs at least one pair");
    const Feature feature = pairs.front().focus.feature;
    std::vector<Eigen::VectorXd> ites;
    ites.reserve(pairs.size());
    for (const auto& p : pairs) {
        if (p.focus.feature != feature) throw EstimatorError("pairs mix gender and number interventions");
        ites.push_back(ite(p).vector);
    }
    return {pairwise_mean(ites), EstimateKind::Paired, feature, pairs.size(), std::move(corpus)};
}

EffectEstimate ate_paired(const std::vector<repstore::ValuePair>& pairs, Feature feature, std::string corpus) {
    if (pairs.empty()) throw EstimatorError("paired estimator needs at least one pair");
    std::vector<Eigen::VectorXd> ites;
    ites.reserve(pairs.size());
    for (const auto& p : pairs) {
        if (p.positive.size() != p.negative.size()) throw EstimatorError("pair " + p.intervention_id + " dim mismatch");
        ites.push_back(p.positive - p.negative);
    }
    return {pairwise_mean(ites), EstimateKind::TemplatedPaired, feature, pairs.size(), std::move(corpus)};
}

NaiveGroups naive_groups(const std::vector<repstore::RepPair>& pairs) {
    NaiveGroups g;
    for (const auto& p : pairs) (is_positive_pole(p.focus.source_value) ? g.positive : g.negative).push_back(p.original);
    return g;
}

EffectEstimate ate_naive(const NaiveGroups& groups, Feature feature, std::string corpus) {
    if (groups.positive.empty() || groups.negative.empty())
        throw EstimatorError("naive estimator needs originals of both values");
    Eigen::VectorXd pos = pairwise_mean(groups.positive);
    Eigen::VectorXd neg = pairwise_mean(groups.negative);
    if (pos.size() != neg.size()) throw EstimatorError("groups of different dimension");
    return {pos - neg, EstimateKind::Naive, feature, groups.positive.size() + groups.negative.size(),
            std::move(corpus)};
}

std::vector<repstore::RepPair> balanced_subsample(const std::vector<repstore::RepPair>& pairs, uint64_t seed) {
    std::vector<size_t> pos, neg;
    for (size_t i = 0; i < pairs.size(); ++i) (is_positive_pole(pairs[i].focus.source_value) ? pos : neg).push_back(i);
    Rng rng(seed);
    auto& major = pos.size() > neg.size() ? pos : neg;
    const size_t keep = std::min(pos.size(), neg.size());
    rng.shuffle(major.begin(), major.end());
    major.resize(keep);
    std::vector<size_t> chosen(pos);
    chosen.insert(chosen.end(), neg.begin(), neg.end());
    std::sort(chosen.begin(), chosen.end());
    std::vector<repstore::RepPair> out;
    out.reserve(chosen.size());
    for (size_t i : chosen) out.push_back(pairs[i]);
    return out;
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw EstimatorError("cosine of vectors with different dimension");
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw EstimatorError("cosine similarity is undefined for a zero vector");
    return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

double cosine(const EffectEstimate& a, const EffectEstimate& b) { return cosine(a.vector, b.vector); }

SimilarityMatrix estimate_matrix(const std::vector<EffectEstimate>& estimates) {
    if (estimates.size() < 2) throw EstimatorError("similarity matrix needs at least two estimates");
    const auto n = static_cast<Eigen::Index>(estimates.size());
    SimilarityMatrix m;
    m.values = Eigen::MatrixXd::Identity(n, n);
    for (const auto& e : estimates) m.labels.push_back(e.label());
    for (Eigen::Index i = 0; i < n; ++i) {
        cosine(estimates[static_cast<size_t>(i)], estimates[static_cast<size_t>(i)]);  // rejects zero vectors
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double c = cosine(estimates[static_cast<size_t>(i)], estimates[static_cast<size_t>(j)]);
            m.values(i, j) = c;
            m.values(j, i) = c;
        }
    }
    return m;
}

std::string SimilarityMatrix::tsv() const {
    std::string out = "estimate";
    for (const auto& l : labels) out += "\t" + l;
    out += "\n";
    char buf[32];
    for (size_t i = 0; i < labels.size(); ++i) {
        out += labels[i];
        for (size_t j = 0; j < labels.size(); ++j) {
            std::snprintf(buf, sizeof buf, "\t%.6f", values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            out += buf;
        }
        out += "\n";
    }
    return out;
}

nlohmann::json SimilarityMatrix::json() const {
    nlohmann::json j;
    j["labels"] = labels;
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        auto row = nlohmann::json::array();
        for (Eigen::Index k = 0; k < values.cols(); ++k) row.push_back(values(i, k));
        rows.push_back(row);
    }
    j["values"] = rows;
    return j;
}

void save_estimate(const std::filesystem::path& dir, const EffectEstimate& estimate, const std::string& model_id) {
    repstore::Manifest m;
    m.kind = repstore::StoreKind::Estimate;
    m.dim = static_cast<size_t>(estimate.vector.size());
    m.count = 1;
    m.model_id = model_id;
    m.extra["estimate_kind"] = to_string(estimate.kind);
    m.extra["feature"] = std::string(morphocause::to_string(estimate.feature));
    m.extra["sample_size"] = estimate.sample_size;
    m.extra["convention"] = estimate.convention();
    m.extra["corpus"] = estimate.corpus;
    // float32 loses precision; the exact double vector rides along in the manifest.
    m.extra["vector_f64"] = std::vector<double>(estimate.vector.data(), estimate.vector.data() + estimate.vector.size());
    m.index.push_back({"estimate", to_string(estimate.kind), 0});
    repstore::RowMatrixF rows = estimate.vector.cast<float>().transpose();
    repstore::write_store(dir, m, rows);
}

EffectEstimate load_estimate(const std::filesystem::path& dir) {
    auto store = repstore::read_store(dir);
    const auto& m = store.manifest;
    if (m.kind != repstore::StoreKind::Estimate || m.count != 1)
        throw repstore::ConsistencyError(dir.string() + " is not an estimate store");
    EffectEstimate e;
    auto kind = parse_estimate_kind(m.extra.value("estimate_kind", ""));
    auto feature = parse_feature(m.extra.value("feature", ""));
    if (!kind || !feature) throw repstore::ConsistencyError(dir.string() + ": estimate metadata incomplete");
    e.kind = *kind;
    e.feature = *feature;
    e.sample_size = m.extra.value("sample_size", size_t{0});
    e.corpus = m.extra.value("corpus", "");
    if (m.extra.contains("vector_f64")) {
        auto v = m.extra.at("vector_f64").get<std::vector<double>>();
        if (v.size() != m.dim) throw repstore::ConsistencyError(dir.string() + ": vector_f64 length differs from dim");
        e.vector = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    } else {
        e.vector = store.rows.row(0).cast<double>().transpose();
    }
    return e;
}

}  // namespace morphocause::estimators
