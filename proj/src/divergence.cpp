#include "morphocause/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace morphocause::divergence {

namespace {

std::vector<double> normalized(std::span<const double> p) {
    double total = 0.0;
    for (double x : p) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw DivergenceError("probabilities must be finite and nonnegative");
        total += x;
    }
    if (total <= 0.0) throw DivergenceError("distribution has no mass");
    std::vector<double> out(p.begin(), p.end());
    for (double& x : out) x /= total;
    return out;
}

double kl_to_mixture(const std::vector<double>& p, const std::vector<double>& m) {
    double acc = 0.0;
    for (size_t i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) acc += p[i] * std::log(p[i] / m[i]);
    return acc;
}

}  // namespace

double js_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw DivergenceError("distributions over different vocabularies");
    auto a = normalized(p);
    auto b = normalized(q);
    std::vector<double> m(a.size());
    for (size_t i = 0; i < a.size(); ++i) m[i] = 0.5 * a[i] + 0.5 * b[i];
    // Symmetric by construction: the two halves are summed in a fixed order
    // that does not depend on argument order.
    const double ka = kl_to_mixture(a, m);
    const double kb = kl_to_mixture(b, m);
    const double js = 0.5 * (std::min(ka, kb) + std::max(ka, kb));
    return std::clamp(js, 0.0, std::numbers::ln2);
}

double js_divergence(const MaskedDistribution& p, const MaskedDistribution& q) {
    if (p.vocab_ids != q.vocab_ids) throw DivergenceError("distributions over different vocabularies");
    return js_divergence(std::span<const double>(p.probs), std::span<const double>(q.probs));
}

Eigen::VectorXd approx_counterfactual_rep(const Eigen::VectorXd& h, const estimators::EffectEstimate& psi,
                                          FeatureValue source_value) {
    if (h.size() != psi.vector.size()) throw DivergenceError("representation and estimate differ in dimension");
    if (feature_of(source_value) != psi.feature) throw DivergenceError("source value does not match the estimate's feature");
    return is_positive_pole(source_value) ? Eigen::VectorXd(h - psi.vector) : Eigen::VectorXd(h + psi.vector);
}

std::vector<double> OutputHead::probs(const Eigen::VectorXd& h) const {
    if (weight.cols() != h.size()) throw DivergenceError("output head expects a different width");
    Eigen::VectorXd logits = weight * h;
    if (bias.size() == logits.size()) logits += bias;
    const double top = logits.maxCoeff();
    std::vector<double> out(static_cast<size_t>(logits.size()));
    double total = 0.0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
        out[static_cast<size_t>(i)] = std::exp(logits(i) - top);
        total += out[static_cast<size_t>(i)];
    }
    for (double& x : out) x /= total;
    return out;
}

Summary summarize(const std::vector<double>& values) {
    Summary s;
    s.n = values.size();
    if (values.empty()) return s;
    double total = 0.0;
    for (double v : values) total += v;
    s.mean = total / static_cast<double>(values.size());
    if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

MaskedDistribution distribution_row(const repstore::Store& store, size_t row) {
    MaskedDistribution d;
    d.vocab_ids = store.manifest.vocab_ids;
    if (d.vocab_ids.empty())
        for (size_t i = 0; i < store.manifest.dim; ++i) d.vocab_ids.push_back(static_cast<int64_t>(i));
    d.tokens = store.manifest.vocab_tokens;
    const auto r = store.rows.row(static_cast<Eigen::Index>(row));
    d.probs.assign(r.data(), r.data() + r.size());
    return d;
}

DivergenceReport divergence_report(const repstore::Store& dist_store,
                                   const std::vector<intervention::CounterfactualPair>& augmented,
                                   const std::string& position_kind) {
    if (dist_store.manifest.kind != repstore::StoreKind::Dist)
        throw DivergenceError("store is not a distribution store");
    if (dist_store.manifest.vocab_scope != "full")
        throw DivergenceError("JS divergence needs a full-vocabulary distribution store");

    DivergenceReport report;
    report.position_kind = position_kind.empty() ? dist_store.manifest.position_kind : position_kind;
    if (!augmented.empty()) report.feature = augmented.front().focus.feature;

    auto lookup = repstore::row_lookup(dist_store);
    auto row = [&](const std::string& id, const char* variant) -> std::optional<MaskedDistribution> {
        auto it = lookup.find({id, variant});
        if (it == lookup.end()) return std::nullopt;
        return distribution_row(dist_store, it->second);
    };

    std::vector<std::string> ids;
    for (const auto& p : augmented) ids.push_back(p.intervention_id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

    std::vector<double> raw, naive, paired;
    for (const auto& id : ids) {
        auto h = row(id, "original");
        auto cf = row(id, "counterfactual");
        if (!h || !cf) {
            report.skipped++;
            continue;
        }
        DivergenceRow r;
        r.intervention_id = id;
        r.raw = js_divergence(*h, *cf);
        raw.push_back(r.raw);
        if (auto hn = row(id, "hat_naive")) {
            r.naive = js_divergence(*hn, *cf);
            naive.push_back(*r.naive);
        }
        if (auto hp = row(id, "hat_paired")) {
            r.paired = js_divergence(*hp, *cf);
            paired.push_back(*r.paired);
        }
        report.rows.push_back(std::move(r));
    }
    report.raw = summarize(raw);
    report.naive = summarize(naive);
    report.paired = summarize(paired);
    return report;
}

std::string DivergenceReport::tsv() const {
    std::string out = "feature\tposition\tcomparison\tmean\tstd\tn\n";
    char buf[64];
    auto line = [&](const char* name, const Summary& s) {
        if (s.n == 0) return;
        std::snprintf(buf, sizeof buf, "\t%.6f\t%.6f\t%zu\n", s.mean, s.std, s.n);
        out += std::string(to_string(feature)) + "\t" + position_kind + "\t" + name + buf;
    };
    line("MProbs(h)||MProbs(h')", raw);
    line("MProbs(h_naive)||MProbs(h')", naive);
    line("MProbs(h_paired)||MProbs(h')", paired);
    return out;
}

nlohmann::json DivergenceReport::json() const {
    auto summary = [](const Summary& s) { return nlohmann::json{{"mean", s.mean}, {"std", s.std}, {"n", s.n}}; };
    nlohmann::json j;
    j["feature"] = std::string(to_string(feature));
    j["position_kind"] = position_kind;
    j["unit"] = "nats";
    j["raw"] = summary(raw);
    j["naive"] = summary(naive);
    j["paired"] = summary(paired);
    j["skipped"] = skipped;
    auto rows_json = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json x{{"intervention_id", r.intervention_id}, {"raw", r.raw}};
        if (r.naive) x["naive"] = *r.naive;
        if (r.paired) x["paired"] = *r.paired;
        rows_json.push_back(x);
    }
    j["rows"] = rows_json;
    return j;
}

}  // namespace morphocause::divergence
