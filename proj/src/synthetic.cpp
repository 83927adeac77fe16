#include "morphocause/synthetic.hpp"

#include <cmath>

#include "morphocause/random.hpp"

namespace morphocause::synthetic {

namespace {

double quantize(double x) { return std::round(x * 4096.0) / 4096.0; }

std::string pair_id(const std::string& prefix, size_t i, Feature feature) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu", i);
    return intervention::make_intervention_id(prefix + "-" + buf, 1, feature);
}

}  // namespace

ExactEffectCorpus exact_effect_corpus(const ExactEffectConfig& config) {
    if (config.dim == 0) throw std::invalid_argument("dim must be positive");
    Rng rng(config.seed);
    const auto dim = static_cast<Eigen::Index>(config.dim);
    ExactEffectCorpus out;
    out.v = Eigen::VectorXd::Zero(dim);
    out.v(dim - 1) = 1.0;

    Eigen::VectorXd dir(dim);
    for (Eigen::Index i = 0; i < dim; ++i) dir(i) = rng.normal();
    out.confound = dir / dir.norm() * config.confound_norm;
    for (Eigen::Index i = 0; i < dim; ++i) out.confound(i) = quantize(out.confound(i));

    const FeatureValue pos = positive_pole(config.feature);
    const FeatureValue neg = negative_pole(config.feature);
    for (size_t i = 0; i < config.n_pairs; ++i) {
        const bool source_positive = i % 2 == 0;
        Eigen::VectorXd context(dim);
        for (Eigen::Index k = 0; k < dim; ++k)
            context(k) = quantize((source_positive ? out.confound(k) : 0.0) + config.context_sd * rng.normal());
        const Eigen::VectorXd rep_pos = context + out.v;
        const Eigen::VectorXd& rep_neg = context;

        repstore::RepPair p;
        p.intervention_id = pair_id(config.prefix, i, config.feature);
        p.focus = {1, config.feature, source_positive ? pos : neg, source_positive ? neg : pos};
        p.original = source_positive ? rep_pos : rep_neg;
        p.counterfactual = source_positive ? rep_neg : rep_pos;
        out.pairs.push_back(std::move(p));
    }
    return out;
}

std::vector<repstore::RepPair> confound_corpus(const ConfoundConfig& config) {
    Rng rng(config.seed);
    const auto dim = static_cast<Eigen::Index>(2 + config.noise_dims);
    const FeatureValue pos = positive_pole(config.feature);
    const FeatureValue neg = negative_pole(config.feature);
    std::vector<repstore::RepPair> out;
    const size_t total = config.n_train_pairs + config.n_test_pairs;
    for (size_t i = 0; i < total; ++i) {
        const double y = rng.uniform() < 0.5 ? 1.0 : -1.0;
        const double z = rng.uniform() < 0.5 + config.strength ? y : -y;
        Eigen::VectorXd noise(dim);
        for (Eigen::Index k = 0; k < dim; ++k) noise(k) = rng.normal();

        auto rep = [&](double label) {
            Eigen::VectorXd x(dim);
            x(0) = config.signal * label + config.signal_noise * noise(0);
            x(1) = z + config.context_noise * noise(1);
            for (Eigen::Index k = 2; k < dim; ++k) x(k) = noise(k);
            return x;
        };
        repstore::RepPair p;
        p.intervention_id = pair_id("confound", i, config.feature);
        p.focus = {1, config.feature, y > 0 ? pos : neg, y > 0 ? neg : pos};
        p.original = rep(y);
        p.counterfactual = rep(-y);
        p.split = i < config.n_train_pairs ? "train" : "test";
        out.push_back(std::move(p));
    }
    return out;
}

repstore::Store to_store(const std::vector<repstore::RepPair>& pairs, const std::string& position_kind,
                         const std::string& model_id) {
    repstore::Store s;
    const size_t dim = pairs.empty() ? 0 : static_cast<size_t>(pairs.front().original.size());
    s.manifest.dim = dim;
    s.manifest.count = 2 * pairs.size();
    s.manifest.model_id = model_id;
    s.manifest.position_kind = position_kind;
    s.rows.resize(static_cast<Eigen::Index>(2 * pairs.size()), static_cast<Eigen::Index>(dim));
    for (size_t i = 0; i < pairs.size(); ++i) {
        const auto& p = pairs[i];
        s.rows.row(static_cast<Eigen::Index>(2 * i)) = p.original.cast<float>().transpose();
        s.rows.row(static_cast<Eigen::Index>(2 * i + 1)) = p.counterfactual.cast<float>().transpose();
        s.manifest.index.push_back({p.intervention_id, "original", p.focus.token_index});
        s.manifest.index.push_back({p.intervention_id, "counterfactual", p.focus.token_index});
    }
    return s;
}

std::vector<intervention::CounterfactualPair> stub_augmented(const std::vector<repstore::RepPair>& pairs) {
    std::vector<intervention::CounterfactualPair> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        intervention::CounterfactualPair c;
        c.intervention_id = p.intervention_id;
        c.focus = p.focus;
        c.split = p.split;
        out.push_back(std::move(c));
    }
    return out;
}

divergence::OutputHead random_head(size_t vocab, size_t dim, double scale, uint64_t seed) {
    Rng rng(seed);
    divergence::OutputHead head;
    head.weight.resize(static_cast<Eigen::Index>(vocab), static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < head.weight.rows(); ++i)
        for (Eigen::Index j = 0; j < head.weight.cols(); ++j) head.weight(i, j) = scale * rng.normal();
    head.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab));
    return head;
}

repstore::Store distribution_store(const std::vector<repstore::RepPair>& pairs, const divergence::OutputHead& head,
                                   const estimators::EffectEstimate* naive, const estimators::EffectEstimate* paired,
                                   const std::string& position_kind) {
    const auto vocab = static_cast<size_t>(head.weight.rows());
    std::vector<std::vector<double>> rows;
    repstore::Store s;
    auto add = [&](const repstore::RepPair& p, const char* variant, const Eigen::VectorXd& h) {
        rows.push_back(head.probs(h));
        s.manifest.index.push_back({p.intervention_id, variant, p.focus.token_index});
    };
    for (const auto& p : pairs) {
        add(p, "original", p.original);
        add(p, "counterfactual", p.counterfactual);
        if (naive) add(p, "hat_naive", divergence::approx_counterfactual_rep(p.original, *naive, p.focus.source_value));
        if (paired)
            add(p, "hat_paired", divergence::approx_counterfactual_rep(p.original, *paired, p.focus.source_value));
    }
    s.manifest.kind = repstore::StoreKind::Dist;
    s.manifest.vocab_scope = "full";
    s.manifest.position_kind = position_kind;
    s.manifest.model_id = "synthetic";
    s.manifest.dim = vocab;
    s.manifest.count = rows.size();
    for (size_t i = 0; i < vocab; ++i) s.manifest.vocab_ids.push_back(static_cast<int64_t>(i));
    s.rows.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(vocab));
    for (size_t r = 0; r < rows.size(); ++r)
        for (size_t c = 0; c < vocab; ++c)
            s.rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = static_cast<float>(rows[r][c]);
    return s;
}

}  // namespace morphocause::synthetic
