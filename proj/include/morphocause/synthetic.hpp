#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "morphocause/divergence.hpp"
#include "morphocause/estimators.hpp"
#include "morphocause/features.hpp"
#include "morphocause/intervention.hpp"
#include "morphocause/repstore.hpp"

// Constructed corpora with known ground truth for checking the estimators,
// geometry and probes without a language model.
namespace morphocause::synthetic {

struct ExactEffectConfig {
    size_t n_pairs = 5000;
    size_t dim = 64;
    double context_sd = 0.5;
    // Norm of the context shift applied to positive-pole originals only.
    double confound_norm = 5.0;
    Feature feature = Feature::Gender;
    uint64_t seed = 1;
    std::string prefix = "syn";
};

/// rep = context + value * v with value 1 for the positive pole and 0 for the
/// negative pole; v is the last basis vector. Contexts are quantized to
/// multiples of 2^-12 so every ITE is exactly v, even after float32 storage.
struct ExactEffectCorpus {
    Eigen::VectorXd v;
    Eigen::VectorXd confound;
    std::vector<repstore::RepPair> pairs;
};

ExactEffectCorpus exact_effect_corpus(const ExactEffectConfig& config);

struct ConfoundConfig {
    size_t n_train_pairs = 2000;
    size_t n_test_pairs = 1000;
    // P(context agrees with the label) - 0.5 among originals.
    double strength = 0.3;
    double signal = 0.5;
    double signal_noise = 1.0;
    double context_noise = 0.1;
    size_t noise_dims = 8;
    Feature feature = Feature::Gender;
    uint64_t seed = 7;
};

/// Column 0 carries the feature (signal * label + noise); column 1 carries a
/// context variable that agrees with the original label with probability
/// 0.5 + strength; the rest is noise. Counterfactuals flip the label and keep
/// every noise draw and the context.
std::vector<repstore::RepPair> confound_corpus(const ConfoundConfig& config);

/// Pairs as a representation store (variants original / counterfactual).
repstore::Store to_store(const std::vector<repstore::RepPair>& pairs, const std::string& position_kind,
                         const std::string& model_id = "synthetic");

/// Minimal augmented-corpus entries (id, focus, split) matching `pairs`.
std::vector<intervention::CounterfactualPair> stub_augmented(const std::vector<repstore::RepPair>& pairs);

/// Output head with i.i.d. N(0, scale^2) weights and zero bias.
divergence::OutputHead random_head(size_t vocab, size_t dim, double scale, uint64_t seed);

/// Full-vocabulary distribution store with rows for the original and
/// counterfactual variants and, when an estimate is given, for the
/// approximated counterfactuals (hat_naive / hat_paired).
repstore::Store distribution_store(const std::vector<repstore::RepPair>& pairs, const divergence::OutputHead& head,
                                   const estimators::EffectEstimate* naive, const estimators::EffectEstimate* paired,
                                   const std::string& position_kind = "masked");

}  // namespace morphocause::synthetic
