#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphocause/estimators.hpp"
#include "morphocause/intervention.hpp"
#include "morphocause/repstore.hpp"

namespace morphocause::divergence {

class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MaskedDistribution {
    std::vector<int64_t> vocab_ids;
    std::vector<double> probs;
    // Surface strings parallel to vocab_ids, when the store recorded them.
    std::vector<std::string> tokens;
};

/// Jensen-Shannon divergence in nats over raw probability vectors. Each input
/// is renormalized first; 0 log 0 = 0.
double js_divergence(std::span<const double> p, std::span<const double> q);
/// Requires identical vocab_ids.
double js_divergence(const MaskedDistribution& p, const MaskedDistribution& q);

/// h - psi when the source value is the positive pole (Masc, Sing), h + psi
/// otherwise: the approximation moves h toward the opposite value.
Eigen::VectorXd approx_counterfactual_rep(const Eigen::VectorXd& h, const estimators::EffectEstimate& psi,
                                          FeatureValue source_value);

/// Linear output layer followed by softmax; maps representations to MProbs.
struct OutputHead {
    Eigen::MatrixXd weight;  // vocab x dim
    Eigen::VectorXd bias;    // vocab

    std::vector<double> probs(const Eigen::VectorXd& h) const;
};

struct Summary {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation (n - 1); 0 for n < 2
    size_t n = 0;
};

Summary summarize(const std::vector<double>& values);

struct DivergenceRow {
    std::string intervention_id;
    double raw = 0.0;                  // JSD(MProbs(h), MProbs(h'))
    std::optional<double> naive;       // JSD(MProbs(h_hat naive), MProbs(h'))
    std::optional<double> paired;      // JSD(MProbs(h_hat paired), MProbs(h'))
};

struct DivergenceReport {
    std::string position_kind;
    Feature feature = Feature::Gender;
    std::vector<DivergenceRow> rows;
    Summary raw;
    Summary naive;
    Summary paired;
    size_t skipped = 0;

    /// Table layout: feature, position, comparison, mean, std, n.
    std::string tsv() const;
    nlohmann::json json() const;
};

/// Rows of a full-vocabulary distribution store. Variants: original,
/// counterfactual, and optionally hat_naive / hat_paired.
DivergenceReport divergence_report(const repstore::Store& dist_store,
                                   const std::vector<intervention::CounterfactualPair>& augmented,
                                   const std::string& position_kind);

MaskedDistribution distribution_row(const repstore::Store& store, size_t row);

}  // namespace morphocause::divergence
