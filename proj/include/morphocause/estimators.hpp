#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphocause/features.hpp"
#include "morphocause/repstore.hpp"

namespace morphocause::estimators {

enum class EstimateKind { Paired, Naive, TemplatedPaired };

std::string to_string(EstimateKind kind);
std::optional<EstimateKind> parse_estimate_kind(std::string_view text);

class EstimatorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Effect vector oriented as positive pole minus negative pole (Masc - Fem,
/// Sing - Plur) whatever variant was the corpus original.
struct EffectEstimate {
    Eigen::VectorXd vector;
    EstimateKind kind = EstimateKind::Paired;
    Feature feature = Feature::Gender;
    size_t sample_size = 0;
    std::string corpus;

    std::string convention() const { return convention_label(feature); }
    /// "P. ancora" style label used in similarity matrices.
    std::string label() const;
};

struct ITEVector {
    std::string intervention_id;
    Eigen::VectorXd vector;
};

/// Pairwise (tree) summation of equally sized vectors, in double.
Eigen::VectorXd pairwise_sum(const std::vector<Eigen::VectorXd>& vectors);
Eigen::VectorXd pairwise_mean(const std::vector<Eigen::VectorXd>& vectors);

ITEVector ite(const repstore::RepPair& pair);

EffectEstimate ate_paired(const std::vector<repstore::RepPair>& pairs, std::string corpus = "");
/// Same estimator over templated minimal pairs given as (positive, negative).
EffectEstimate ate_paired(const std::vector<repstore::ValuePair>& pairs, Feature feature, std::string corpus = "");

/// Original-variant representations split by the focus noun's value.
struct NaiveGroups {
    std::vector<Eigen::VectorXd> positive;
    std::vector<Eigen::VectorXd> negative;
};
NaiveGroups naive_groups(const std::vector<repstore::RepPair>& pairs);

/// mean(positive) - mean(negative) over original sentences. This ignores the
/// do-operator, so it targets the correlational effect rather than the ATE.
EffectEstimate ate_naive(const NaiveGroups& groups, Feature feature, std::string corpus = "");

/// Down-samples the majority category so both source values are equally frequent.
std::vector<repstore::RepPair> balanced_subsample(const std::vector<repstore::RepPair>& pairs, uint64_t seed);

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
double cosine(const EffectEstimate& a, const EffectEstimate& b);

struct SimilarityMatrix {
    std::vector<std::string> labels;
    Eigen::MatrixXd values;

    std::string tsv() const;
    nlohmann::json json() const;
};

SimilarityMatrix estimate_matrix(const std::vector<EffectEstimate>& estimates);

/// Estimates travel as one-row repstore directories.
void save_estimate(const std::filesystem::path& dir, const EffectEstimate& estimate, const std::string& model_id = "");
EffectEstimate load_estimate(const std::filesystem::path& dir);

}  // namespace morphocause::estimators
