#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "morphocause/intervention.hpp"

namespace morphocause::evaluation {

/// (dataset, feature, category) cell of the stratified sample. Category is the
/// focus noun's original value.
struct Stratum {
    std::string dataset;
    Feature feature = Feature::Gender;
    FeatureValue category = FeatureValue::Masc;

    std::string label() const;
    friend auto operator<=>(const Stratum&, const Stratum&) = default;
};

Stratum stratum_of(const intervention::CounterfactualPair& pair);

class SamplingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Strata are every dataset present x every feature present x both values of
/// that feature, in lexicographic order of their labels. Each gets n / strata
/// items; the first n % strata strata receive one extra. Throws SamplingError
/// naming the first stratum with too few pairs.
std::vector<intervention::CounterfactualPair> sample_for_evaluation(
    const std::vector<intervention::CounterfactualPair>& pairs, size_t n, uint64_t seed);

/// Columns: item, intervention_id, stratum, original, counterfactual, judgment
/// (left blank for the reviewer).
std::string review_sheet_tsv(const std::vector<intervention::CounterfactualPair>& sample);

struct WaldInterval {
    double lower = 0.0;
    double upper = 0.0;
    // True when x = 0 or x = n and the rule of three replaced the zero-width interval.
    bool degenerate = false;
};

/// p +- z sqrt(p (1 - p) / n), clipped to [0, 1].
WaldInterval wald_interval(size_t correct, size_t n, double z = 1.959963984540054);

struct StratumScore {
    std::string stratum;
    size_t n = 0;
    size_t correct = 0;
    double accuracy = 0.0;
};

struct EvaluationScore {
    size_t n = 0;
    size_t correct = 0;
    double accuracy = 0.0;
    WaldInterval interval;
    std::vector<StratumScore> strata;
};

/// Reads a filled review sheet. Judgments accept 1/0, yes/no, y/n, true/false,
/// correct/incorrect (case-insensitive); a blank judgment is an error.
EvaluationScore score_review_sheet(std::string_view tsv);

}  // namespace morphocause::evaluation
