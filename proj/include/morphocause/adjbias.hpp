#pragma once

#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphocause/divergence.hpp"
#include "morphocause/intervention.hpp"
#include "morphocause/repstore.hpp"

namespace morphocause::adjbias {

struct AdjectiveEntry {
    std::string gloss;
    std::string masc_form;
    std::string fem_form;

    bool syncretic() const { return masc_form == fem_form; }
    friend bool operator==(const AdjectiveEntry&, const AdjectiveEntry&) = default;
};

/// A form is not a single item of the distribution's vocabulary.
class MissingVocab : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
/// The adjective has zero probability, so its log is undefined.
class MissingMass : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The 30 adjectives used for the bias study.
const std::vector<AdjectiveEntry>& default_adjectives();
/// TSV: gloss, masc_form, fem_form. '#' lines are comments.
std::vector<AdjectiveEntry> read_adjectives(std::istream& in);

/// ln(p(masc) + p(fem)); a syncretic form is counted once. Vocabulary entries
/// may carry a leading word-boundary marker ("Ġ", "▁").
double adjective_logprob(const divergence::MaskedDistribution& dist, const AdjectiveEntry& entry);

/// Median with the midpoint convention for even counts.
double median(std::vector<double> values);

struct AdjectiveBiasScore {
    AdjectiveEntry adjective;
    double score = 0.0;  // > 0 masculine-biased, < 0 feminine-biased
    size_t n_instances = 0;
    size_t skipped = 0;  // instances with no probability mass
    bool empty = true;   // no usable instance
};

struct BiasResult {
    std::vector<AdjectiveBiasScore> scores;  // list order
    std::vector<std::string> excluded;       // adjectives whose forms are missing from the vocabulary
    size_t ineligible = 0;                   // interventions without exactly one amod dependent
    size_t missing_rows = 0;                 // eligible interventions lacking a variant in the store

    std::string tsv() const;
    /// Scores sorted by value, for bar plots.
    nlohmann::json json() const;
};

/// One masked-adjective distribution per variant: (masc variant, fem variant).
struct DistributionPair {
    divergence::MaskedDistribution masc;
    divergence::MaskedDistribution fem;
};

BiasResult bias_scores(const std::vector<DistributionPair>& instances, const std::vector<AdjectiveEntry>& adjectives);

/// Eligible interventions are gender interventions whose focus noun has
/// exactly one amod dependent; the store holds adjective-position
/// distributions for both variants.
BiasResult bias_scores(const repstore::Store& store, const std::vector<intervention::CounterfactualPair>& augmented,
                       const std::vector<AdjectiveEntry>& adjectives);

}  // namespace morphocause::adjbias
