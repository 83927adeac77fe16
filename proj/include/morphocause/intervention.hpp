#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "morphocause/conllu.hpp"
#include "morphocause/features.hpp"
#include "morphocause/lexicon.hpp"

namespace morphocause::intervention {

struct FocusSpec {
    int token_index = 0;
    Feature feature = Feature::Gender;
    FeatureValue source_value = FeatureValue::Masc;
    FeatureValue target_value = FeatureValue::Fem;

    friend bool operator==(const FocusSpec&, const FocusSpec&) = default;
};

struct CounterfactualPair {
    std::string intervention_id;
    conllu::Sentence original;
    conllu::Sentence counterfactual;
    FocusSpec focus;
    std::set<int> changed_indices;
    std::string dataset;
    std::string split;
};

enum class TraversalState { Normal, Dir, Indir };

/// A token the intervention needed to rewrite could not be reinflected.
class InterventionFailure : public std::runtime_error {
public:
    InterventionFailure(int token_index, const std::string& reason);
    int token_index() const { return token_index_; }
    const std::string& reason() const { return reason_; }

private:
    int token_index_;
    std::string reason_;
};

/// "<sent_id>:<token>:<gender|number>"
std::string make_intervention_id(std::string_view sent_id, int token_index, Feature feature);

/// NOUN tokens (not PROPN) annotated with `feature`; gender additionally
/// requires an animate lemma. Surface order.
std::vector<FocusSpec> find_focus_nouns(const conllu::DepTree& tree, Feature feature,
                                        const lexicon::AnimacyLexicon& animacy);

/// Throws std::invalid_argument when `focus` does not describe a noun carrying
/// its source value, InterventionFailure when a required token cannot be rewritten.
CounterfactualPair reinflect_tree(const conllu::DepTree& tree, const FocusSpec& focus,
                                  const lexicon::Lexicon& lexicon);

/// The focus spec that undoes `focus` on the counterfactual.
FocusSpec reversed(const FocusSpec& focus);

struct FailureRecord {
    std::string sent_id;
    int token_index = 0;
    Feature feature = Feature::Gender;
    std::string reason;
    // False for notes (conjoined focus nouns) where the pair was still produced.
    bool aborted = true;
};

struct FocusTally {
    std::map<FeatureValue, size_t> focus;      // eligible focus instances by source value
    std::map<FeatureValue, size_t> succeeded;  // pairs produced by source value
};

struct AugmentedCorpus {
    Feature feature = Feature::Gender;
    std::string dataset;
    std::string split;
    // Originals that yielded at least one pair, in corpus order.
    std::vector<conllu::Sentence> originals;
    // Corpus order, then token index.
    std::vector<CounterfactualPair> pairs;
    std::vector<FailureRecord> failures;
    FocusTally tally;
    size_t sentences = 0;
};

struct AugmentOptions {
    std::string dataset;
    std::string split;
    // 0 picks the hardware concurrency, capped by MORPHOCAUSE_THREADS.
    unsigned threads = 0;
};

AugmentedCorpus augment_corpus(const std::vector<conllu::Sentence>& corpus, Feature feature,
                               const lexicon::Lexicon& lexicon, const AugmentOptions& options = {});

/// CoNLL-U with one original block per sentence followed by its counterfactuals.
std::string serialize_augmented(const AugmentedCorpus& corpus);
/// TSV: sent_id, token_index, feature, reason.
std::string failure_log_tsv(const std::vector<FailureRecord>& failures);

/// Rebuilds pairs from the metadata written by serialize_augmented. Several
/// files may be concatenated; dataset, split and feature come from each block.
std::vector<CounterfactualPair> read_augmented(std::string_view text);

/// Thread count honouring MORPHOCAUSE_THREADS.
unsigned worker_threads(unsigned requested = 0);

}  // namespace morphocause::intervention
