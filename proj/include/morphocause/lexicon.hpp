#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "morphocause/conllu.hpp"
#include "morphocause/features.hpp"

namespace morphocause::lexicon {

/// No rule or exception covers the request. Callers abort the single
/// intervention that needed this form.
class ReinflectionFailure : public std::runtime_error {
public:
    ReinflectionFailure(std::string form, std::string upos, Feature feature, const std::string& reason);
    const std::string& form() const { return form_; }
    const std::string& upos() const { return upos_; }
    Feature feature() const { return feature_; }

private:
    std::string form_;
    std::string upos_;
    Feature feature_;
};

/// Malformed lexicon file.
class LexiconError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class AnimacyLexicon {
public:
    AnimacyLexicon() = default;
    explicit AnimacyLexicon(const std::vector<std::string>& lemmas);

    /// One lemma per line; blank lines and '#' comments are ignored.
    static AnimacyLexicon read(std::istream& in);

    bool is_animate(std::string_view lemma) const;
    void insert(std::string_view lemma);
    size_t size() const { return lemmas_.size(); }

private:
    std::set<std::string, std::less<>> lemmas_;  // case-folded
};

struct SuppletivePair {
    std::string lemma_masc;
    std::string form_masc;
    std::string lemma_fem;
    std::string form_fem;
};

/// Surface form plus the lemma it should carry afterwards. The lemma only
/// changes for suppletive pairs (mujer -> hombre).
struct Reinflection {
    std::string form;
    std::string lemma;
};

struct ExceptionEntry {
    std::string form;
    Pos pos;
    Feature feature;
    FeatureValue target;
    std::string output;
};

/// Ordered suffix rules per part of speech and feature, closed-class
/// paradigm tables, and a form-level exception map consulted first.
class ReinflectionRuleSet {
public:
    /// Built-in Spanish rules and paradigms with an empty exception map.
    static ReinflectionRuleSet builtin();

    /// Adds `entry` and, unless one is already present, its inverse.
    void add_exception(const ExceptionEntry& entry);
    /// Five TSV columns: form, upos, feature, target, output.
    void read_exceptions(std::istream& in);
    const std::vector<ExceptionEntry>& exceptions() const { return exception_list_; }

    /// Throws ReinflectionFailure when nothing applies. `feats` (when given)
    /// supplies Tense/Mood/Person/VerbForm for verbs.
    std::string apply(std::string_view form, std::string_view lemma, Pos pos, Feature feature, FeatureValue target,
                      const conllu::Feats* feats = nullptr) const;

    struct SuffixRule {
        std::string name;
        Feature feature;
        FeatureValue target;
        // Receives the lowercased form and lemma; returns the lowercased result.
        std::function<std::optional<std::u32string>(const std::u32string&, const std::u32string&)> rewrite;
    };

    const std::vector<SuffixRule>& nominal_rules() const { return nominal_rules_; }

private:
    using ExceptionKey = std::tuple<std::string, Pos, Feature, FeatureValue>;

    std::optional<std::u32string> apply_paradigm(const std::u32string& lowered, Pos pos, Feature feature,
                                                 FeatureValue target) const;
    std::u32string apply_verb(const std::u32string& lowered, const std::u32string& lemma, Feature feature,
                              FeatureValue target, const conllu::Feats* feats, std::string_view original,
                              Pos pos) const;

    std::vector<SuffixRule> nominal_rules_;
    // Rows of {MascSing, FemSing, MascPlur, FemPlur}; empty cells mean the form does not exist.
    std::vector<std::array<std::u32string, 4>> det_paradigms_;
    std::vector<std::array<std::u32string, 4>> pron_paradigms_;
    std::map<ExceptionKey, std::string> exceptions_;
    std::vector<ExceptionEntry> exception_list_;
};

/// Lexicalized Masc/Fem pairs that share a hypothetical lemma.
class SuppletivePairTable {
public:
    /// Four TSV columns: lemma_m, form_m, lemma_f, form_f.
    static SuppletivePairTable read(std::istream& in);

    void add(SuppletivePair pair);
    const std::vector<SuppletivePair>& entries() const { return pairs_; }

    /// Maps a singular or regularly pluralized member of a pair to the other
    /// member. `lemma` selects the pair; `target` is the gender wanted.
    std::optional<Reinflection> lookup(std::string_view form, std::string_view lemma, FeatureValue target,
                                       const ReinflectionRuleSet& rules) const;

private:
    std::vector<SuppletivePair> pairs_;
};

/// Everything reinflection needs, immutable after loading.
struct Lexicon {
    AnimacyLexicon animacy;
    SuppletivePairTable suppletive;
    ReinflectionRuleSet rules = ReinflectionRuleSet::builtin();

    /// Reads animate_lemmas.txt, suppletive.tsv and exceptions.tsv from `dir`.
    static Lexicon load(const std::filesystem::path& dir);
    /// The lexicon shipped under data/lexicon.
    static Lexicon load_default();

    bool is_animate(std::string_view lemma) const { return animacy.is_animate(lemma); }

    Reinflection reinflect_token(std::string_view form, std::string_view lemma, Pos pos, Feature feature,
                                 FeatureValue target, const conllu::Feats* feats = nullptr) const;
};

std::filesystem::path default_lexicon_dir();

/// Surface form agreeing with `target`. Case of the first letter (or all-caps)
/// is preserved; syncretic forms come back unchanged. Throws ReinflectionFailure.
std::string reinflect(const Lexicon& lexicon, std::string_view form, std::string_view lemma, std::string_view upos,
                      Feature feature, FeatureValue target, const conllu::Feats* feats = nullptr);

/// Fuses adjacent "a"/"de" + "el" into multiword tokens ("al", "del") and drops
/// contraction ranges whose determiner is no longer "el". When `only` is
/// non-empty, new contractions are created only where the determiner index is
/// in `only`.
conllu::Sentence apply_contractions(const conllu::Sentence& sentence, const std::set<int>& only = {});

/// Removes every a/de + el contraction range, leaving the two tokens visible.
conllu::Sentence split_contractions(const conllu::Sentence& sentence);

bool is_contraction(const conllu::Sentence& sentence, const conllu::MultiwordToken& mwt);

}  // namespace morphocause::lexicon
