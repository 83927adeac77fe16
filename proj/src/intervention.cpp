#include "morphocause/intervention.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <optional>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "morphocause/utf8.hpp"

namespace morphocause::intervention {

using conllu::DepTree;
using conllu::Sentence;
using conllu::Token;

InterventionFailure::InterventionFailure(int token_index, const std::string& reason)
    : std::runtime_error("token " + std::to_string(token_index) + ": " + reason),
      token_index_(token_index),
      reason_(reason) {}

std::string make_intervention_id(std::string_view sent_id, int token_index, Feature feature) {
    return std::string(sent_id) + ":" + std::to_string(token_index) + ":" +
           (feature == Feature::Gender ? "gender" : "number");
}

FocusSpec reversed(const FocusSpec& focus) {
    return {focus.token_index, focus.feature, focus.target_value, focus.source_value};
}

std::vector<FocusSpec> find_focus_nouns(const DepTree& tree, Feature feature, const lexicon::AnimacyLexicon& animacy) {
    std::vector<FocusSpec> out;
    const Sentence& s = tree.sentence();
    for (const Token& t : s.tokens) {
        if (t.upos != "NOUN") continue;
        auto value = t.feats.get(to_string(feature));
        if (!value) continue;
        auto parsed = parse_feature_value(*value);
        if (!parsed || feature_of(*parsed) != feature) continue;
        if (feature == Feature::Gender && !animacy.is_animate(t.lemma)) continue;
        out.push_back({t.index, feature, *parsed, opposite(*parsed)});
    }
    return out;
}

namespace {

bool is_finite(const Token& t) {
    if (t.upos != "VERB" && t.upos != "AUX") return false;
    if (auto vf = t.feats.get("VerbForm")) return *vf == "Fin";
    return t.feats.has("Person");
}

std::set<int> diff_indices(const Sentence& a, const Sentence& b) {
    std::set<int> out;
    for (size_t i = 0; i < a.size() && i < b.size(); ++i) {
        const Token& x = a.tokens[i];
        const Token& y = b.tokens[i];
        if (x.form != y.form || x.lemma != y.lemma || !(x.feats == y.feats)) out.insert(x.index);
    }
    return out;
}

class TreeRewriter {
public:
    TreeRewriter(const DepTree& tree, const FocusSpec& focus, const lexicon::Lexicon& lexicon)
        : tree_(tree), orig_(tree.sentence()), focus_(focus), lexicon_(lexicon), out_(tree.sentence()) {}

    Sentence run() {
        for (int child : tree_.children(0)) visit(child, 0, TraversalState::Normal);
        refuse_broken_multiwords();
        if (!determiners_.empty()) out_ = lexicon::apply_contractions(out_, determiners_);
        if (out_.meta("text")) out_.set_meta("text", conllu::surface_text(out_));
        return std::move(out_);
    }

private:
    std::string_view deprel(int index) const { return index == 0 ? "root" : orig_.token(index).base_deprel(); }

    void visit(int node, int parent, TraversalState state) {
        bool is_focus = false;
        bool nsubj = false;
        const Token& tok = orig_.token(node);
        const std::string_view rel = tok.base_deprel();

        if (state == TraversalState::Normal && node == focus_.token_index) {
            rewrite(node, Pos::Noun, true);
            is_focus = true;
            // A coordinated subject keeps the head's agreement with the whole conjunction.
            if (rel == "nsubj" && !has_conjunct(node)) rewrite_governing_head(parent);
        }
        if (state == TraversalState::Dir) {
            if (rel == "det") rewrite(node, tok.upos == "PRON" ? Pos::Pron : Pos::Det, false);
            if (rel == "amod") rewrite(node, Pos::Adj, false);
            if (rel == "nsubj") {
                rewrite_subject(node);
                nsubj = true;
            }
            if (rel == "cop") rewrite(node, Pos::Aux, false);
        }
        if (state == TraversalState::Indir && rel == "amod" && deprel(parent) == "amod")
            rewrite(node, Pos::Adj, false);

        for (int child : tree_.children(node)) {
            if (is_focus || nsubj)
                visit(child, node, TraversalState::Dir);
            else if (state == TraversalState::Dir || state == TraversalState::Indir)
                visit(child, node, TraversalState::Indir);
            else
                visit(child, node, TraversalState::Normal);
        }
    }

    bool has_conjunct(int node) const {
        for (int child : tree_.children(node))
            if (deprel(child) == "conj") return true;
        return false;
    }

    void rewrite_subject(int node) {
        const Token& tok = orig_.token(node);
        if (tok.upos == "PRON") {
            rewrite(node, Pos::Pron, false);
            return;
        }
        if (tok.upos != "NOUN") throw InterventionFailure(node, "nominal subject '" + tok.form + "' is not a common noun");
        if (focus_.feature == Feature::Gender && !lexicon_.is_animate(tok.lemma))
            throw InterventionFailure(node, "nominal subject '" + tok.form + "' is not animate");
        rewrite(node, Pos::Noun, false);
    }

    void rewrite_governing_head(int parent) {
        if (parent == 0) return;
        const Token& head = orig_.token(parent);
        // Copular clauses are headed by the predicate; an adjectival one agrees.
        if (head.upos == "ADJ") rewrite(parent, Pos::Adj, false);
        if (is_finite(head)) rewrite(parent, Pos::Verb, false);
        for (int c : tree_.children(parent)) {
            const Token& t = orig_.token(c);
            auto rel = t.base_deprel();
            if ((rel == "aux" || rel == "cop") && is_finite(t)) rewrite(c, Pos::Aux, false);
        }
    }

    void rewrite(int index, Pos pos, bool is_focus) {
        Token& tok = out_.token(index);
        const std::string key(to_string(focus_.feature));
        auto value = tok.feats.get(key);
        if (!is_focus && value && *value != to_string(focus_.source_value)) return;
        const bool verbal = pos == Pos::Verb || pos == Pos::Aux;
        if (verbal && focus_.feature == Feature::Gender) return;
        try {
            auto r = lexicon_.reinflect_token(tok.form, tok.lemma, pos, focus_.feature, focus_.target_value,
                                              &tok.feats);
            tok.form = r.form;
            tok.lemma = r.lemma;
        } catch (const lexicon::ReinflectionFailure& e) {
            throw InterventionFailure(index, e.what());
        }
        if (value || is_focus) tok.feats.set(key, to_string(focus_.target_value));
        if (pos == Pos::Det) determiners_.insert(index);
    }

    // Non-contraction ranges (clitic clusters) are re-fused by concatenation
    // when that is how the original was spelled.
    void refuse_broken_multiwords() {
        for (auto& mwt : out_.multiword) {
            if (lexicon::is_contraction(orig_, mwt)) continue;
            std::string before, after;
            bool touched = false;
            int first_changed = 0;
            for (int i = mwt.first; i <= mwt.last; ++i) {
                before += orig_.token(i).form;
                after += out_.token(i).form;
                if (orig_.token(i).form != out_.token(i).form && !touched) {
                    touched = true;
                    first_changed = i;
                }
            }
            if (!touched) continue;
            if (utf8::to_lower(before) != utf8::to_lower(mwt.form))
                throw InterventionFailure(first_changed, "multiword token '" + mwt.form + "' cannot be re-fused");
            auto casing = utf8::casing_of(utf8::decode(mwt.form));
            mwt.form = utf8::encode(utf8::apply_casing(utf8::to_lower(utf8::decode(after)), casing));
        }
    }

    const DepTree& tree_;
    const Sentence& orig_;
    FocusSpec focus_;
    const lexicon::Lexicon& lexicon_;
    Sentence out_;
    std::set<int> determiners_;
};

}  // namespace

CounterfactualPair reinflect_tree(const DepTree& tree, const FocusSpec& focus, const lexicon::Lexicon& lexicon) {
    const Sentence& s = tree.sentence();
    if (focus.token_index < 1 || focus.token_index > static_cast<int>(s.size()))
        throw std::invalid_argument("focus token out of range");
    const Token& noun = s.token(focus.token_index);
    if (noun.upos != "NOUN") throw std::invalid_argument("focus token is not a NOUN");
    if (feature_of(focus.source_value) != focus.feature || focus.target_value != opposite(focus.source_value))
        throw std::invalid_argument("focus values do not match the feature");
    if (noun.feats.get(to_string(focus.feature)) != std::string(to_string(focus.source_value)))
        throw std::invalid_argument("focus token does not carry the source value");

    CounterfactualPair pair;
    pair.original = s;
    pair.counterfactual = TreeRewriter(tree, focus, lexicon).run();
    pair.focus = focus;
    pair.changed_indices = diff_indices(pair.original, pair.counterfactual);
    pair.intervention_id = make_intervention_id(s.sent_id, focus.token_index, focus.feature);
    return pair;
}

unsigned worker_threads(unsigned requested) {
    unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MORPHOCAUSE_THREADS"); env && *env) {
        char* end = nullptr;
        long cap = std::strtol(env, &end, 10);
        if (end != env && cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return std::max(1u, n);
}

namespace {

struct SentenceResult {
    std::vector<FocusSpec> focus;
    std::vector<CounterfactualPair> pairs;
    std::vector<FailureRecord> failures;
};

SentenceResult process_sentence(const Sentence& s, Feature feature, const lexicon::Lexicon& lexicon) {
    SentenceResult r;
    std::optional<DepTree> tree;
    try {
        tree.emplace(s);
    } catch (const conllu::StructureError& e) {
        r.failures.push_back({s.sent_id, 0, feature, e.what(), true});
        return r;
    }
    r.focus = find_focus_nouns(*tree, feature, lexicon.animacy);
    for (const auto& f : r.focus) {
        try {
            r.pairs.push_back(reinflect_tree(*tree, f, lexicon));
        } catch (const InterventionFailure& e) {
            r.failures.push_back({s.sent_id, f.token_index, feature, e.what(), true});
            continue;
        }
        for (int c : tree->children(f.token_index)) {
            const Token& t = s.token(c);
            if (t.base_deprel() == "conj" && (t.upos == "NOUN" || t.upos == "PROPN")) {
                r.failures.push_back({s.sent_id, f.token_index, feature,
                                      "conjoined focus noun: conjunct " + std::to_string(c) + " left unchanged",
                                      false});
                break;
            }
        }
    }
    return r;
}

}  // namespace

AugmentedCorpus augment_corpus(const std::vector<Sentence>& corpus, Feature feature, const lexicon::Lexicon& lexicon,
                               const AugmentOptions& options) {
    std::vector<SentenceResult> results(corpus.size());
    const unsigned threads = std::min<size_t>(worker_threads(options.threads), std::max<size_t>(1, corpus.size()));
    if (threads <= 1) {
        for (size_t i = 0; i < corpus.size(); ++i) results[i] = process_sentence(corpus[i], feature, lexicon);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (size_t i = next++; i < corpus.size(); i = next++)
                    results[i] = process_sentence(corpus[i], feature, lexicon);
            });
        }
    }

    AugmentedCorpus out;
    out.feature = feature;
    out.dataset = options.dataset;
    out.split = options.split;
    out.sentences = corpus.size();
    for (size_t i = 0; i < corpus.size(); ++i) {
        auto& r = results[i];
        for (const auto& f : r.focus) out.tally.focus[f.source_value]++;
        for (auto& p : r.pairs) {
            out.tally.succeeded[p.focus.source_value]++;
            p.dataset = options.dataset;
            p.split = options.split;
        }
        if (!r.pairs.empty()) out.originals.push_back(corpus[i]);
        std::move(r.pairs.begin(), r.pairs.end(), std::back_inserter(out.pairs));
        std::move(r.failures.begin(), r.failures.end(), std::back_inserter(out.failures));
    }
    return out;
}

namespace {

const char* const kAugmentKeys[] = {"variant", "source_sent_id", "feature", "intervention_id",
                                    "focus_token", "dataset", "split"};

void stamp_common(Sentence& s, const std::string& source, Feature feature, const std::string& dataset,
                  const std::string& split) {
    s.set_meta("source_sent_id", source);
    s.set_meta("feature", to_string(feature));
    if (!dataset.empty()) s.set_meta("dataset", dataset);
    if (!split.empty()) s.set_meta("split", split);
}

void strip_augment_keys(Sentence& s) {
    for (const char* k : kAugmentKeys) s.erase_meta(k);
}

}  // namespace

std::string serialize_augmented(const AugmentedCorpus& corpus) {
    std::string out;
    size_t p = 0;
    for (const auto& orig : corpus.originals) {
        std::vector<const CounterfactualPair*> mine;
        while (p < corpus.pairs.size() && corpus.pairs[p].original.sent_id == orig.sent_id)
            mine.push_back(&corpus.pairs[p++]);
        std::string ids;
        for (auto* pair : mine) ids += (ids.empty() ? "" : ",") + pair->intervention_id;

        Sentence o = orig;
        o.set_meta("variant", "original");
        o.set_meta("intervention_id", ids);
        stamp_common(o, orig.sent_id, corpus.feature, corpus.dataset, corpus.split);
        out += conllu::serialize_sentence(o);

        for (auto* pair : mine) {
            Sentence c = pair->counterfactual;
            c.sent_id = pair->intervention_id;
            c.set_meta("intervention_id", pair->intervention_id);
            c.set_meta("variant", "counterfactual");
            c.set_meta("focus_token", std::to_string(pair->focus.token_index));
            stamp_common(c, orig.sent_id, corpus.feature, corpus.dataset, corpus.split);
            out += conllu::serialize_sentence(c);
        }
    }
    return out;
}

std::string failure_log_tsv(const std::vector<FailureRecord>& failures) {
    std::string out = "sent_id\ttoken_index\tfeature\treason\n";
    for (const auto& f : failures) {
        std::string reason = f.reason;
        std::replace(reason.begin(), reason.end(), '\t', ' ');
        std::replace(reason.begin(), reason.end(), '\n', ' ');
        out += f.sent_id + "\t" + std::to_string(f.token_index) + "\t" + std::string(to_string(f.feature)) + "\t" +
               reason + "\n";
    }
    return out;
}

std::vector<CounterfactualPair> read_augmented(std::string_view text) {
    auto sentences = conllu::parse_conllu(text);
    std::unordered_map<std::string, const Sentence*> originals;
    std::vector<Sentence> cleaned(sentences.size());
    std::vector<CounterfactualPair> out;
    for (size_t i = 0; i < sentences.size(); ++i) {
        const Sentence& s = sentences[i];
        cleaned[i] = s;
        strip_augment_keys(cleaned[i]);
        auto variant = s.meta("variant");
        if (!variant) throw std::runtime_error("sentence " + s.sent_id + " lacks a variant comment");
        auto ids = s.meta("intervention_id").value_or("");
        if (*variant == "original") {
            std::stringstream ss(ids);
            std::string id;
            while (std::getline(ss, id, ','))
                if (!id.empty()) originals[id] = &cleaned[i];
            continue;
        }
        if (*variant != "counterfactual") throw std::runtime_error("unknown variant '" + *variant + "'");
        auto orig = originals.find(ids);
        if (orig == originals.end()) throw std::runtime_error("counterfactual " + ids + " has no original block");
        auto feature = parse_feature(s.meta("feature").value_or(""));
        if (!feature) throw std::runtime_error("counterfactual " + ids + " lacks a feature comment");
        const int focus_token = std::stoi(s.meta("focus_token").value_or("0"));

        CounterfactualPair pair;
        pair.intervention_id = ids;
        pair.original = *orig->second;
        pair.counterfactual = cleaned[i];
        pair.counterfactual.sent_id = pair.original.sent_id;
        if (focus_token < 1 || focus_token > static_cast<int>(pair.original.size()))
            throw std::runtime_error("counterfactual " + ids + " has an invalid focus_token");
        auto source = parse_feature_value(pair.original.token(focus_token).feats.get(to_string(*feature)).value_or(""));
        if (!source) throw std::runtime_error("counterfactual " + ids + ": focus token lacks the feature");
        pair.focus = {focus_token, *feature, *source, opposite(*source)};
        pair.changed_indices = diff_indices(pair.original, pair.counterfactual);
        pair.dataset = s.meta("dataset").value_or("");
        pair.split = s.meta("split").value_or("");
        out.push_back(std::move(pair));
    }
    return out;
}

}  // namespace morphocause::intervention
