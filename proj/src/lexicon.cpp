#include "morphocause/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "morphocause/utf8.hpp"

namespace morphocause::lexicon {

using conllu::Feats;
using conllu::Sentence;

ReinflectionFailure::ReinflectionFailure(std::string form, std::string upos, Feature feature,
                                         const std::string& reason)
    : std::runtime_error("cannot reinflect '" + form + "' (" + upos + ", " + std::string(to_string(feature)) +
                         "): " + reason),
      form_(std::move(form)),
      upos_(std::move(upos)),
      feature_(feature) {}

namespace {

// ---------------------------------------------------------------------------
// Orthography helpers. Everything below works on lowercased UTF-32.

bool is_vowel(char32_t c) {
    switch (c) {
        case U'a': case U'e': case U'i': case U'o': case U'u':
        case U'á': case U'é': case U'í': case U'ó': case U'ú': case U'ü':
            return true;
        default:
            return false;
    }
}

bool is_accented(char32_t c) {
    return c == U'á' || c == U'é' || c == U'í' || c == U'ó' || c == U'ú';
}

// Strong vowels, plus accented weak vowels which break diphthongs.
bool is_strongish(char32_t c) {
    return c == U'a' || c == U'e' || c == U'o' || is_accented(c);
}

char32_t strip_accent(char32_t c) {
    switch (c) {
        case U'á': return U'a';
        case U'é': return U'e';
        case U'í': return U'i';
        case U'ó': return U'o';
        case U'ú': return U'u';
        default: return c;
    }
}

char32_t add_accent(char32_t c) {
    switch (c) {
        case U'a': return U'á';
        case U'e': return U'é';
        case U'i': return U'í';
        case U'o': return U'ó';
        case U'u': return U'ú';
        default: return c;
    }
}

struct Nucleus {
    size_t first;
    size_t last;
    size_t stress;  // position that takes a written accent
};

// Syllable nuclei: vowel runs split at strong+strong hiatus. 'u' in que/qui/gue/gui
// is silent and never forms its own nucleus.
std::vector<Nucleus> nuclei(const std::u32string& w) {
    std::vector<Nucleus> out;
    bool in_run = false;
    bool has_strong = false;
    for (size_t i = 0; i < w.size(); ++i) {
        char32_t c = w[i];
        bool silent_u = c == U'u' && i > 0 && (w[i - 1] == U'q' || w[i - 1] == U'g') && i + 1 < w.size() &&
                        (w[i + 1] == U'e' || w[i + 1] == U'i' || w[i + 1] == U'é' || w[i + 1] == U'í');
        if (!is_vowel(c) || silent_u) {
            in_run = false;
            continue;
        }
        bool strong = is_strongish(c);
        if (!in_run || (strong && has_strong)) {
            out.push_back({i, i, i});
            has_strong = strong;
            in_run = true;
            continue;
        }
        Nucleus& n = out.back();
        n.last = i;
        if (strong) {
            n.stress = i;
            has_strong = true;
        } else if (!has_strong) {
            n.stress = i;
        }
    }
    return out;
}

std::optional<size_t> accent_position(const std::u32string& w) {
    for (size_t i = 0; i < w.size(); ++i)
        if (is_accented(w[i])) return i;
    return std::nullopt;
}

bool ends_with(const std::u32string& w, std::u32string_view suffix) {
    return w.size() >= suffix.size() && std::u32string_view(w).substr(w.size() - suffix.size()) == suffix;
}

std::u32string drop(const std::u32string& w, size_t n) { return w.substr(0, w.size() - n); }

std::u32string replace_suffix(const std::u32string& w, std::u32string_view from, std::u32string_view to) {
    return drop(w, from.size()) + std::u32string(to);
}

// An accented weak vowel next to another vowel marks hiatus (país), so its
// accent survives pluralization.
bool accent_marks_hiatus(const std::u32string& w, size_t pos) {
    char32_t c = w[pos];
    if (c != U'í' && c != U'ú') return false;
    return (pos > 0 && is_vowel(w[pos - 1])) || (pos + 1 < w.size() && is_vowel(w[pos + 1]));
}

// ---------------------------------------------------------------------------
// Number on nouns and adjectives.

std::optional<std::u32string> pluralize(const std::u32string& w) {
    if (w.empty()) return std::nullopt;
    const char32_t last = w.back();
    auto nuc = nuclei(w);
    auto accent = accent_position(w);
    if (last == U'x') return w;
    if (last == U'z') return drop(w, 1) + U"ces";
    if (is_vowel(last)) return w + U"s";
    if (last == U'y') {
        if (w.size() >= 2 && is_vowel(w[w.size() - 2])) return w + U"es";
        return w + U"s";
    }
    if (last == U'n' || last == U's') {
        if (nuc.empty()) return std::nullopt;
        const bool accent_on_last = accent && *accent >= nuc.back().first && *accent <= nuc.back().last;
        if (accent_on_last) {
            std::u32string out = w;
            if (!accent_marks_hiatus(w, *accent)) out[*accent] = strip_accent(out[*accent]);
            return out + U"es";
        }
        if (nuc.size() == 1) return w + U"es";
        if (last == U's') return w;  // unstressed final -s: lunes, crisis
        if (accent) return w + U"es";
        std::u32string out = w;
        const size_t pos = nuc[nuc.size() - 2].stress;
        out[pos] = add_accent(out[pos]);
        return out + U"es";
    }
    if (last == U'l' || last == U'r' || last == U'd' || last == U'j') return w + U"es";
    return w + U"s";
}

std::optional<std::u32string> singularize(const std::u32string& w) {
    if (w.empty()) return std::nullopt;
    if (w.back() == U'x') return w;
    if (w.size() >= 3 && (ends_with(w, U"is") || ends_with(w, U"us"))) {
        auto nuc = nuclei(w);
        if (nuc.size() >= 2) return w;  // crisis, virus
    }
    if (ends_with(w, U"ces") && w.size() >= 4) {
        if (is_vowel(w[w.size() - 4])) return drop(w, 3) + U"z";
        return drop(w, 1);
    }
    if (ends_with(w, U"es") && w.size() >= 4) {
        std::u32string stem = drop(w, 2);
        const char32_t c = stem.back();
        const bool consonant_plural = (c == U'l' || c == U'r' || c == U'n' || c == U'd' || c == U'y' || c == U's') &&
                                      is_vowel(stem[stem.size() - 2]);
        if (consonant_plural) {
            if (c != U'n' && c != U's') return stem;
            auto nuc = nuclei(stem);
            if (nuc.empty()) return std::nullopt;
            if (auto accent = accent_position(stem)) {
                const bool on_last = *accent >= nuc.back().first && *accent <= nuc.back().last;
                if (!on_last) stem[*accent] = strip_accent(stem[*accent]);
                return stem;
            }
            if (nuc.size() == 1) return stem;
            stem[nuc.back().stress] = add_accent(stem[nuc.back().stress]);
            return stem;
        }
    }
    if (w.back() == U's' && w.size() >= 2 && (is_vowel(w[w.size() - 2]))) return drop(w, 1);
    if (w.back() == U's' && w.size() >= 2) return drop(w, 1);  // robots, clubs
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Gender on nouns and adjectives. Each masculine ending has a paired inverse.

struct GenderPair {
    std::u32string masc;
    std::u32string fem;
    // Inverse applies only when the lemma ends in this (empty: always), or
    // never when the lemma ends in `blocked_by_lemma`.
    std::u32string requires_lemma;
    std::u32string blocked_by_lemma;
    // The forward rule is skipped for lemmas ending in this (bebés is a plural, not -és).
    std::u32string forward_blocked_by_lemma = U"";
};

const std::vector<GenderPair>& gender_pairs() {
    static const std::vector<GenderPair> pairs = {
        {U"ores", U"oras", U"", U"oro"}, {U"or", U"ora", U"", U"oro"},
        {U"ones", U"onas", U"", U"ono"}, {U"ón", U"ona", U"", U"ono"},
        {U"eses", U"esas", U"", U"eso"}, {U"és", U"esa", U"", U"eso", U"é"},
        {U"anes", U"anas", U"án", U""},  {U"án", U"ana", U"án", U""},
        {U"ines", U"inas", U"ín", U""},  {U"ín", U"ina", U"ín", U""},
        {U"os", U"as", U"", U""},         {U"o", U"a", U"", U""},
    };
    return pairs;
}

// ---------------------------------------------------------------------------
// Closed-class paradigms: {MascSing, FemSing, MascPlur, FemPlur}.

using Paradigm = std::array<std::u32string, 4>;

std::vector<Paradigm> determiner_paradigms() {
    return {
        {U"el", U"la", U"los", U"las"},
        {U"un", U"una", U"unos", U"unas"},
        {U"este", U"esta", U"estos", U"estas"},
        {U"ese", U"esa", U"esos", U"esas"},
        {U"aquel", U"aquella", U"aquellos", U"aquellas"},
        {U"mi", U"mi", U"mis", U"mis"},
        {U"tu", U"tu", U"tus", U"tus"},
        {U"su", U"su", U"sus", U"sus"},
        {U"nuestro", U"nuestra", U"nuestros", U"nuestras"},
        {U"vuestro", U"vuestra", U"vuestros", U"vuestras"},
        {U"mucho", U"mucha", U"muchos", U"muchas"},
        {U"poco", U"poca", U"pocos", U"pocas"},
        {U"otro", U"otra", U"otros", U"otras"},
        {U"todo", U"toda", U"todos", U"todas"},
        {U"algún", U"alguna", U"algunos", U"algunas"},
        {U"ningún", U"ninguna", U"ningunos", U"ningunas"},
        {U"cierto", U"cierta", U"ciertos", U"ciertas"},
        {U"tanto", U"tanta", U"tantos", U"tantas"},
        {U"cuanto", U"cuanta", U"cuantos", U"cuantas"},
        {U"cuánto", U"cuánta", U"cuántos", U"cuántas"},
        {U"demasiado", U"demasiada", U"demasiados", U"demasiadas"},
        {U"mismo", U"misma", U"mismos", U"mismas"},
        {U"cuyo", U"cuya", U"cuyos", U"cuyas"},
        {U"dicho", U"dicha", U"dichos", U"dichas"},
        {U"tal", U"tal", U"tales", U"tales"},
        {U"cual", U"cual", U"cuales", U"cuales"},
        {U"qué", U"qué", U"qué", U"qué"},
        {U"bastante", U"bastante", U"bastantes", U"bastantes"},
        {U"cada", U"cada", U"", U""},
        {U"", U"", U"varios", U"varias"},
        {U"", U"", U"ambos", U"ambas"},
        {U"", U"", U"dos", U"dos"},
        {U"", U"", U"tres", U"tres"},
    };
}

std::vector<Paradigm> pronoun_paradigms() {
    return {
        {U"él", U"ella", U"ellos", U"ellas"},
        {U"", U"", U"nosotros", U"nosotras"},
        {U"", U"", U"vosotros", U"vosotras"},
        {U"este", U"esta", U"estos", U"estas"},
        {U"ese", U"esa", U"esos", U"esas"},
        {U"aquel", U"aquella", U"aquellos", U"aquellas"},
        {U"éste", U"ésta", U"éstos", U"éstas"},
        {U"ése", U"ésa", U"ésos", U"ésas"},
        {U"aquél", U"aquélla", U"aquéllos", U"aquéllas"},
        {U"uno", U"una", U"unos", U"unas"},
        {U"alguno", U"alguna", U"algunos", U"algunas"},
        {U"ninguno", U"ninguna", U"ningunos", U"ningunas"},
        {U"otro", U"otra", U"otros", U"otras"},
        {U"mismo", U"misma", U"mismos", U"mismas"},
        {U"todo", U"toda", U"todos", U"todas"},
        {U"mucho", U"mucha", U"muchos", U"muchas"},
        {U"poco", U"poca", U"pocos", U"pocas"},
        {U"lo", U"la", U"los", U"las"},
        {U"le", U"le", U"les", U"les"},
        {U"quien", U"quien", U"quienes", U"quienes"},
        {U"quién", U"quién", U"quiénes", U"quiénes"},
        {U"cuál", U"cuál", U"cuáles", U"cuáles"},
        {U"suyo", U"suya", U"suyos", U"suyas"},
        {U"mío", U"mía", U"míos", U"mías"},
        {U"tuyo", U"tuya", U"tuyos", U"tuyas"},
        {U"nuestro", U"nuestra", U"nuestros", U"nuestras"},
    };
}

size_t cell(int gender, int number) { return static_cast<size_t>(number * 2 + gender); }

std::u32string lower32(std::string_view s) { return utf8::to_lower(utf8::decode(s)); }

}  // namespace

// ---------------------------------------------------------------------------
// AnimacyLexicon

AnimacyLexicon::AnimacyLexicon(const std::vector<std::string>& lemmas) {
    for (const auto& l : lemmas) insert(l);
}

AnimacyLexicon AnimacyLexicon::read(std::istream& in) {
    AnimacyLexicon lex;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        auto last = line.find_last_not_of(" \t");
        lex.insert(line.substr(first, last - first + 1));
    }
    return lex;
}

bool AnimacyLexicon::is_animate(std::string_view lemma) const {
    if (lemma.empty()) return false;
    return lemmas_.contains(utf8::to_lower(lemma));
}

void AnimacyLexicon::insert(std::string_view lemma) {
    if (!lemma.empty()) lemmas_.insert(utf8::to_lower(lemma));
}

// ---------------------------------------------------------------------------
// ReinflectionRuleSet

ReinflectionRuleSet ReinflectionRuleSet::builtin() {
    ReinflectionRuleSet rules;
    rules.det_paradigms_ = determiner_paradigms();
    rules.pron_paradigms_ = pronoun_paradigms();

    for (const auto& pair : gender_pairs()) {
        rules.nominal_rules_.push_back(
            {"-" + utf8::encode(pair.masc) + " -> -" + utf8::encode(pair.fem), Feature::Gender, FeatureValue::Fem,
             [pair](const std::u32string& w, const std::u32string& lemma) -> std::optional<std::u32string> {
                 if (!ends_with(w, pair.masc) || w.size() <= pair.masc.size()) return std::nullopt;
                 if (!pair.forward_blocked_by_lemma.empty() && ends_with(lemma, pair.forward_blocked_by_lemma))
                     return std::nullopt;
                 return replace_suffix(w, pair.masc, pair.fem);
             }});
    }
    rules.nominal_rules_.push_back({"masculine syncretic", Feature::Gender, FeatureValue::Fem,
                                    [](const std::u32string& w, const std::u32string&) { return w; }});

    rules.nominal_rules_.push_back(
        {"-ista syncretic", Feature::Gender, FeatureValue::Masc,
         [](const std::u32string& w, const std::u32string&) -> std::optional<std::u32string> {
             if (ends_with(w, U"ista") || ends_with(w, U"istas")) return w;
             return std::nullopt;
         }});
    for (const auto& pair : gender_pairs()) {
        rules.nominal_rules_.push_back(
            {"-" + utf8::encode(pair.fem) + " -> -" + utf8::encode(pair.masc), Feature::Gender, FeatureValue::Masc,
             [pair](const std::u32string& w, const std::u32string& lemma) -> std::optional<std::u32string> {
                 if (!ends_with(w, pair.fem) || w.size() <= pair.fem.size()) return std::nullopt;
                 if (!pair.requires_lemma.empty() && !ends_with(lemma, pair.requires_lemma)) return std::nullopt;
                 if (!pair.blocked_by_lemma.empty() && ends_with(lemma, pair.blocked_by_lemma)) return std::nullopt;
                 return replace_suffix(w, pair.fem, pair.masc);
             }});
    }
    rules.nominal_rules_.push_back({"feminine syncretic", Feature::Gender, FeatureValue::Masc,
                                    [](const std::u32string& w, const std::u32string&) { return w; }});

    rules.nominal_rules_.push_back({"pluralize", Feature::Number, FeatureValue::Plur,
                                    [](const std::u32string& w, const std::u32string&) { return pluralize(w); }});
    rules.nominal_rules_.push_back({"singularize", Feature::Number, FeatureValue::Sing,
                                    [](const std::u32string& w, const std::u32string&) { return singularize(w); }});
    return rules;
}

void ReinflectionRuleSet::add_exception(const ExceptionEntry& entry) {
    auto key = ExceptionKey{utf8::to_lower(entry.form), entry.pos, entry.feature, entry.target};
    exceptions_[key] = utf8::to_lower(entry.output);
    exception_list_.push_back(entry);
    auto inverse = ExceptionKey{utf8::to_lower(entry.output), entry.pos, entry.feature, opposite(entry.target)};
    if (!exceptions_.contains(inverse)) exceptions_[inverse] = utf8::to_lower(entry.form);
}

void ReinflectionRuleSet::read_exceptions(std::istream& in) {
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, '\t')) cols.push_back(col);
        if (cols.size() != 5)
            throw LexiconError("exceptions line " + std::to_string(lineno) + ": expected 5 columns");
        auto pos = parse_pos(cols[1]);
        auto feature = parse_feature(cols[2]);
        auto target = parse_feature_value(cols[3]);
        if (!pos || !feature || !target || feature_of(*target) != *feature)
            throw LexiconError("exceptions line " + std::to_string(lineno) + ": bad upos/feature/target");
        add_exception({cols[0], *pos, *feature, *target, cols[4]});
    }
}

std::optional<std::u32string> ReinflectionRuleSet::apply_paradigm(const std::u32string& w, Pos pos, Feature feature,
                                                                  FeatureValue target) const {
    const auto& table = pos == Pos::Det ? det_paradigms_ : pron_paradigms_;
    const int target_coord = (target == FeatureValue::Fem || target == FeatureValue::Plur) ? 1 : 0;
    bool found_anywhere = false;
    for (const auto& row : table) {
        for (int g = 0; g < 2; ++g) {
            for (int n = 0; n < 2; ++n) {
                if (row[cell(g, n)] != w) continue;
                found_anywhere = true;
                const int source_coord = feature == Feature::Gender ? g : n;
                if (source_coord == target_coord) continue;
                const auto& out = feature == Feature::Gender ? row[cell(target_coord, n)] : row[cell(g, target_coord)];
                if (out.empty()) return std::nullopt;
                return out;
            }
        }
    }
    // Only present in target cells: already agrees.
    if (found_anywhere) return w;
    return std::nullopt;
}

std::u32string ReinflectionRuleSet::apply_verb(const std::u32string& w, const std::u32string& lemma, Feature feature,
                                               FeatureValue target, const Feats* feats, std::string_view original,
                                               Pos pos) const {
    auto fail = [&](const std::string& why) {
        return ReinflectionFailure(std::string(original), std::string(to_string(pos)), feature, why);
    };
    auto feat = [&](std::string_view key) -> std::optional<std::string> {
        return feats ? feats->get(key) : std::nullopt;
    };
    // Finite verbs and copulas do not mark gender.
    if (feature == Feature::Gender) {
        if (feat("VerbForm") == "Part" && feat("Gender")) throw fail("participle agreement is not rewritten");
        return w;
    }
    if (auto person = feat("Person"); person && *person != "3") throw fail("only third person is supported");
    if (auto vf = feat("VerbForm"); vf && *vf != "Fin") throw fail("non-finite verb form");

    const auto tense = feat("Tense");
    const auto mood = feat("Mood");
    bool preterite;
    if (tense) {
        preterite = *tense == "Past" && mood != "Sub";
    } else {
        preterite = ends_with(w, U"ó") || ends_with(w, U"aron") || ends_with(w, U"ieron") || ends_with(w, U"eron");
    }

    if (target == FeatureValue::Plur) {
        if (preterite) {
            if (ends_with(w, U"yó")) return replace_suffix(w, U"yó", U"yeron");
            if (ends_with(w, U"ió") && !ends_with(lemma, U"ar")) return replace_suffix(w, U"ió", U"ieron");
            if (ends_with(w, U"ó")) return replace_suffix(w, U"ó", U"aron");
            if (ends_with(w, U"jo")) return replace_suffix(w, U"jo", U"jeron");
            if (ends_with(w, U"o") && w.size() > 2) return replace_suffix(w, U"o", U"ieron");
            throw fail("unsupported preterite form");
        }
        if (!w.empty() && is_vowel(w.back())) return w + U"n";
        throw fail("unsupported singular verb form");
    }

    if (preterite) {
        if (ends_with(w, U"aron")) return replace_suffix(w, U"aron", U"ó");
        if (ends_with(w, U"yeron")) return replace_suffix(w, U"yeron", U"yó");
        if (ends_with(w, U"jeron")) return replace_suffix(w, U"jeron", U"jo");
        if (ends_with(w, U"ieron")) {
            const std::u32string stem = drop(w, 5);
            bool weak = false;
            if (lemma.size() > 2 && (ends_with(lemma, U"er") || ends_with(lemma, U"ir"))) {
                const std::u32string lstem = drop(lemma, 2);
                if (lstem == stem) {
                    weak = true;
                } else if (lstem.size() == stem.size()) {
                    // Stem-changing -ir verbs: pedir/pidieron, morir/murieron.
                    size_t diffs = 0;
                    bool vowel_shift = true;
                    for (size_t i = 0; i < stem.size(); ++i) {
                        if (stem[i] == lstem[i]) continue;
                        ++diffs;
                        if (!((lstem[i] == U'e' && stem[i] == U'i') || (lstem[i] == U'o' && stem[i] == U'u')))
                            vowel_shift = false;
                    }
                    weak = diffs == 1 && vowel_shift;
                }
            }
            return stem + (weak ? U"ió" : U"o");
        }
        throw fail("unsupported preterite plural");
    }
    if (w.size() >= 2 && w.back() == U'n' && is_vowel(w[w.size() - 2])) return drop(w, 1);
    throw fail("unsupported plural verb form");
}

std::string ReinflectionRuleSet::apply(std::string_view form, std::string_view lemma, Pos pos, Feature feature,
                                       FeatureValue target, const Feats* feats) const {
    if (feature_of(target) != feature) throw std::invalid_argument("target value does not belong to feature");
    const std::u32string original = utf8::decode(form);
    const auto casing = utf8::casing_of(original);
    const std::u32string w = utf8::to_lower(original);
    const std::u32string l = lower32(lemma);
    auto finish = [&](const std::u32string& out) { return utf8::encode(utf8::apply_casing(out, casing)); };
    auto fail = [&](const std::string& why) {
        return ReinflectionFailure(std::string(form), std::string(to_string(pos)), feature, why);
    };

    if (w.empty()) throw fail("empty form");
    if (auto it = exceptions_.find(ExceptionKey{utf8::encode(w), pos, feature, target}); it != exceptions_.end())
        return finish(utf8::decode(it->second));

    switch (pos) {
        case Pos::Noun:
        case Pos::Adj:
            for (const auto& rule : nominal_rules_) {
                if (rule.feature != feature || rule.target != target) continue;
                if (auto out = rule.rewrite(w, l)) return finish(*out);
            }
            throw fail("no rule matches this ending");
        case Pos::Det:
        case Pos::Pron:
            if (auto out = apply_paradigm(w, pos, feature, target)) return finish(*out);
            throw fail("form missing from the closed-class paradigm");
        case Pos::Verb:
        case Pos::Aux:
            return finish(apply_verb(w, l, feature, target, feats, form, pos));
    }
    throw fail("unsupported part of speech");
}

// ---------------------------------------------------------------------------
// SuppletivePairTable

SuppletivePairTable SuppletivePairTable::read(std::istream& in) {
    SuppletivePairTable table;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, '\t')) cols.push_back(col);
        if (cols.size() != 4)
            throw LexiconError("suppletive line " + std::to_string(lineno) + ": expected 4 columns");
        table.add({cols[0], cols[1], cols[2], cols[3]});
    }
    return table;
}

void SuppletivePairTable::add(SuppletivePair pair) {
    if (pair.lemma_masc.empty() || pair.form_masc.empty() || pair.lemma_fem.empty() || pair.form_fem.empty())
        throw LexiconError("suppletive pair with an empty column");
    pair.lemma_masc = utf8::to_lower(pair.lemma_masc);
    pair.form_masc = utf8::to_lower(pair.form_masc);
    pair.lemma_fem = utf8::to_lower(pair.lemma_fem);
    pair.form_fem = utf8::to_lower(pair.form_fem);
    pairs_.push_back(std::move(pair));
}

std::optional<Reinflection> SuppletivePairTable::lookup(std::string_view form, std::string_view lemma,
                                                        FeatureValue target, const ReinflectionRuleSet& rules) const {
    if (feature_of(target) != Feature::Gender) return std::nullopt;
    const std::string f = utf8::to_lower(form);
    const std::string l = utf8::to_lower(lemma);
    auto plural = [&](const std::string& sg) {
        try {
            return rules.apply(sg, sg, Pos::Noun, Feature::Number, FeatureValue::Plur);
        } catch (const ReinflectionFailure&) {
            return sg;
        }
    };
    for (const auto& p : pairs_) {
        if (l != p.lemma_masc && l != p.lemma_fem && f != p.form_masc && f != p.form_fem) continue;
        const bool to_masc = target == FeatureValue::Masc;
        const std::string& src_sg = to_masc ? p.form_fem : p.form_masc;
        const std::string& dst_sg = to_masc ? p.form_masc : p.form_fem;
        const std::string& dst_lemma = to_masc ? p.lemma_masc : p.lemma_fem;
        if (f == src_sg) return Reinflection{dst_sg, dst_lemma};
        if (f == plural(src_sg)) return Reinflection{plural(dst_sg), dst_lemma};
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Lexicon

std::filesystem::path default_lexicon_dir() {
    if (const char* env = std::getenv("MORPHOCAUSE_LEXICON_DIR"); env && *env) return env;
    return std::filesystem::path(MORPHOCAUSE_DATA_DIR) / "lexicon";
}

Lexicon Lexicon::load(const std::filesystem::path& dir) {
    auto open = [&](const char* name) {
        std::ifstream in(dir / name);
        if (!in) throw LexiconError("cannot open lexicon file " + (dir / name).string());
        return in;
    };
    Lexicon lex;
    {
        auto in = open("animate_lemmas.txt");
        lex.animacy = AnimacyLexicon::read(in);
    }
    {
        auto in = open("suppletive.tsv");
        lex.suppletive = SuppletivePairTable::read(in);
    }
    {
        auto in = open("exceptions.tsv");
        lex.rules.read_exceptions(in);
    }
    return lex;
}

Lexicon Lexicon::load_default() { return load(default_lexicon_dir()); }

Reinflection Lexicon::reinflect_token(std::string_view form, std::string_view lemma, Pos pos, Feature feature,
                                      FeatureValue target, const Feats* feats) const {
    if (pos == Pos::Noun && feature == Feature::Gender) {
        if (auto hit = suppletive.lookup(form, lemma, target, rules)) {
            auto casing = utf8::casing_of(utf8::decode(form));
            hit->form = utf8::encode(utf8::apply_casing(utf8::decode(hit->form), casing));
            return *hit;
        }
    }
    return {rules.apply(form, lemma, pos, feature, target, feats), std::string(lemma)};
}

std::string reinflect(const Lexicon& lexicon, std::string_view form, std::string_view lemma, std::string_view upos,
                      Feature feature, FeatureValue target, const Feats* feats) {
    auto pos = parse_pos(upos);
    if (!pos) throw ReinflectionFailure(std::string(form), std::string(upos), feature, "unsupported part of speech");
    return lexicon.reinflect_token(form, lemma, *pos, feature, target, feats).form;
}

// ---------------------------------------------------------------------------
// Contractions

namespace {

bool is_contracting_preposition(const conllu::Token& t) {
    if (t.upos != "ADP") return false;
    auto f = utf8::to_lower(t.form);
    return f == "a" || f == "de";
}

bool is_masc_article(const conllu::Token& t) { return t.upos == "DET" && utf8::to_lower(t.form) == "el"; }

std::string fused_form(const conllu::Token& prep) {
    // "a" -> "al", "De" -> "Del", "A" -> "Al"
    return prep.form + "l";
}

}  // namespace

bool is_contraction(const Sentence& s, const conllu::MultiwordToken& mwt) {
    if (mwt.last != mwt.first + 1) return false;
    if (mwt.first < 1 || mwt.last > static_cast<int>(s.size())) return false;
    if (!is_contracting_preposition(s.token(mwt.first))) return false;
    const auto& det = s.token(mwt.last);
    if (det.upos != "DET") return false;
    auto fused = utf8::to_lower(mwt.form);
    return fused == "al" || fused == "del";
}

Sentence apply_contractions(const Sentence& sentence, const std::set<int>& only) {
    Sentence out = sentence;
    // Drop or refresh existing contraction ranges. A range's MISC moves to its
    // determiner so that SpaceAfter survives the split.
    std::erase_if(out.multiword, [&](const conllu::MultiwordToken& mwt) {
        if (!is_contraction(out, mwt) || is_masc_article(out.token(mwt.last))) return false;
        auto& det = out.token(mwt.last);
        if (det.misc == "_") det.misc = mwt.misc;
        return true;
    });

    const int n = static_cast<int>(out.size());
    for (int i = 1; i < n; ++i) {
        if (out.multiword_covering(i) || out.multiword_covering(i + 1)) continue;
        if (!only.empty() && !only.contains(i + 1)) continue;
        const auto& prep = out.token(i);
        const auto& det = out.token(i + 1);
        if (!is_contracting_preposition(prep) || !is_masc_article(det)) continue;
        conllu::MultiwordToken mwt;
        mwt.first = i;
        mwt.last = i + 1;
        mwt.form = fused_form(prep);
        if (out.token(i + 1).misc == "SpaceAfter=No") std::swap(mwt.misc, out.token(i + 1).misc);
        auto pos = std::find_if(out.multiword.begin(), out.multiword.end(),
                                [&](const auto& m) { return m.first > i; });
        out.multiword.insert(pos, std::move(mwt));
    }
    return out;
}

Sentence split_contractions(const Sentence& sentence) {
    Sentence out = sentence;
    std::erase_if(out.multiword, [&](const conllu::MultiwordToken& mwt) {
        if (!is_contraction(sentence, mwt)) return false;
        auto& det = out.token(mwt.last);
        if (det.misc == "_") det.misc = mwt.misc;
        return true;
    });
    return out;
}

}  // namespace morphocause::lexicon
