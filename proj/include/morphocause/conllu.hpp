#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace morphocause::conllu {

/// Malformed CoNLL-U input. `line()` is 1-based within the parsed text.
class ParseError : public std::runtime_error {
public:
    ParseError(size_t line, const std::string& what);
    size_t line() const { return line_; }

private:
    size_t line_;
};

/// A sentence that violates one of the token/tree invariants.
class ValidationError : public std::runtime_error {
public:
    ValidationError(const std::string& sent_id, const std::string& invariant);
    const std::string& invariant() const { return invariant_; }

private:
    std::string invariant_;
};

/// Head fields that do not form a single rooted tree.
class StructureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Ordered FEATS column. Keys are case-sensitive and unique; insertion keeps
/// the UD alphabetical order.
class Feats {
public:
    Feats() = default;

    /// Parses "Gender=Masc|Number=Sing" or "_". Throws std::invalid_argument on
    /// duplicate keys or items without '='.
    static Feats parse(std::string_view column);

    std::optional<std::string> get(std::string_view key) const;
    bool has(std::string_view key) const { return get(key).has_value(); }
    void set(std::string_view key, std::string_view value);
    void erase(std::string_view key);

    std::string str() const;
    bool empty() const { return items_.empty(); }
    const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }

    friend bool operator==(const Feats&, const Feats&) = default;

private:
    std::vector<std::pair<std::string, std::string>> items_;
};

struct Token {
    int index = 0;
    std::string form;
    std::string lemma;
    std::string upos;
    std::string xpos = "_";
    Feats feats;
    int head = 0;
    std::string deprel;
    std::string deps = "_";
    std::string misc = "_";

    /// deprel without its subtype ("nsubj:pass" -> "nsubj").
    std::string_view base_deprel() const;
    bool space_after() const;

    friend bool operator==(const Token&, const Token&) = default;
};

/// Range line such as "2-3  al". Columns other than FORM and MISC are kept
/// verbatim so serialization is lossless.
struct MultiwordToken {
    int first = 0;
    int last = 0;
    std::string form;
    std::vector<std::string> middle = std::vector<std::string>(7, "_");
    std::string misc = "_";

    friend bool operator==(const MultiwordToken&, const MultiwordToken&) = default;
};

/// Enhanced-graph empty node ("3.1"), kept as its raw line. `after` is the
/// integer part of its id.
struct EmptyNode {
    int after = 0;
    std::string line;

    friend bool operator==(const EmptyNode&, const EmptyNode&) = default;
};

struct Comment {
    std::string key;
    std::string value;
    bool has_value = true;

    friend bool operator==(const Comment&, const Comment&) = default;
};

struct Sentence {
    std::string sent_id;
    std::vector<Comment> metadata;  // every comment except sent_id, in file order
    std::vector<Token> tokens;
    std::vector<MultiwordToken> multiword;
    std::vector<EmptyNode> empty_nodes;

    size_t size() const { return tokens.size(); }
    const Token& token(int index) const { return tokens.at(static_cast<size_t>(index - 1)); }
    Token& token(int index) { return tokens.at(static_cast<size_t>(index - 1)); }

    std::optional<std::string> meta(std::string_view key) const;
    void set_meta(std::string_view key, std::string_view value);
    void erase_meta(std::string_view key);

    /// Multiword token whose range covers `index`, if any.
    const MultiwordToken* multiword_covering(int index) const;

    friend bool operator==(const Sentence&, const Sentence&) = default;
};

/// Throws ValidationError naming the first violated invariant.
void validate(const Sentence& sentence);

struct ParseDiagnostic {
    size_t line = 0;
    std::string sent_id;
    std::string message;
};

struct LenientParse {
    std::vector<Sentence> sentences;
    std::vector<ParseDiagnostic> skipped;
};

/// Strict parse: throws ParseError on malformed lines and ValidationError on
/// sentences that break the tree invariants.
std::vector<Sentence> parse_conllu(std::string_view text);

/// Same grammar, but malformed or invalid blocks are dropped and reported.
LenientParse parse_conllu_lenient(std::string_view text);

std::string serialize_sentence(const Sentence& sentence);
std::string serialize_conllu(const std::vector<Sentence>& sentences);

/// Surface string with multiword tokens fused and SpaceAfter=No honoured.
std::string surface_text(const Sentence& sentence);

class DepTree {
public:
    /// Throws StructureError on cycles, dangling heads, or multiple roots.
    explicit DepTree(Sentence sentence);

    const Sentence& sentence() const { return sentence_; }
    int root() const { return root_; }
    /// Children of `index` in surface order; index 0 is the artificial root.
    const std::vector<int>& children(int index) const {
        return children_.at(static_cast<size_t>(index));
    }
    int parent(int index) const { return sentence_.token(index).head; }
    /// Pre-order depth-first traversal from the root.
    std::vector<int> preorder() const;

private:
    Sentence sentence_;
    std::vector<std::vector<int>> children_;
    int root_ = 0;
};

DepTree build_tree(const Sentence& sentence);

}  // namespace morphocause::conllu
