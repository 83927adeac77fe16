#include "morphocause/conllu.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

namespace morphocause::conllu {

ParseError::ParseError(size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

ValidationError::ValidationError(const std::string& sent_id, const std::string& invariant)
    : std::runtime_error("sentence '" + sent_id + "': " + invariant), invariant_(invariant) {}

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> out;
    size_t start = 0;
    while (true) {
        size_t pos = text.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(text.substr(start));
            break;
        }
        out.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::optional<int> to_int(std::string_view s) {
    int value = 0;
    if (s.empty()) return std::nullopt;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

// UD sorts features alphabetically ignoring case.
bool feat_key_less(std::string_view a, std::string_view b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), [](char x, char y) {
        return std::tolower(static_cast<unsigned char>(x)) < std::tolower(static_cast<unsigned char>(y));
    });
}

}  // namespace

// ---------------------------------------------------------------------------
// Feats

Feats Feats::parse(std::string_view column) {
    Feats feats;
    if (column == "_" || column.empty()) return feats;
    for (auto item : split(column, '|')) {
        auto eq = item.find('=');
        if (eq == std::string_view::npos || eq == 0)
            throw std::invalid_argument("feature item without '=': " + std::string(item));
        std::string key(item.substr(0, eq));
        if (feats.has(key)) throw std::invalid_argument("duplicate feature key: " + key);
        // Keep file order; UD files are already sorted.
        feats.items_.emplace_back(std::move(key), std::string(item.substr(eq + 1)));
    }
    return feats;
}

std::optional<std::string> Feats::get(std::string_view key) const {
    for (const auto& [k, v] : items_)
        if (k == key) return v;
    return std::nullopt;
}

void Feats::set(std::string_view key, std::string_view value) {
    for (auto& [k, v] : items_) {
        if (k == key) {
            v = value;
            return;
        }
    }
    auto pos = std::find_if(items_.begin(), items_.end(),
                            [&](const auto& item) { return feat_key_less(key, item.first); });
    items_.insert(pos, {std::string(key), std::string(value)});
}

void Feats::erase(std::string_view key) {
    std::erase_if(items_, [&](const auto& item) { return item.first == key; });
}

std::string Feats::str() const {
    if (items_.empty()) return "_";
    std::string out;
    for (const auto& [k, v] : items_) {
        if (!out.empty()) out += '|';
        out += k;
        out += '=';
        out += v;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Token / Sentence

std::string_view Token::base_deprel() const {
    std::string_view rel = deprel;
    return rel.substr(0, rel.find(':'));
}

bool Token::space_after() const {
    for (auto item : split(misc, '|'))
        if (item == "SpaceAfter=No") return false;
    return true;
}

std::optional<std::string> Sentence::meta(std::string_view key) const {
    if (key == "sent_id") return sent_id.empty() ? std::nullopt : std::optional<std::string>(sent_id);
    for (const auto& c : metadata)
        if (c.key == key) return c.value;
    return std::nullopt;
}

void Sentence::set_meta(std::string_view key, std::string_view value) {
    if (key == "sent_id") {
        sent_id = value;
        return;
    }
    for (auto& c : metadata) {
        if (c.key == key) {
            c.value = value;
            c.has_value = true;
            return;
        }
    }
    metadata.push_back({std::string(key), std::string(value), true});
}

void Sentence::erase_meta(std::string_view key) {
    std::erase_if(metadata, [&](const Comment& c) { return c.key == key; });
}

const MultiwordToken* Sentence::multiword_covering(int index) const {
    for (const auto& mwt : multiword)
        if (mwt.first <= index && index <= mwt.last) return &mwt;
    return nullptr;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void check_acyclic(const Sentence& s, const std::string& id) {
    const int n = static_cast<int>(s.tokens.size());
    // 0 = unvisited, 1 = on current path, 2 = known to reach the root.
    std::vector<int> state(static_cast<size_t>(n + 1), 0);
    state[0] = 2;
    for (int start = 1; start <= n; ++start) {
        std::vector<int> path;
        int cur = start;
        while (state[static_cast<size_t>(cur)] == 0) {
            state[static_cast<size_t>(cur)] = 1;
            path.push_back(cur);
            cur = s.token(cur).head;
        }
        if (state[static_cast<size_t>(cur)] == 1) throw ValidationError(id, "head fields contain a cycle");
        for (int p : path) state[static_cast<size_t>(p)] = 2;
    }
}

}  // namespace

void validate(const Sentence& s) {
    const std::string& id = s.sent_id;
    const int n = static_cast<int>(s.tokens.size());
    if (n == 0) throw ValidationError(id, "sentence has no tokens");
    int roots = 0;
    for (int i = 0; i < n; ++i) {
        const Token& t = s.tokens[static_cast<size_t>(i)];
        if (t.index != i + 1) throw ValidationError(id, "token indices are not contiguous 1..T");
        if (t.head < 0) throw ValidationError(id, "head must be non-negative");
        if (t.head == t.index) throw ValidationError(id, "token " + std::to_string(t.index) + " is its own head");
        if (t.head > n) throw ValidationError(id, "head of token " + std::to_string(t.index) + " is out of range");
        if (t.head == 0) ++roots;
        if (auto g = t.feats.get("Gender"); g && *g != "Masc" && *g != "Fem")
            throw ValidationError(id, "Gender value '" + *g + "' not in {Masc, Fem}");
        if (auto num = t.feats.get("Number"); num && *num != "Sing" && *num != "Plur")
            throw ValidationError(id, "Number value '" + *num + "' not in {Sing, Plur}");
    }
    if (roots != 1) throw ValidationError(id, "expected exactly one root, found " + std::to_string(roots));
    check_acyclic(s, id);
    int prev_last = 0;
    for (const auto& mwt : s.multiword) {
        if (mwt.first < 1 || mwt.last > n || mwt.first >= mwt.last || mwt.first <= prev_last)
            throw ValidationError(id, "multiword token range " + std::to_string(mwt.first) + "-" +
                                          std::to_string(mwt.last) + " is invalid");
        prev_last = mwt.last;
    }
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class BlockParser {
public:
    void comment(std::string_view line) {
        std::string_view body = line.substr(1);
        if (!body.empty() && body.front() == ' ') body.remove_prefix(1);
        auto eq = body.find(" = ");
        Comment c;
        if (eq == std::string_view::npos) {
            // "# key =" with an empty value still counts as key/value.
            if (body.size() >= 2 && body.substr(body.size() - 2) == " =") {
                c.key = std::string(body.substr(0, body.size() - 2));
                c.value.clear();
            } else {
                c.key = std::string(trim(body));
                c.has_value = false;
            }
        } else {
            c.key = std::string(trim(body.substr(0, eq)));
            c.value = std::string(body.substr(eq + 3));
        }
        if (c.key == "sent_id" && c.has_value) {
            sentence_.sent_id = c.value;
        } else {
            sentence_.metadata.push_back(std::move(c));
        }
        started_ = true;
    }

    void token_line(std::string_view line, size_t lineno) {
        auto cols = split(line, '\t');
        if (cols.size() != 10)
            throw ParseError(lineno, "expected 10 tab-separated columns, found " + std::to_string(cols.size()));
        started_ = true;
        std::string_view id = cols[0];
        if (auto dash = id.find('-'); dash != std::string_view::npos) {
            auto first = to_int(id.substr(0, dash));
            auto last = to_int(id.substr(dash + 1));
            if (!first || !last) throw ParseError(lineno, "non-numeric multiword range '" + std::string(id) + "'");
            MultiwordToken mwt;
            mwt.first = *first;
            mwt.last = *last;
            mwt.form = std::string(cols[1]);
            for (size_t k = 0; k < 7; ++k) mwt.middle[k] = std::string(cols[2 + k]);
            mwt.misc = std::string(cols[9]);
            sentence_.multiword.push_back(std::move(mwt));
            return;
        }
        if (auto dot = id.find('.'); dot != std::string_view::npos) {
            auto after = to_int(id.substr(0, dot));
            if (!after || !to_int(id.substr(dot + 1)))
                throw ParseError(lineno, "non-numeric empty node id '" + std::string(id) + "'");
            sentence_.empty_nodes.push_back({*after, std::string(line)});
            return;
        }
        auto index = to_int(id);
        if (!index) throw ParseError(lineno, "non-numeric token index '" + std::string(id) + "'");
        auto head = to_int(cols[6]);
        if (!head) throw ParseError(lineno, "non-numeric head '" + std::string(cols[6]) + "'");
        Token t;
        t.index = *index;
        t.form = std::string(cols[1]);
        t.lemma = std::string(cols[2]);
        t.upos = std::string(cols[3]);
        t.xpos = std::string(cols[4]);
        try {
            t.feats = Feats::parse(cols[5]);
        } catch (const std::invalid_argument& e) {
            throw ParseError(lineno, e.what());
        }
        t.head = *head;
        t.deprel = std::string(cols[7]);
        t.deps = std::string(cols[8]);
        t.misc = std::string(cols[9]);
        sentence_.tokens.push_back(std::move(t));
    }

    void check_heads(size_t lineno) const {
        const int n = static_cast<int>(sentence_.tokens.size());
        for (const auto& t : sentence_.tokens)
            if (t.head < 0 || t.head > n)
                throw ParseError(lineno, "head " + std::to_string(t.head) + " of token " + std::to_string(t.index) +
                                             " does not resolve within 1.." + std::to_string(n));
    }

    bool started() const { return started_; }
    Sentence take() {
        started_ = false;
        return std::exchange(sentence_, Sentence{});
    }

private:
    Sentence sentence_;
    bool started_ = false;
};

template <typename OnBlock>
void scan_blocks(std::string_view text, OnBlock&& on_block) {
    size_t lineno = 0;
    size_t pos = 0;
    std::vector<std::pair<size_t, std::string_view>> block;
    auto flush = [&] {
        if (!block.empty()) on_block(block);
        block.clear();
    };
    while (pos < text.size()) {
        size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++lineno;
        if (trim(line).empty()) {
            flush();
        } else {
            block.emplace_back(lineno, line);
        }
        pos = end + 1;
    }
    flush();
}

Sentence parse_block(const std::vector<std::pair<size_t, std::string_view>>& block) {
    BlockParser parser;
    for (const auto& [lineno, line] : block) {
        if (line.front() == '#') {
            parser.comment(line);
        } else {
            parser.token_line(line, lineno);
        }
    }
    parser.check_heads(block.back().first);
    return parser.take();
}

}  // namespace

std::vector<Sentence> parse_conllu(std::string_view text) {
    std::vector<Sentence> out;
    scan_blocks(text, [&](const auto& block) {
        Sentence s = parse_block(block);
        if (s.tokens.empty() && s.multiword.empty()) return;  // comment-only block
        validate(s);
        out.push_back(std::move(s));
    });
    return out;
}

LenientParse parse_conllu_lenient(std::string_view text) {
    LenientParse result;
    scan_blocks(text, [&](const auto& block) {
        try {
            Sentence s = parse_block(block);
            if (s.tokens.empty() && s.multiword.empty()) return;
            try {
                validate(s);
            } catch (const ValidationError& e) {
                result.skipped.push_back({block.front().first, s.sent_id, e.what()});
                return;
            }
            result.sentences.push_back(std::move(s));
        } catch (const ParseError& e) {
            result.skipped.push_back({e.line(), {}, e.what()});
        }
    });
    return result;
}

// ---------------------------------------------------------------------------
// Serialization

std::string serialize_sentence(const Sentence& s) {
    validate(s);
    std::ostringstream out;
    if (!s.sent_id.empty()) out << "# sent_id = " << s.sent_id << '\n';
    for (const auto& c : s.metadata) {
        out << "# " << c.key;
        if (c.has_value) out << " = " << c.value;
        out << '\n';
    }
    auto empties_after = [&](int index) {
        for (const auto& e : s.empty_nodes)
            if (e.after == index) out << e.line << '\n';
    };
    empties_after(0);
    for (const auto& t : s.tokens) {
        for (const auto& mwt : s.multiword) {
            if (mwt.first == t.index) {
                out << mwt.first << '-' << mwt.last << '\t' << mwt.form;
                for (const auto& col : mwt.middle) out << '\t' << col;
                out << '\t' << mwt.misc << '\n';
            }
        }
        out << t.index << '\t' << t.form << '\t' << t.lemma << '\t' << t.upos << '\t' << t.xpos << '\t'
            << t.feats.str() << '\t' << t.head << '\t' << t.deprel << '\t' << t.deps << '\t' << t.misc << '\n';
        empties_after(t.index);
    }
    out << '\n';
    return out.str();
}

std::string serialize_conllu(const std::vector<Sentence>& sentences) {
    std::string out;
    for (const auto& s : sentences) out += serialize_sentence(s);
    return out;
}

std::string surface_text(const Sentence& s) {
    std::string out;
    const int n = static_cast<int>(s.tokens.size());
    int i = 1;
    while (i <= n) {
        std::string_view form;
        bool space = true;
        if (const auto* mwt = s.multiword_covering(i); mwt && mwt->first == i) {
            form = mwt->form;
            Token probe;
            probe.misc = mwt->misc;
            space = probe.space_after();
            i = mwt->last + 1;
        } else {
            const Token& t = s.token(i);
            form = t.form;
            space = t.space_after();
            ++i;
        }
        out += form;
        if (space && i <= n) out += ' ';
    }
    return out;
}

// ---------------------------------------------------------------------------
// DepTree

DepTree::DepTree(Sentence sentence) : sentence_(std::move(sentence)) {
    const int n = static_cast<int>(sentence_.tokens.size());
    children_.assign(static_cast<size_t>(n + 1), {});
    int roots = 0;
    for (const auto& t : sentence_.tokens) {
        if (t.head < 0 || t.head > n || t.head == t.index)
            throw StructureError("token " + std::to_string(t.index) + " has an unresolvable head");
        children_[static_cast<size_t>(t.head)].push_back(t.index);
        if (t.head == 0) {
            root_ = t.index;
            ++roots;
        }
    }
    if (n > 0 && roots != 1) throw StructureError("expected exactly one root, found " + std::to_string(roots));
    // Every node must be reachable from the root; otherwise the heads contain a cycle.
    if (static_cast<int>(preorder().size()) != n)
        throw StructureError("head fields do not form a connected tree (cycle detected)");
}

std::vector<int> DepTree::preorder() const {
    std::vector<int> order;
    std::vector<int> stack(children_[0].rbegin(), children_[0].rend());
    while (!stack.empty()) {
        int node = stack.back();
        stack.pop_back();
        order.push_back(node);
        const auto& kids = children_[static_cast<size_t>(node)];
        stack.insert(stack.end(), kids.rbegin(), kids.rend());
        if (order.size() > sentence_.tokens.size()) break;
    }
    return order;
}

DepTree build_tree(const Sentence& sentence) { return DepTree(sentence); }

}  // namespace morphocause::conllu
