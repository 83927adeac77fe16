#include "morphocause/repstore.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace morphocause::repstore {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(StoreKind kind) {
    switch (kind) {
        case StoreKind::Reps: return "reps";
        case StoreKind::Dist: return "dist";
        case StoreKind::Estimate: return "estimate";
        case StoreKind::Probe: return "probe";
    }
    return "reps";
}

std::optional<StoreKind> parse_store_kind(std::string_view text) {
    if (text == "reps") return StoreKind::Reps;
    if (text == "dist") return StoreKind::Dist;
    if (text == "estimate") return StoreKind::Estimate;
    if (text == "probe") return StoreKind::Probe;
    return std::nullopt;
}

json Manifest::to_json() const {
    json j;
    j["dim"] = dim;
    j["count"] = count;
    j["dtype"] = dtype;
    j["kind"] = to_string(kind);
    j["model_id"] = model_id;
    j["position_kind"] = position_kind;
    if (!vocab_scope.empty()) j["vocab_scope"] = vocab_scope;
    if (!vocab_ids.empty()) j["vocab_ids"] = vocab_ids;
    if (!vocab_tokens.empty()) j["vocab_tokens"] = vocab_tokens;
    if (!baseline.empty()) j["baseline"] = baseline;
    if (!extra.empty()) j["extra"] = extra;
    return j;
}

Manifest Manifest::from_json(const json& j) {
    Manifest m;
    try {
        m.dtype = j.at("dtype").get<std::string>();
        if (m.dtype != kDtype) throw VersionError("unsupported dtype '" + m.dtype + "'");
        m.dim = j.at("dim").get<size_t>();
        m.count = j.at("count").get<size_t>();
        auto kind = parse_store_kind(j.value("kind", "reps"));
        if (!kind) throw VersionError("unknown store kind '" + j.value("kind", "") + "'");
        m.kind = *kind;
        m.model_id = j.value("model_id", "");
        m.position_kind = j.value("position_kind", "");
        m.vocab_scope = j.value("vocab_scope", "");
        if (j.contains("vocab_ids")) m.vocab_ids = j.at("vocab_ids").get<std::vector<int64_t>>();
        if (j.contains("vocab_tokens")) m.vocab_tokens = j.at("vocab_tokens").get<std::vector<std::string>>();
        m.baseline = j.value("baseline", "");
        if (j.contains("extra")) m.extra = j.at("extra");
    } catch (const json::exception& e) {
        throw CorruptionError(std::string("malformed manifest: ") + e.what());
    }
    return m;
}

std::optional<size_t> Store::find(const std::string& intervention_id, const std::string& variant) const {
    for (size_t i = 0; i < manifest.index.size(); ++i) {
        const auto& e = manifest.index[i];
        if (e.intervention_id == intervention_id && e.variant == variant) return i;
    }
    return std::nullopt;
}

namespace {

void put_le32(std::string& out, float f) {
    uint32_t u = std::bit_cast<uint32_t>(f);
    for (int b = 0; b < 4; ++b) out += static_cast<char>((u >> (8 * b)) & 0xFF);
}

float get_le32(const char* p) {
    uint32_t u = 0;
    for (int b = 0; b < 4; ++b) u |= static_cast<uint32_t>(static_cast<unsigned char>(p[b])) << (8 * b);
    return std::bit_cast<float>(u);
}

void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw StoreError("write failed for " + path.string());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingStoreError("missing store file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void check_field(const std::string& s, const char* what) {
    if (s.find_first_of("\t\n\r") != std::string::npos)
        throw StoreError(std::string(what) + " contains a tab or newline: '" + s + "'");
}

}  // namespace

void write_store(const fs::path& dir, const Manifest& manifest, const RowMatrixF& rows) {
    if (manifest.dtype != kDtype) throw VersionError("unsupported dtype '" + manifest.dtype + "'");
    if (static_cast<size_t>(rows.rows()) != manifest.count ||
        (manifest.count > 0 && static_cast<size_t>(rows.cols()) != manifest.dim))
        throw ShapeError("rows are " + std::to_string(rows.rows()) + "x" + std::to_string(rows.cols()) +
                         ", manifest declares " + std::to_string(manifest.count) + "x" + std::to_string(manifest.dim));
    if (manifest.index.size() != manifest.count)
        throw ShapeError("index has " + std::to_string(manifest.index.size()) + " entries for " +
                         std::to_string(manifest.count) + " rows");
    if (!manifest.vocab_ids.empty() && manifest.kind == StoreKind::Dist && manifest.vocab_ids.size() != manifest.dim)
        throw ShapeError("vocab_ids length differs from dim");
    for (Eigen::Index i = 0; i < rows.size(); ++i)
        if (!std::isfinite(rows.data()[i]))
            throw NonFiniteError("non-finite value in row " + std::to_string(i / std::max<Eigen::Index>(1, rows.cols())));

    fs::create_directories(dir);
    write_file(dir / "manifest.json", manifest.to_json().dump(2) + "\n");

    std::string payload(kMagic, kMagicSize);
    payload.reserve(kMagicSize + manifest.count * manifest.dim * 4);
    for (size_t r = 0; r < manifest.count; ++r)
        for (size_t c = 0; c < manifest.dim; ++c)
            put_le32(payload, rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    write_file(dir / "reps.f32", payload);

    std::string index = "row\tintervention_id\tvariant\ttoken_index\n";
    for (size_t r = 0; r < manifest.index.size(); ++r) {
        const auto& e = manifest.index[r];
        check_field(e.intervention_id, "intervention_id");
        check_field(e.variant, "variant");
        index += std::to_string(r) + "\t" + e.intervention_id + "\t" + e.variant + "\t" +
                 std::to_string(e.token_index) + "\n";
    }
    write_file(dir / "index.tsv", index);
}

void write_store(const fs::path& dir, const Store& store) { write_store(dir, store.manifest, store.rows); }

Store read_store(const fs::path& dir) {
    if (!fs::exists(dir / "manifest.json")) throw MissingStoreError("no store at " + dir.string());
    json j;
    try {
        j = json::parse(read_file(dir / "manifest.json"));
    } catch (const json::parse_error& e) {
        throw CorruptionError(std::string("manifest is not JSON: ") + e.what());
    }
    Store store;
    store.manifest = Manifest::from_json(j);
    auto& m = store.manifest;

    const std::string payload = read_file(dir / "reps.f32");
    const size_t expected = kMagicSize + m.count * m.dim * 4;
    if (payload.size() != expected)
        throw CorruptionError("reps.f32 has " + std::to_string(payload.size()) + " bytes, expected " +
                              std::to_string(expected));
    if (payload.compare(0, kMagicSize, kMagic, kMagicSize) != 0) throw CorruptionError("bad magic header");

    store.rows.resize(static_cast<Eigen::Index>(m.count), static_cast<Eigen::Index>(m.dim));
    const char* p = payload.data() + kMagicSize;
    for (size_t r = 0; r < m.count; ++r)
        for (size_t c = 0; c < m.dim; ++c, p += 4)
            store.rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = get_le32(p);

    std::stringstream index(read_file(dir / "index.tsv"));
    std::string line;
    std::getline(index, line);  // header
    while (std::getline(index, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ls(line);
        std::string col;
        while (std::getline(ls, col, '\t')) cols.push_back(col);
        if (cols.size() != 4) throw ConsistencyError("index.tsv row with " + std::to_string(cols.size()) + " columns");
        if (cols[0] != std::to_string(m.index.size())) throw ConsistencyError("index.tsv rows out of order");
        IndexEntry e;
        e.intervention_id = cols[1];
        e.variant = cols[2];
        try {
            e.token_index = std::stoi(cols[3]);
        } catch (const std::exception&) {
            throw ConsistencyError("index.tsv has a non-numeric token_index");
        }
        m.index.push_back(std::move(e));
    }
    if (m.index.size() != m.count)
        throw ConsistencyError("manifest count " + std::to_string(m.count) + " but index.tsv has " +
                               std::to_string(m.index.size()) + " rows");
    return store;
}

std::map<std::pair<std::string, std::string>, size_t> row_lookup(const Store& store) {
    std::map<std::pair<std::string, std::string>, size_t> out;
    for (size_t i = 0; i < store.manifest.index.size(); ++i) {
        const auto& e = store.manifest.index[i];
        out.emplace(std::make_pair(e.intervention_id, e.variant), i);
    }
    return out;
}

namespace {

Eigen::VectorXd row_as_double(const Store& store, size_t row) {
    return store.rows.row(static_cast<Eigen::Index>(row)).cast<double>().transpose();
}

}  // namespace

JoinResult join_pairs(const Store& store, const std::vector<intervention::CounterfactualPair>& augmented) {
    std::map<std::string, std::pair<std::optional<size_t>, std::optional<size_t>>> rows;
    for (size_t i = 0; i < store.manifest.index.size(); ++i) {
        const auto& e = store.manifest.index[i];
        auto& slot = rows[e.intervention_id];
        if (e.variant == "original")
            slot.first = i;
        else if (e.variant == "counterfactual")
            slot.second = i;
    }
    std::map<std::string, const intervention::CounterfactualPair*> by_id;
    for (const auto& p : augmented) by_id[p.intervention_id] = &p;

    JoinResult out;
    for (const auto& [id, slot] : rows) {
        auto pair = by_id.find(id);
        if (!slot.first || !slot.second || pair == by_id.end()) {
            out.skipped++;
            continue;
        }
        out.pairs.push_back({id, row_as_double(store, *slot.first), row_as_double(store, *slot.second),
                             pair->second->focus, pair->second->split});
    }
    return out;
}

ValueJoinResult join_value_pairs(const Store& store, Feature feature) {
    const std::string pos(morphocause::to_string(positive_pole(feature)));
    const std::string neg(morphocause::to_string(negative_pole(feature)));
    std::map<std::string, std::pair<std::optional<size_t>, std::optional<size_t>>> rows;
    for (size_t i = 0; i < store.manifest.index.size(); ++i) {
        const auto& e = store.manifest.index[i];
        auto& slot = rows[e.intervention_id];
        if (e.variant == pos)
            slot.first = i;
        else if (e.variant == neg)
            slot.second = i;
    }
    ValueJoinResult out;
    for (const auto& [id, slot] : rows) {
        if (!slot.first || !slot.second) {
            out.skipped++;
            continue;
        }
        out.pairs.push_back({id, row_as_double(store, *slot.first), row_as_double(store, *slot.second)});
    }
    return out;
}

}  // namespace morphocause::repstore
