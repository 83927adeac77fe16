#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphocause/intervention.hpp"

namespace morphocause::repstore {

using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr char kMagic[] = "NCPREPS1";
inline constexpr size_t kMagicSize = 8;
inline constexpr const char* kDtype = "float32-le";

class StoreError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
/// Rows do not match the declared (count, dim), or the index length differs.
class ShapeError : public StoreError {
public:
    using StoreError::StoreError;
};
class NonFiniteError : public StoreError {
public:
    using StoreError::StoreError;
};
/// Payload size or magic header does not match the manifest.
class CorruptionError : public StoreError {
public:
    using StoreError::StoreError;
};
/// Unknown dtype in the manifest.
class VersionError : public StoreError {
public:
    using StoreError::StoreError;
};
/// Manifest count disagrees with index.tsv.
class ConsistencyError : public StoreError {
public:
    using StoreError::StoreError;
};
/// A required store file is absent.
class MissingStoreError : public StoreError {
public:
    using StoreError::StoreError;
};

enum class StoreKind { Reps, Dist, Estimate, Probe };

std::string to_string(StoreKind kind);
std::optional<StoreKind> parse_store_kind(std::string_view text);

struct IndexEntry {
    std::string intervention_id;
    // "original" / "counterfactual" for corpus stores, "hat_naive" / "hat_paired"
    // for re-scored distributions, feature values ("Masc") for templated stores.
    std::string variant;
    int token_index = 0;

    friend bool operator==(const IndexEntry&, const IndexEntry&) = default;
};

struct Manifest {
    size_t dim = 0;
    size_t count = 0;
    std::string dtype = kDtype;
    StoreKind kind = StoreKind::Reps;
    std::string model_id;
    // focus, det, adj, cls_or_last, masked
    std::string position_kind;
    // Distribution stores only: "full" or "subset".
    std::string vocab_scope;
    std::vector<int64_t> vocab_ids;
    std::vector<std::string> vocab_tokens;
    // "random-weights" for randomized-model baselines.
    std::string baseline;
    // Free-form extra fields (estimate kind, feature, sample size, ...).
    nlohmann::json extra = nlohmann::json::object();
    std::vector<IndexEntry> index;

    nlohmann::json to_json() const;
    static Manifest from_json(const nlohmann::json& j);

    friend bool operator==(const Manifest&, const Manifest&) = default;
};

struct Store {
    Manifest manifest;
    RowMatrixF rows;

    /// Row for (intervention_id, variant), if present.
    std::optional<size_t> find(const std::string& intervention_id, const std::string& variant) const;
};

/// Writes manifest.json, reps.f32 and index.tsv into `dir` (created if needed).
/// Byte-stable for identical inputs.
void write_store(const std::filesystem::path& dir, const Manifest& manifest, const RowMatrixF& rows);
void write_store(const std::filesystem::path& dir, const Store& store);

Store read_store(const std::filesystem::path& dir);

/// (intervention_id, variant) -> row.
std::map<std::pair<std::string, std::string>, size_t> row_lookup(const Store& store);

/// Both variants of one intervention at the store's position.
struct RepPair {
    std::string intervention_id;
    Eigen::VectorXd original;
    Eigen::VectorXd counterfactual;
    intervention::FocusSpec focus;
    std::string split;
};

struct JoinResult {
    std::vector<RepPair> pairs;  // sorted by intervention_id
    size_t skipped = 0;          // store intervention ids that did not form a pair
};

JoinResult join_pairs(const Store& store, const std::vector<intervention::CounterfactualPair>& augmented);

/// Templated minimal pairs: rows keyed by intervention_id with the feature
/// value as variant. Returns (positive pole, negative pole) vectors.
struct ValuePair {
    std::string intervention_id;
    Eigen::VectorXd positive;
    Eigen::VectorXd negative;
};

struct ValueJoinResult {
    std::vector<ValuePair> pairs;
    size_t skipped = 0;
};

ValueJoinResult join_value_pairs(const Store& store, Feature feature);

}  // namespace morphocause::repstore
