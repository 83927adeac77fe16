#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphocause/features.hpp"
#include "morphocause/intervention.hpp"
#include "morphocause/repstore.hpp"

namespace morphocause::probing {

enum class LossKind { Logistic, MaxMargin };

std::string to_string(LossKind loss);
std::optional<LossKind> parse_loss_kind(std::string_view text);

class ProbeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ProbeConfig {
    double l2 = 1e-3;
    size_t max_epochs = 2000;
    double grad_tol = 1e-6;
    uint64_t seed = 0;
    bool standardize = true;
    // Scale of the seeded random initialization of the weights.
    double init_scale = 1e-3;
};

/// Per-dimension z-scoring fit on training data. Constant columns get scale 1.
struct Standardizer {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;

    static Standardizer fit(const Eigen::MatrixXd& X);
    static Standardizer identity(Eigen::Index dim);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

/// Labels are +1 for the positive pole (Masc, Sing) and -1 otherwise.
struct LinearProbe {
    Eigen::VectorXd weights;
    double bias = 0.0;
    LossKind loss = LossKind::Logistic;
    Standardizer standardizer;
    size_t epochs = 0;
    double final_grad_norm = 0.0;
    bool converged = false;
    // Descriptive tags for reports.
    std::string trained_on;
    std::string position_kind;
    Feature feature = Feature::Gender;

    /// Decision values w.x + b on standardized inputs.
    Eigen::VectorXd decision(const Eigen::MatrixXd& X) const;
};

/// L2-regularized logistic or squared-hinge loss, minimized full-batch with
/// Nesterov-accelerated gradient descent (step 1/L). Deterministic per seed.
LinearProbe train_probe(const Eigen::MatrixXd& X, const std::vector<int>& y, LossKind loss,
                        const ProbeConfig& config = {});

/// Fraction of examples with sign(w.x + b) equal to the label; a decision
/// value of exactly zero counts as an error.
double evaluate_probe(const LinearProbe& probe, const Eigen::MatrixXd& X, const std::vector<int>& y);

/// Train/test material for one (position, feature) cell group.
struct ProbeDataset {
    Eigen::MatrixXd train_original;
    std::vector<int> y_train_original;
    Eigen::MatrixXd train_counterfactual;
    std::vector<int> y_train_counterfactual;
    Eigen::MatrixXd test_original;
    std::vector<int> y_test_original;
    Eigen::MatrixXd test_counterfactual;
    std::vector<int> y_test_counterfactual;
};

struct GridCell {
    std::string position_kind;
    Feature feature = Feature::Gender;
    LossKind loss = LossKind::Logistic;
    std::string train_set;  // original | augmented
    std::string test_set;   // original | counterfactual
    double accuracy = 0.0;
    size_t n_train = 0;
    size_t n_test = 0;
    bool absent = false;
};

/// The four train/test combinations for one dataset.
/// Trained probes are appended to `probes` when given.
std::vector<GridCell> probe_cells(const ProbeDataset& data, LossKind loss, const ProbeConfig& config,
                                  const std::string& position_kind = "", Feature feature = Feature::Gender,
                                  std::vector<LinearProbe>* probes = nullptr);

/// Builds a dataset from a representation store. Test pairs are those whose
/// split is "test"; when no pair carries that split, source sentences are
/// divided 80/20 by a seeded shuffle and `split_fallback` is set.
ProbeDataset dataset_from_pairs(const std::vector<repstore::RepPair>& pairs, uint64_t seed,
                                bool* split_fallback = nullptr);

struct ProbeReport {
    std::vector<GridCell> cells;
    std::vector<LinearProbe> probes;
    std::vector<std::string> notes;

    std::string tsv() const;
    nlohmann::json json() const;
};

struct StoreInput {
    std::string position_kind;
    const repstore::Store* store = nullptr;  // null marks the cells absent
};

ProbeReport probing_grid(const std::vector<StoreInput>& stores,
                         const std::vector<intervention::CounterfactualPair>& augmented,
                         const std::vector<LossKind>& losses, const ProbeConfig& config);

/// "<position>/<feature>/<loss>/<trained_on>"
std::string probe_label(const LinearProbe& probe);

/// Probe store: three rows per probe (weights, standardizer mean, standardizer
/// scale); bias and training diagnostics live in the manifest.
void save_probes(const std::filesystem::path& dir, const std::vector<LinearProbe>& probes,
                 const std::string& model_id = "");
std::vector<LinearProbe> load_probes(const std::filesystem::path& dir);

}  // namespace morphocause::probing
