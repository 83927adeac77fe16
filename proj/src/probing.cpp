#include "morphocause/probing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "morphocause/random.hpp"

namespace morphocause::probing {

std::string to_string(LossKind loss) { return loss == LossKind::Logistic ? "logistic" : "max-margin"; }

std::optional<LossKind> parse_loss_kind(std::string_view text) {
    if (text == "logistic") return LossKind::Logistic;
    if (text == "max-margin" || text == "max_margin" || text == "svm") return LossKind::MaxMargin;
    return std::nullopt;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
    Standardizer s;
    s.mean = X.colwise().mean();
    s.scale.resize(X.cols());
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        const double var = (X.col(c).array() - s.mean(c)).square().mean();
        s.scale(c) = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
    return s;
}

Standardizer Standardizer::identity(Eigen::Index dim) {
    return {Eigen::RowVectorXd::Zero(dim), Eigen::RowVectorXd::Ones(dim)};
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
    if (X.cols() != mean.size()) throw ProbeError("input width differs from the training data");
    return (X.rowwise() - mean).array().rowwise() / scale.array();
}

Eigen::VectorXd LinearProbe::decision(const Eigen::MatrixXd& X) const {
    return (standardizer.apply(X) * weights).array() + bias;
}

namespace {

void check_labels(const Eigen::MatrixXd& X, const std::vector<int>& y) {
    if (static_cast<size_t>(X.rows()) != y.size()) throw ProbeError("label count differs from row count");
    size_t pos = 0, neg = 0;
    for (int v : y) {
        if (v == 1)
            ++pos;
        else if (v == -1)
            ++neg;
        else
            throw ProbeError("labels must be +1 or -1");
    }
    if (pos == 0 || neg == 0) throw ProbeError("training data contains a single class");
    if (pos < 2 || neg < 2) throw ProbeError("each class needs at least two examples");
}

// Loss value and gradient over the augmented parameter vector [w; b].
double loss_and_grad(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y, LossKind loss, double l2,
                     const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    const Eigen::Index d = Z.cols();
    const double n = static_cast<double>(Z.rows());
    const Eigen::VectorXd w = theta.head(d);
    const double b = theta(d);
    const Eigen::VectorXd margin = y.array() * ((Z * w).array() + b);
    Eigen::VectorXd coeff(Z.rows());  // d loss / d margin
    double value = 0.0;
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        const double m = margin(i);
        if (loss == LossKind::Logistic) {
            value += m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
            coeff(i) = -1.0 / (1.0 + std::exp(m));
        } else {
            const double slack = std::max(0.0, 1.0 - m);
            value += slack * slack;
            coeff(i) = -2.0 * slack;
        }
    }
    const Eigen::VectorXd r = coeff.cwiseProduct(y) / n;
    grad.resize(d + 1);
    grad.head(d) = Z.transpose() * r + l2 * w;
    grad(d) = r.sum();
    return value / n + 0.5 * l2 * w.squaredNorm();
}

// Largest eigenvalue of [Z 1]^T [Z 1] / n by power iteration with a fixed start.
double gram_spectral_bound(const Eigen::MatrixXd& Z) {
    const Eigen::Index d = Z.cols();
    const double n = static_cast<double>(Z.rows());
    Eigen::VectorXd v = Eigen::VectorXd::Ones(d + 1) / std::sqrt(static_cast<double>(d + 1));
    double lambda = 0.0;
    for (int it = 0; it < 100; ++it) {
        Eigen::VectorXd zv = Z * v.head(d);
        zv.array() += v(d);
        Eigen::VectorXd next(d + 1);
        next.head(d) = Z.transpose() * zv / n;
        next(d) = zv.sum() / n;
        const double norm = next.norm();
        if (norm == 0.0) return 0.0;
        lambda = norm;
        v = next / norm;
    }
    // Power iteration approaches from below; pad so 1/L stays a safe step.
    return lambda * 1.05;
}

}  // namespace

LinearProbe train_probe(const Eigen::MatrixXd& X, const std::vector<int>& y, LossKind loss, const ProbeConfig& config) {
    check_labels(X, y);
    LinearProbe probe;
    probe.loss = loss;
    probe.standardizer = config.standardize ? Standardizer::fit(X) : Standardizer::identity(X.cols());
    const Eigen::MatrixXd Z = probe.standardizer.apply(X);
    Eigen::VectorXd yv(static_cast<Eigen::Index>(y.size()));
    for (size_t i = 0; i < y.size(); ++i) yv(static_cast<Eigen::Index>(i)) = y[i];

    const Eigen::Index d = Z.cols();
    const double curvature = loss == LossKind::Logistic ? 0.25 : 2.0;
    const double L = curvature * gram_spectral_bound(Z) + config.l2;
    const double step = L > 0 ? 1.0 / L : 1.0;

    Rng rng(config.seed);
    Eigen::VectorXd theta(d + 1);
    // Oriented by the first label, so flipping every label mirrors the whole run.
    const double orient = static_cast<double>(y.front());
    for (Eigen::Index i = 0; i < d + 1; ++i) theta(i) = orient * config.init_scale * rng.normal();
    Eigen::VectorXd prev = theta;
    Eigen::VectorXd grad;

    size_t epoch = 0;
    for (; epoch < config.max_epochs; ++epoch) {
        const double momentum = static_cast<double>(epoch) / static_cast<double>(epoch + 3);
        const Eigen::VectorXd look = theta + momentum * (theta - prev);
        loss_and_grad(Z, yv, loss, config.l2, look, grad);
        prev = theta;
        theta = look - step * grad;
        Eigen::VectorXd g;
        loss_and_grad(Z, yv, loss, config.l2, theta, g);
        probe.final_grad_norm = g.norm();
        if (probe.final_grad_norm < config.grad_tol) {
            probe.converged = true;
            ++epoch;
            break;
        }
    }
    probe.epochs = epoch;
    probe.weights = theta.head(d);
    probe.bias = theta(d);
    return probe;
}

double evaluate_probe(const LinearProbe& probe, const Eigen::MatrixXd& X, const std::vector<int>& y) {
    if (X.rows() == 0) throw ProbeError("empty test set");
    if (static_cast<size_t>(X.rows()) != y.size()) throw ProbeError("label count differs from row count");
    if (X.cols() != probe.weights.size()) throw ProbeError("probe and data differ in dimension");
    const Eigen::VectorXd s = probe.decision(X);
    size_t correct = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if ((s(i) > 0 && y[static_cast<size_t>(i)] == 1) || (s(i) < 0 && y[static_cast<size_t>(i)] == -1)) ++correct;
    return static_cast<double>(correct) / static_cast<double>(X.rows());
}

std::vector<GridCell> probe_cells(const ProbeDataset& data, LossKind loss, const ProbeConfig& config,
                                  const std::string& position_kind, Feature feature,
                                  std::vector<LinearProbe>* probes) {
    std::vector<GridCell> cells;
    Eigen::MatrixXd aug(data.train_original.rows() + data.train_counterfactual.rows(), data.train_original.cols());
    aug << data.train_original, data.train_counterfactual;
    std::vector<int> y_aug = data.y_train_original;
    y_aug.insert(y_aug.end(), data.y_train_counterfactual.begin(), data.y_train_counterfactual.end());

    struct Train {
        const char* name;
        const Eigen::MatrixXd* X;
        const std::vector<int>* y;
    };
    struct Test {
        const char* name;
        const Eigen::MatrixXd* X;
        const std::vector<int>* y;
    };
    const Train trains[] = {{"original", &data.train_original, &data.y_train_original}, {"augmented", &aug, &y_aug}};
    const Test tests[] = {{"original", &data.test_original, &data.y_test_original},
                          {"counterfactual", &data.test_counterfactual, &data.y_test_counterfactual}};
    for (const auto& tr : trains) {
        std::optional<LinearProbe> probe;
        try {
            probe = train_probe(*tr.X, *tr.y, loss, config);
        } catch (const ProbeError&) {
        }
        if (probe) {
            probe->trained_on = tr.name;
            probe->position_kind = position_kind;
            probe->feature = feature;
            if (probes) probes->push_back(*probe);
        }
        for (const auto& te : tests) {
            GridCell cell{position_kind, feature, loss, tr.name, te.name, 0.0,
                          static_cast<size_t>(tr.X->rows()), static_cast<size_t>(te.X->rows()), false};
            if (!probe || te.X->rows() == 0)
                cell.absent = true;
            else
                cell.accuracy = evaluate_probe(*probe, *te.X, *te.y);
            cells.push_back(cell);
        }
    }
    return cells;
}

namespace {

int label_of(FeatureValue v) { return is_positive_pole(v) ? 1 : -1; }

std::string source_sentence(const std::string& intervention_id) {
    // "<sent_id>:<token>:<feature>"
    auto last = intervention_id.rfind(':');
    if (last == std::string::npos || last == 0) return intervention_id;
    auto mid = intervention_id.rfind(':', last - 1);
    return mid == std::string::npos ? intervention_id : intervention_id.substr(0, mid);
}

Eigen::MatrixXd stack(const std::vector<const Eigen::VectorXd*>& rows, Eigen::Index dim) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), dim);
    for (size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = rows[i]->transpose();
    return out;
}

}  // namespace

ProbeDataset dataset_from_pairs(const std::vector<repstore::RepPair>& pairs, uint64_t seed, bool* split_fallback) {
    ProbeDataset data;
    if (pairs.empty()) return data;
    const Eigen::Index dim = pairs.front().original.size();

    bool any_test = std::any_of(pairs.begin(), pairs.end(), [](const auto& p) { return p.split == "test"; });
    std::set<std::string> test_sentences;
    if (!any_test) {
        std::vector<std::string> sentences;
        for (const auto& p : pairs) sentences.push_back(source_sentence(p.intervention_id));
        std::sort(sentences.begin(), sentences.end());
        sentences.erase(std::unique(sentences.begin(), sentences.end()), sentences.end());
        Rng rng(seed);
        rng.shuffle(sentences.begin(), sentences.end());
        const size_t n_test = std::max<size_t>(1, sentences.size() / 5);
        test_sentences.insert(sentences.begin(), sentences.begin() + static_cast<long>(std::min(n_test, sentences.size())));
    }
    if (split_fallback) *split_fallback = !any_test;

    std::vector<const Eigen::VectorXd*> tr_o, tr_c, te_o, te_c;
    for (const auto& p : pairs) {
        const bool is_test = any_test ? p.split == "test" : test_sentences.contains(source_sentence(p.intervention_id));
        const int yo = label_of(p.focus.source_value);
        const int yc = label_of(p.focus.target_value);
        if (is_test) {
            te_o.push_back(&p.original);
            data.y_test_original.push_back(yo);
            te_c.push_back(&p.counterfactual);
            data.y_test_counterfactual.push_back(yc);
        } else {
            tr_o.push_back(&p.original);
            data.y_train_original.push_back(yo);
            tr_c.push_back(&p.counterfactual);
            data.y_train_counterfactual.push_back(yc);
        }
    }
    data.train_original = stack(tr_o, dim);
    data.train_counterfactual = stack(tr_c, dim);
    data.test_original = stack(te_o, dim);
    data.test_counterfactual = stack(te_c, dim);
    return data;
}

ProbeReport probing_grid(const std::vector<StoreInput>& stores,
                         const std::vector<intervention::CounterfactualPair>& augmented,
                         const std::vector<LossKind>& losses, const ProbeConfig& config) {
    ProbeReport report;
    std::set<Feature> features;
    for (const auto& p : augmented) features.insert(p.focus.feature);

    for (const auto& input : stores) {
        for (Feature feature : features) {
            std::vector<intervention::CounterfactualPair> subset;
            for (const auto& p : augmented)
                if (p.focus.feature == feature) subset.push_back(p);
            for (LossKind loss : losses) {
                if (!input.store) {
                    for (const char* tr : {"original", "augmented"})
                        for (const char* te : {"original", "counterfactual"})
                            report.cells.push_back({input.position_kind, feature, loss, tr, te, 0.0, 0, 0, true});
                    continue;
                }
                auto joined = repstore::join_pairs(*input.store, subset);
                bool fallback = false;
                auto data = dataset_from_pairs(joined.pairs, config.seed, &fallback);
                if (fallback)
                    report.notes.push_back(input.position_kind + "/" + std::string(to_string(feature)) +
                                           ": no test split in the corpus, used a seeded 80/20 sentence split");
                auto cells = probe_cells(data, loss, config, input.position_kind, feature, &report.probes);
                report.cells.insert(report.cells.end(), cells.begin(), cells.end());
            }
        }
    }
    std::sort(report.notes.begin(), report.notes.end());
    report.notes.erase(std::unique(report.notes.begin(), report.notes.end()), report.notes.end());
    return report;
}

std::string ProbeReport::tsv() const {
    std::string out = "position\tfeature\tloss\ttrain\ttest\taccuracy\tn_train\tn_test\n";
    char buf[32];
    for (const auto& c : cells) {
        if (c.absent)
            std::snprintf(buf, sizeof buf, "NA");
        else
            std::snprintf(buf, sizeof buf, "%.6f", c.accuracy);
        out += c.position_kind + "\t" + std::string(morphocause::to_string(c.feature)) + "\t" + to_string(c.loss) +
               "\t" + c.train_set + "\t" + c.test_set + "\t" + buf + "\t" + std::to_string(c.n_train) + "\t" +
               std::to_string(c.n_test) + "\n";
    }
    return out;
}

nlohmann::json ProbeReport::json() const {
    nlohmann::json j;
    auto arr = nlohmann::json::array();
    for (const auto& c : cells) {
        nlohmann::json x{{"position", c.position_kind},
                         {"feature", std::string(morphocause::to_string(c.feature))},
                         {"loss", to_string(c.loss)},
                         {"train", c.train_set},
                         {"test", c.test_set},
                         {"n_train", c.n_train},
                         {"n_test", c.n_test}};
        if (c.absent)
            x["accuracy"] = nullptr;
        else
            x["accuracy"] = c.accuracy;
        arr.push_back(x);
    }
    j["cells"] = arr;
    j["notes"] = notes;
    return j;
}

std::string probe_label(const LinearProbe& probe) {
    return probe.position_kind + "/" + std::string(morphocause::to_string(probe.feature)) + "/" +
           to_string(probe.loss) + "/" + probe.trained_on;
}

namespace {

std::vector<double> as_vector(const Eigen::RowVectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::RowVectorXd as_row(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void save_probes(const std::filesystem::path& dir, const std::vector<LinearProbe>& probes, const std::string& model_id) {
    repstore::Manifest m;
    m.kind = repstore::StoreKind::Probe;
    m.model_id = model_id;
    m.dim = probes.empty() ? 0 : static_cast<size_t>(probes.front().weights.size());
    m.count = 3 * probes.size();
    repstore::RowMatrixF rows(static_cast<Eigen::Index>(m.count), static_cast<Eigen::Index>(m.dim));
    auto meta = nlohmann::json::array();
    for (size_t i = 0; i < probes.size(); ++i) {
        const auto& p = probes[i];
        if (static_cast<size_t>(p.weights.size()) != m.dim) throw ProbeError("probes of different widths");
        const auto r = static_cast<Eigen::Index>(3 * i);
        rows.row(r) = p.weights.cast<float>().transpose();
        rows.row(r + 1) = p.standardizer.mean.cast<float>();
        rows.row(r + 2) = p.standardizer.scale.cast<float>();
        const std::string label = probe_label(p);
        for (const char* variant : {"weights", "mean", "scale"}) m.index.push_back({label, variant, 0});
        meta.push_back({{"label", label},
                        {"position", p.position_kind},
                        {"feature", std::string(morphocause::to_string(p.feature))},
                        {"loss", to_string(p.loss)},
                        {"trained_on", p.trained_on},
                        {"bias", p.bias},
                        {"epochs", p.epochs},
                        {"final_grad_norm", p.final_grad_norm},
                        {"converged", p.converged},
                        {"weights_f64", as_vector(p.weights.transpose())},
                        {"mean_f64", as_vector(p.standardizer.mean)},
                        {"scale_f64", as_vector(p.standardizer.scale)}});
    }
    m.extra["probes"] = meta;
    repstore::write_store(dir, m, rows);
}

std::vector<LinearProbe> load_probes(const std::filesystem::path& dir) {
    auto store = repstore::read_store(dir);
    if (store.manifest.kind != repstore::StoreKind::Probe) throw ProbeError(dir.string() + " is not a probe store");
    std::vector<LinearProbe> out;
    try {
        for (const auto& j : store.manifest.extra.at("probes")) {
            LinearProbe p;
            p.position_kind = j.at("position").get<std::string>();
            auto feature = parse_feature(j.at("feature").get<std::string>());
            auto loss = parse_loss_kind(j.at("loss").get<std::string>());
            if (!feature || !loss) throw ProbeError("unknown feature or loss in probe store");
            p.feature = *feature;
            p.loss = *loss;
            p.trained_on = j.at("trained_on").get<std::string>();
            p.bias = j.at("bias").get<double>();
            p.epochs = j.at("epochs").get<size_t>();
            p.final_grad_norm = j.at("final_grad_norm").get<double>();
            p.converged = j.at("converged").get<bool>();
            p.weights = as_row(j.at("weights_f64").get<std::vector<double>>()).transpose();
            p.standardizer.mean = as_row(j.at("mean_f64").get<std::vector<double>>());
            p.standardizer.scale = as_row(j.at("scale_f64").get<std::vector<double>>());
            out.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ProbeError(std::string("malformed probe store: ") + e.what());
    }
    return out;
}

}  // namespace morphocause::probing
