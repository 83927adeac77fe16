// Acceptance checks: one PASS/FAIL line per criterion.
//   acceptance [--skip NAME]... [NAME]...
// Without names every criterion runs. The exit status is nonzero when any
// selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "../oracles.hpp"
#include "morphocause/adjbias.hpp"
#include "morphocause/divergence.hpp"
#include "morphocause/estimators.hpp"
#include "morphocause/evaluation.hpp"
#include "morphocause/geometry.hpp"
#include "morphocause/intervention.hpp"
#include "morphocause/probing.hpp"
#include "morphocause/synthetic.hpp"

using namespace morphocause;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path data(const std::string& name) { return fs::path(TEST_DATA_DIR) / name; }

const lexicon::Lexicon& lex() {
    static const lexicon::Lexicon l = lexicon::Lexicon::load_default();
    return l;
}

std::vector<conllu::Sentence> fixture() { return conllu::parse_conllu(read_file(data("fixture200.conllu"))); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome involution() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    size_t total = 0, restored = 0;
    for (Feature f : {Feature::Gender, Feature::Number}) {
        auto corpus = intervention::augment_corpus(fixture(), f, lex());
        for (const auto& p : corpus.pairs) {
            ++total;
            auto back = intervention::reinflect_tree(conllu::DepTree(p.counterfactual),
                                                     intervention::reversed(p.focus), lex());
            if (conllu::serialize_sentence(back.counterfactual) == conllu::serialize_sentence(p.original)) ++restored;
        }
    }
    const double secs = seconds_since(t0);
    o.require(total > 0, "no pairs produced");
    o.require(restored == total, std::to_string(total - restored) + " pairs not restored");
    o.require(secs < 5.0, "runtime " + fmt("%.2f", secs) + " s");
    o.detail = std::to_string(restored) + "/" + std::to_string(total) + " pairs restored in " + fmt("%.2f", secs) +
               " s" + (o.detail.empty() ? "" : " (" + o.detail + ")");
    return o;
}

Outcome context_preservation() {
    Outcome o;
    size_t pairs = 0, bad_context = 0, bad_locality = 0;
    for (Feature f : {Feature::Gender, Feature::Number}) {
        auto corpus = intervention::augment_corpus(fixture(), f, lex());
        for (const auto& p : corpus.pairs) {
            ++pairs;
            const auto allowed = oracle::allowed_indices(p.original, p.focus.token_index);
            bool context_ok = p.original.size() == p.counterfactual.size();
            bool local_ok = true;
            for (const auto& t : p.original.tokens) {
                if (!context_ok) break;
                const auto& u = p.counterfactual.token(t.index);
                if (!p.changed_indices.count(t.index)) {
                    context_ok = context_ok && t == u;
                } else {
                    local_ok = local_ok && allowed.count(t.index) && t.head == u.head && t.deprel == u.deprel;
                }
            }
            bad_context += !context_ok;
            bad_locality += !local_ok;
        }
    }
    o.require(bad_context == 0, std::to_string(bad_context) + " pairs alter unchanged tokens");
    o.require(bad_locality == 0, std::to_string(bad_locality) + " pairs change unreachable tokens");
    if (o.pass) o.detail = std::to_string(pairs) + " pairs audited";
    return o;
}

Outcome example_fidelity() {
    Outcome o;
    auto load = [](const char* name) { return conllu::parse_conllu(read_file(data(name))).at(0); };
    auto ex1 = intervention::reinflect_tree(conllu::DepTree(load("example1.conllu")),
                                            {2, Feature::Gender, FeatureValue::Masc, FeatureValue::Fem}, lex());
    auto ex3 = intervention::reinflect_tree(conllu::DepTree(load("example3.conllu")),
                                            {2, Feature::Gender, FeatureValue::Fem, FeatureValue::Masc}, lex());
    const std::string s2 = conllu::surface_text(ex1.counterfactual);
    const std::string s4 = conllu::surface_text(ex3.counterfactual);
    o.require(s2 == "La programadora talentosa escribió el código.", "example (2): '" + s2 + "'");
    o.require(s4 == "El hombre dio a luz a 6 bebés.", "example (4): '" + s4 + "'");
    if (o.pass) o.detail = "'" + s2 + "', '" + s4 + "'";
    return o;
}

// Treebank locations come from the environment; each variable holds one or
// more CoNLL-U paths separated by ':'.
Outcome table1() {
    struct Row {
        const char* env;
        const char* label;
        size_t gender[2];
        size_t number[2];
    };
    const Row rows[] = {{"MORPHOCAUSE_ANCORA_TRAIN_DEV", "AnCora train+dev", {1029, 203}, {14602, 6692}},
                        {"MORPHOCAUSE_ANCORA_TEST", "AnCora test", {107, 21}, {1540, 693}},
                        {"MORPHOCAUSE_GSD", "GSD", {403, 135}, {9141, 3993}}};
    Outcome o;
    std::vector<std::string> missing;
    for (const auto& r : rows)
        if (!std::getenv(r.env)) missing.push_back(r.env);
    if (!missing.empty()) {
        o.pass = false;
        o.detail = "treebanks not available (set";
        for (const auto& m : missing) o.detail += " " + m;
        o.detail += ")";
        return o;
    }
    char tmpl[] = "/tmp/morphocause-table1-XXXXXX";
    const fs::path tmp = ::mkdtemp(tmpl);
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> found;
    for (const auto& r : rows) {
        std::string inputs;
        std::stringstream paths(std::getenv(r.env));
        for (std::string p; std::getline(paths, p, ':');)
            if (!p.empty()) inputs += " --in '" + p + "'";
        for (int fi = 0; fi < 2; ++fi) {
            const char* feature = fi == 0 ? "gender" : "number";
            const fs::path out = tmp / (std::string(r.env) + "-" + feature);
            const std::string cmd = std::string("'") + MORPHOCAUSE_CLI + "' augment --feature " + feature + inputs +
                                    " --out '" + out.string() + "' >/dev/null 2>&1";
            const int status = std::system(cmd.c_str());
            if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
                o.require(false, std::string(r.label) + " " + feature + ": augment failed");
                continue;
            }
            auto summary = nlohmann::json::parse(read_file(out / "summary.json"));
            const auto& focus = summary["focus"];
            const char* a = fi == 0 ? "Masc" : "Sing";
            const char* b = fi == 0 ? "Fem" : "Plur";
            const size_t* expect = fi == 0 ? r.gender : r.number;
            const size_t got_a = focus[a], got_b = focus[b];
            found.push_back(std::string(r.label) + " " + feature + " " + std::to_string(got_a) + "/" +
                            std::to_string(got_b));
            o.require(got_a == expect[0] && got_b == expect[1],
                      std::string(r.label) + " " + feature + " " + std::to_string(got_a) + "/" +
                          std::to_string(got_b) + " expected " + std::to_string(expect[0]) + "/" +
                          std::to_string(expect[1]));
        }
    }
    const double secs = seconds_since(t0);
    o.require(secs < 120.0, "runtime " + fmt("%.1f", secs) + " s");
    fs::remove_all(tmp);
    if (o.pass) {
        for (const auto& f : found) o.detail += (o.detail.empty() ? "" : ", ") + f;
        o.detail += " in " + fmt("%.1f", secs) + " s";
    }
    return o;
}

Outcome estimator_identities() {
    Outcome o;
    synthetic::ExactEffectConfig cfg;  // 5,000 pairs, dim 64
    auto corpus = synthetic::exact_effect_corpus(cfg);
    auto paired = estimators::ate_paired(corpus.pairs, "A");
    std::vector<Eigen::VectorXd> ites;
    for (const auto& p : corpus.pairs) ites.push_back(estimators::ite(p).vector);
    const Eigen::VectorXd mean = estimators::pairwise_mean(ites);
    o.require(std::memcmp(mean.data(), paired.vector.data(), sizeof(double) * static_cast<size_t>(mean.size())) == 0,
              "paired estimate differs from mean ITE");
    const double err = (paired.vector - corpus.v).cwiseAbs().maxCoeff();
    o.require(err < 1e-6, "max-abs error " + fmt("%.3g", err));
    auto naive = estimators::ate_naive(estimators::naive_groups(corpus.pairs), cfg.feature, "A");
    const double dev = (naive.vector - corpus.v - corpus.confound).norm() / corpus.confound.norm();
    o.require(dev < 0.05, "naive deviates from v + c by " + fmt("%.3f", dev) + " |c|");

    synthetic::ExactEffectConfig other = cfg;
    other.seed = 2;
    other.prefix = "other";
    auto paired_b = estimators::ate_paired(synthetic::exact_effect_corpus(other).pairs, "B");
    auto m = estimators::estimate_matrix({paired, paired_b, naive});
    const double pp = m.values(0, 1), pn = std::max(m.values(0, 2), m.values(1, 2));
    o.require(pp > pn, "paired-paired " + fmt("%.3f", pp) + " <= paired-naive " + fmt("%.3f", pn));
    if (o.pass)
        o.detail = "max-abs " + fmt("%.1e", err) + ", naive dev " + fmt("%.4f", dev) + " |c|, cos(P,P) " +
                   fmt("%.3f", pp) + " > cos(P,N) " + fmt("%.3f", pn);
    return o;
}

Outcome jsd_properties() {
    Outcome o;
    Rng rng(2024);
    size_t asym = 0, out_of_bounds = 0;
    double max_oracle = 0;
    for (int i = 0; i < 10000; ++i) {
        auto p = oracle::random_simplex(rng, 2 + rng.below(40), 0.3);
        auto q = oracle::random_simplex(rng, p.size(), 0.3);
        const double a = divergence::js_divergence(p, q), b = divergence::js_divergence(q, p);
        asym += a != b;
        out_of_bounds += a < 0.0 || a > std::numbers::ln2;
        max_oracle = std::max(max_oracle, std::abs(a - oracle::jsd_entropy_form(p, q)));
    }
    o.require(asym == 0, std::to_string(asym) + " asymmetric pairs");
    o.require(out_of_bounds == 0, std::to_string(out_of_bounds) + " values outside [0, ln 2]");
    o.require(max_oracle < 1e-9, "entropy-form disagreement " + fmt("%.2g", max_oracle));
    auto p = oracle::random_simplex(rng, 50, 0.0);
    o.require(divergence::js_divergence(p, p) == 0.0, "JSD(p, p) != 0");
    const double disjoint = divergence::js_divergence(std::vector<double>{0.3, 0.7, 0, 0}, std::vector<double>{0, 0, 0.6, 0.4});
    o.require(std::abs(disjoint - std::numbers::ln2) <= 1e-9, "disjoint JSD " + fmt("%.12f", disjoint));

    synthetic::ExactEffectConfig cfg;
    cfg.n_pairs = 2000;
    auto corpus = synthetic::exact_effect_corpus(cfg);
    auto paired = estimators::ate_paired(corpus.pairs);
    auto naive = estimators::ate_naive(estimators::naive_groups(corpus.pairs), cfg.feature);
    auto store = synthetic::distribution_store(corpus.pairs, synthetic::random_head(100, cfg.dim, 1.0, 5), &naive, &paired);
    auto report = divergence::divergence_report(store, synthetic::stub_augmented(corpus.pairs), "masked");
    o.require(report.paired.mean == 0.0, "paired JSD " + fmt("%.3g", report.paired.mean));
    o.require(report.raw.mean > 0.0, "raw JSD is zero");
    if (o.pass)
        o.detail = "10,000 pairs symmetric and bounded; raw " + fmt("%.4f", report.raw.mean) + ", naive " +
                   fmt("%.4f", report.naive.mean) + ", paired " + fmt("%.1f", report.paired.mean) + " nats";
    return o;
}

Outcome geometry_checks() {
    Outcome o;
    synthetic::ExactEffectConfig cfg;
    cfg.n_pairs = 1000;
    auto corpus = synthetic::exact_effect_corpus(cfg);
    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> raw;
    for (const auto& p : corpus.pairs) raw.emplace_back(p.original, p.counterfactual);
    auto res = geometry::pca(geometry::paired_center(raw), 10);
    const double ratio = res.explained_variance_ratio[0];
    const double align = geometry::alignment(res, estimators::ate_paired(corpus.pairs));
    o.require(std::abs(ratio - 1.0) < 1e-6, "rank-1 ratio " + fmt("%.9f", ratio));
    o.require(std::abs(align - 1.0) < 1e-6, "alignment " + fmt("%.9f", align));

    const size_t dim = 64;
    auto iso = geometry::pca(geometry::random_baseline(10 * dim, dim, 11), 1);
    o.require(iso.explained_variance_ratio[0] < 2.0 / dim,
              "isotropic ratio " + fmt("%.4f", iso.explained_variance_ratio[0]));

    Rng rng(31);
    double worst = 0;
    for (Eigen::Index d = 2; d <= 8; ++d) {
        auto x = oracle::random_matrix(rng, 50, d);
        auto r = oracle::random_rotation(rng, d);
        auto truth = oracle::jacobi_eigenvalues(oracle::covariance(x));
        auto a = geometry::pca(x, static_cast<size_t>(d));
        auto b = geometry::pca(x * r, static_cast<size_t>(d));
        for (Eigen::Index i = 0; i < d; ++i) {
            worst = std::max(worst, std::abs(a.eigenvalues[i] - truth[i]));
            worst = std::max(worst, std::abs(b.eigenvalues[i] - truth[i]));
        }
        // Components rotate with the data.
        for (Eigen::Index i = 0; i < d; ++i) {
            Eigen::VectorXd rotated = r.transpose() * a.components.row(i).transpose();
            worst = std::max(worst, std::abs(std::abs(rotated.dot(b.components.row(i).transpose())) - 1.0));
        }
    }
    o.require(worst < 1e-8, "oracle disagreement " + fmt("%.2g", worst));
    if (o.pass)
        o.detail = "ratio1 " + fmt("%.9f", ratio) + ", alignment " + fmt("%.9f", align) + ", isotropic ratio1 " +
                   fmt("%.4f", iso.explained_variance_ratio[0]) + " < " + fmt("%.4f", 2.0 / dim) +
                   ", oracle max diff " + fmt("%.1e", worst);
    return o;
}

Outcome probing_confound() {
    Outcome o;
    synthetic::ConfoundConfig cfg;  // strength 0.3
    auto data = probing::dataset_from_pairs(synthetic::confound_corpus(cfg), 1);
    std::string detail;
    for (auto loss : {probing::LossKind::Logistic, probing::LossKind::MaxMargin}) {
        auto cells = probing::probe_cells(data, loss, {});
        const double oo = cells[0].accuracy, oc = cells[1].accuracy, ao = cells[2].accuracy, ac = cells[3].accuracy;
        const double gap = oo - oc;
        const double closed = gap > 0 ? 1.0 - std::abs(ao - ac) / gap : 0.0;
        const std::string name = probing::to_string(loss);
        o.require(gap >= 0.25, name + " gap " + fmt("%.3f", gap));
        o.require(closed >= 0.8, name + " closes " + fmt("%.2f", closed) + " of the gap");
        detail += name + ": orig " + fmt("%.3f", oo) + "/" + fmt("%.3f", oc) + ", aug " + fmt("%.3f", ao) + "/" +
                  fmt("%.3f", ac) + " (closes " + fmt("%.0f", 100 * closed) + "%); ";
    }
    Rng rng(5);
    auto y = data.y_train_original;
    rng.shuffle(y.begin(), y.end());
    auto permuted = probing::train_probe(data.train_original, y, probing::LossKind::Logistic);
    const double acc = probing::evaluate_probe(permuted, data.test_original, data.y_test_original);
    o.require(std::abs(acc - 0.5) <= 0.05, "permuted-label accuracy " + fmt("%.3f", acc));
    if (o.pass) o.detail = detail + "permuted " + fmt("%.3f", acc);
    return o;
}

Outcome wald() {
    Outcome o;
    std::string sheet = "item\tintervention_id\tstratum\toriginal\tcounterfactual\tjudgment\n";
    for (int i = 0; i < 100; ++i)
        sheet += std::to_string(i + 1) + "\tid" + std::to_string(i) + "\ts\ta\tb\t" + (i < 73 ? "1" : "0") + "\n";
    auto score = evaluation::score_review_sheet(sheet);
    o.require(std::abs(score.interval.lower - 0.64) <= 0.005, "lower " + fmt("%.4f", score.interval.lower));
    o.require(std::abs(score.interval.upper - 0.82) <= 0.005, "upper " + fmt("%.4f", score.interval.upper));
    if (o.pass) o.detail = "73/100 -> [" + fmt("%.4f", score.interval.lower) + ", " + fmt("%.4f", score.interval.upper) + "]";
    return o;
}

Outcome adjective_bias() {
    Outcome o;
    const std::vector<std::string> vocab{"hermoso", "hermosa", "Ġracional", "rico", "rica", "▁la"};
    auto random_dist = [&](Rng& rng) {
        divergence::MaskedDistribution d;
        d.tokens = vocab;
        double total = 0;
        for (size_t i = 0; i < vocab.size(); ++i) {
            d.vocab_ids.push_back(static_cast<int64_t>(i));
            d.probs.push_back(0.01 + rng.uniform());
            total += d.probs.back();
        }
        for (auto& p : d.probs) p /= total;
        return d;
    };
    const std::vector<adjbias::AdjectiveEntry> adjs{
        {"beautiful", "hermoso", "hermosa"}, {"rational", "racional", "racional"}, {"rich", "rico", "rica"}};
    Rng rng(77);
    size_t median_mismatch = 0, antisym = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<adjbias::DistributionPair> inst, swapped;
        const size_t n = 1 + rng.below(25);
        for (size_t i = 0; i < n; ++i) {
            inst.push_back({random_dist(rng), random_dist(rng)});
            swapped.push_back({inst.back().fem, inst.back().masc});
        }
        auto a = adjbias::bias_scores(inst, adjs);
        auto b = adjbias::bias_scores(swapped, adjs);
        for (size_t k = 0; k < adjs.size(); ++k) {
            std::vector<double> ratios;
            for (const auto& x : inst)
                ratios.push_back(adjbias::adjective_logprob(x.masc, adjs[k]) - adjbias::adjective_logprob(x.fem, adjs[k]));
            median_mismatch += a.scores[k].score != oracle::sorted_median(ratios);
            antisym += a.scores[k].score != -b.scores[k].score;
        }
    }
    o.require(median_mismatch == 0, std::to_string(median_mismatch) + " medians differ from the sort oracle");
    o.require(antisym == 0, std::to_string(antisym) + " scores not antisymmetric");
    auto d = random_dist(rng);
    const double lp = adjbias::adjective_logprob(d, adjs[1]);
    o.require(lp == std::log(d.probs[2]), "'racional' not counted once");
    if (o.pass) o.detail = "100 fixtures match the sort oracle, swaps negate exactly, 'racional' counted once";
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"involution", involution},
        {"context_preservation", context_preservation},
        {"example_fidelity", example_fidelity},
        {"table1", table1},
        {"estimator_identities", estimator_identities},
        {"jsd_properties", jsd_properties},
        {"geometry", geometry_checks},
        {"probing_confound", probing_confound},
        {"wald_interval", wald},
        {"adjective_bias", adjective_bias},
    };
    std::set<std::string> only, skip;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--skip" && i + 1 < argc)
            skip.insert(argv[++i]);
        else
            only.insert(arg);
    }
    for (const auto& name : only) {
        bool known = false;
        for (const auto& c : criteria) known = known || c.first == name;
        if (!known) {
            std::cerr << "unknown criterion '" << name << "'\n";
            return 2;
        }
    }
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        if (skip.count(name) || (!only.empty() && !only.count(name))) continue;
        Outcome out;
        try {
            out = check();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        failures += !out.pass;
        std::cout << (out.pass ? "PASS " : "FAIL ") << name << ": " << out.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
