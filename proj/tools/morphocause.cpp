#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "morphocause/adjbias.hpp"
#include "morphocause/conllu.hpp"
#include "morphocause/digest.hpp"
#include "morphocause/divergence.hpp"
#include "morphocause/estimators.hpp"
#include "morphocause/evaluation.hpp"
#include "morphocause/geometry.hpp"
#include "morphocause/intervention.hpp"
#include "morphocause/lexicon.hpp"
#include "morphocause/probing.hpp"
#include "morphocause/repstore.hpp"
#include "morphocause/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace morphocause;

namespace {

enum ExitCode { kOk = 0, kInvalid = 2, kMissing = 3, kInternal = 4 };

class CliError : public std::runtime_error {
public:
    CliError(int code, const std::string& what) : std::runtime_error(what), code(code) {}
    int code;
};

std::string read_text(const fs::path& path, int missing_code) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CliError(missing_code, "cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CliError(kInvalid, "cannot write " + path.string());
    out << text;
}

std::string store_digest(const fs::path& dir) {
    std::string joined;
    for (const char* name : {"manifest.json", "reps.f32", "index.tsv"})
        joined += std::string(name) + ":" + sha256_file(dir / name) + "\n";
    return sha256_hex(joined);
}

// Provenance attached to every artifact.
struct Stamp {
    std::string command;
    std::optional<uint64_t> seed;
    json inputs = json::array();

    void file(const fs::path& path) { inputs.push_back({{"path", path.string()}, {"sha256", sha256_file(path)}}); }
    void store(const fs::path& dir) {
        inputs.push_back({{"path", dir.string()}, {"kind", "store"}, {"sha256", store_digest(dir)}});
    }

    json to_json() const {
        json j{{"tool", "morphocause"}, {"version", kVersion}, {"command", command}, {"inputs", inputs}};
        j["seed"] = seed ? json(*seed) : json(nullptr);
        return j;
    }

    std::string tsv_comment() const {
        std::string s = "# morphocause " + std::string(kVersion) + " " + command;
        s += " seed=" + (seed ? std::to_string(*seed) : std::string("none"));
        for (const auto& in : inputs)
            s += " " + in.at("path").get<std::string>() + "@" + in.at("sha256").get<std::string>();
        return s + "\n";
    }
};

void write_json(const fs::path& path, json body, const Stamp& stamp) {
    body["meta"] = stamp.to_json();
    write_text(path, body.dump(2) + "\n");
}

void write_tsv(const fs::path& path, const std::string& body, const Stamp& stamp) {
    write_text(path, stamp.tsv_comment() + body);
}

Feature feature_arg(const std::string& text) {
    auto f = parse_feature(text);
    if (!f) throw CliError(kInvalid, "unknown feature '" + text + "'");
    return *f;
}

fs::path require_store(const fs::path& dir) {
    if (!fs::exists(dir / "manifest.json")) throw CliError(kMissing, "missing store " + dir.string());
    return dir;
}

std::vector<intervention::CounterfactualPair> load_augmented(const std::vector<std::string>& paths, Stamp& stamp) {
    std::string text;
    for (const auto& p : paths) {
        if (!fs::exists(p)) throw CliError(kMissing, "missing augmented corpus " + p);
        text += read_text(p, kMissing);
        if (!text.empty() && text.back() != '\n') text += '\n';
        stamp.file(p);
    }
    return intervention::read_augmented(text);
}

std::vector<intervention::CounterfactualPair> with_feature(const std::vector<intervention::CounterfactualPair>& pairs,
                                                           Feature feature) {
    std::vector<intervention::CounterfactualPair> out;
    for (const auto& p : pairs)
        if (p.focus.feature == feature) out.push_back(p);
    return out;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

// UD file names carry the split: es_ancora-ud-train.conllu.
std::string split_from_name(const std::string& path) {
    static const std::regex re("-ud-(train|dev|test)");
    std::smatch m;
    const std::string name = fs::path(path).filename().string();
    return std::regex_search(name, m, re) ? m[1].str() : std::string();
}

json tally_json(const std::map<FeatureValue, size_t>& counts, Feature feature) {
    json j;
    for (FeatureValue v : {positive_pole(feature), negative_pole(feature)}) {
        auto it = counts.find(v);
        j[std::string(to_string(v))] = it == counts.end() ? 0 : it->second;
    }
    return j;
}

// augment ------------------------------------------------------------------

struct AugmentArgs {
    std::string feature;
    std::vector<std::string> inputs;
    std::string out;
    std::string dataset;
    std::string split;
    std::string lexicon;
};

int run_augment(const AugmentArgs& a) {
    const Feature feature = feature_arg(a.feature);
    Stamp stamp{"augment", std::nullopt};
    auto lex = a.lexicon.empty() ? lexicon::Lexicon::load_default() : lexicon::Lexicon::load(a.lexicon);

    std::string conllu, failures = "sent_id\ttoken_index\tfeature\treason\n";
    std::map<FeatureValue, size_t> focus, succeeded;
    size_t sentences = 0, pairs = 0, aborted = 0, notes = 0;
    json files = json::array();
    for (const auto& path : a.inputs) {
        if (!fs::exists(path)) throw CliError(kInvalid, "missing input " + path);
        const std::string text = read_text(path, kInvalid);
        stamp.file(path);
        std::vector<conllu::Sentence> corpus;
        try {
            corpus = conllu::parse_conllu(text);
        } catch (const std::exception& e) {
            throw CliError(kInvalid, path + ": " + e.what());
        }
        intervention::AugmentOptions opts;
        opts.dataset = a.dataset;
        opts.split = a.split.empty() ? split_from_name(path) : a.split;
        auto result = intervention::augment_corpus(corpus, feature, lex, opts);
        conllu += intervention::serialize_augmented(result);
        std::string log = intervention::failure_log_tsv(result.failures);
        failures += log.substr(log.find('\n') + 1);

        size_t file_aborted = 0;
        for (const auto& f : result.failures) (f.aborted ? file_aborted : notes)++;
        aborted += file_aborted;
        for (const auto& [v, n] : result.tally.focus) focus[v] += n;
        for (const auto& [v, n] : result.tally.succeeded) succeeded[v] += n;
        sentences += result.sentences;
        pairs += result.pairs.size();
        files.push_back({{"path", path},
                         {"split", opts.split},
                         {"sentences", result.sentences},
                         {"focus", tally_json(result.tally.focus, feature)},
                         {"pairs", tally_json(result.tally.succeeded, feature)},
                         {"failures", file_aborted}});
    }

    const fs::path out(a.out);
    write_text(out / "augmented.conllu", conllu);
    write_text(out / "failures.tsv", failures);
    json summary{{"feature", std::string(to_string(feature))},
                 {"dataset", a.dataset},
                 {"sentences", sentences},
                 {"focus", tally_json(focus, feature)},
                 {"pairs", tally_json(succeeded, feature)},
                 {"pair_count", pairs},
                 {"failures", aborted},
                 {"notes", notes},
                 {"files", files}};
    write_json(out / "summary.json", summary, stamp);
    std::cout << summary.dump() << "\n";
    return kOk;
}

// evaluation sheets -----------------------------------------------------------

int run_sample_eval(const std::vector<std::string>& inputs, size_t n, std::optional<uint64_t> seed,
                    const std::string& out) {
    if (!seed) throw CliError(kInvalid, "sample-eval needs --seed");
    Stamp stamp{"sample-eval", seed};
    auto pairs = load_augmented(inputs, stamp);
    std::vector<intervention::CounterfactualPair> sample;
    try {
        sample = evaluation::sample_for_evaluation(pairs, n, *seed);
    } catch (const evaluation::SamplingError& e) {
        throw CliError(kInvalid, e.what());
    }
    std::map<std::string, size_t> per_stratum;
    for (const auto& p : sample) per_stratum[evaluation::stratum_of(p).label()]++;
    write_text(fs::path(out) / "sheet.tsv", evaluation::review_sheet_tsv(sample));
    write_json(fs::path(out) / "sample.json", {{"n", sample.size()}, {"strata", per_stratum}}, stamp);
    return kOk;
}

int run_score_eval(const std::string& sheet, const std::string& out) {
    Stamp stamp{"score-eval", std::nullopt};
    if (!fs::exists(sheet)) throw CliError(kInvalid, "missing review sheet " + sheet);
    const std::string text = read_text(sheet, kInvalid);
    stamp.file(sheet);
    evaluation::EvaluationScore score;
    try {
        score = evaluation::score_review_sheet(text);
    } catch (const lexicon::LexiconError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kMissing;
    } catch (const std::invalid_argument& e) {
        throw CliError(kInvalid, e.what());
    }
    json strata = json::array();
    std::string tsv = "stratum\tn\tcorrect\taccuracy\n";
    for (const auto& s : score.strata) {
        strata.push_back({{"stratum", s.stratum}, {"n", s.n}, {"correct", s.correct}, {"accuracy", s.accuracy}});
        tsv += s.stratum + "\t" + std::to_string(s.n) + "\t" + std::to_string(s.correct) + "\t" +
               format_double(s.accuracy) + "\n";
    }
    tsv += "all\t" + std::to_string(score.n) + "\t" + std::to_string(score.correct) + "\t" +
           format_double(score.accuracy) + "\n";
    json body{{"n", score.n},
              {"correct", score.correct},
              {"accuracy", score.accuracy},
              {"interval", {{"lower", score.interval.lower},
                            {"upper", score.interval.upper},
                            {"method", score.interval.degenerate ? "rule-of-three" : "wald"}}},
              {"strata", strata}};
    write_json(fs::path(out) / "score.json", body, stamp);
    write_tsv(fs::path(out) / "score.tsv", tsv, stamp);
    std::cout << body.dump() << "\n";
    return kOk;
}

// analyses -------------------------------------------------------------------

struct AnalyzeArgs {
    std::string feature = "gender";
    std::vector<std::string> stores;
    std::vector<std::string> augmented;
    std::vector<std::string> estimates;
    std::string out;
    std::optional<uint64_t> seed;
    size_t k = 10;
    bool paired = false;
    bool naive = false;
    bool balanced = false;
    bool grid = false;
    bool random_baseline = false;
    std::string templated_store;
    std::string baseline_store;
    std::string corpus;
    std::string position;
    std::string adjectives;
    std::vector<std::string> losses;
    double l2 = probing::ProbeConfig{}.l2;
    size_t max_epochs = probing::ProbeConfig{}.max_epochs;
};

const std::string& single_store(const AnalyzeArgs& a) {
    if (a.stores.size() != 1) throw CliError(kInvalid, "expected exactly one --store");
    return a.stores.front();
}

std::vector<repstore::RepPair> feature_pairs(const repstore::Store& store,
                                             const std::vector<intervention::CounterfactualPair>& augmented,
                                             Feature feature, size_t* skipped) {
    auto joined = repstore::join_pairs(store, with_feature(augmented, feature));
    if (skipped) *skipped = joined.skipped;
    return joined.pairs;
}

void write_vector_tsv(const fs::path& path, const Eigen::VectorXd& v, const Stamp& stamp) {
    std::string tsv = "component\tvalue\n";
    for (Eigen::Index i = 0; i < v.size(); ++i) tsv += std::to_string(i) + "\t" + format_double(v(i)) + "\n";
    write_tsv(path, tsv, stamp);
}

int run_ate(const AnalyzeArgs& a) {
    const Feature feature = feature_arg(a.feature);
    if (a.paired && a.naive) throw CliError(kInvalid, "--paired and --naive are exclusive");
    if (a.balanced && !a.seed) throw CliError(kInvalid, "--balanced needs --seed");
    Stamp stamp{"analyze ate", a.seed};
    estimators::EffectEstimate est;
    json extra;
    if (!a.templated_store.empty()) {
        auto store = repstore::read_store(require_store(a.templated_store));
        stamp.store(a.templated_store);
        auto joined = repstore::join_value_pairs(store, feature);
        if (joined.pairs.empty()) throw CliError(kInvalid, "templated store holds no complete minimal pairs");
        est = estimators::ate_paired(joined.pairs, feature, a.corpus);
        est.kind = estimators::EstimateKind::TemplatedPaired;
        extra["skipped"] = joined.skipped;
    } else {
        const auto& dir = single_store(a);
        auto store = repstore::read_store(require_store(dir));
        stamp.store(dir);
        auto augmented = load_augmented(a.augmented, stamp);
        size_t skipped = 0;
        auto pairs = feature_pairs(store, augmented, feature, &skipped);
        if (a.balanced) pairs = estimators::balanced_subsample(pairs, *a.seed);
        if (pairs.empty()) throw CliError(kInvalid, "no complete pairs for " + std::string(to_string(feature)));
        est = a.naive ? estimators::ate_naive(estimators::naive_groups(pairs), feature, a.corpus)
                      : estimators::ate_paired(pairs, a.corpus);
        extra["skipped"] = skipped;
    }
    const fs::path out(a.out);
    estimators::save_estimate(out / "estimate", est);
    json body{{"kind", estimators::to_string(est.kind)},
              {"feature", std::string(to_string(feature))},
              {"convention", est.convention()},
              {"corpus", est.corpus},
              {"label", est.label()},
              {"sample_size", est.sample_size},
              {"balanced", a.balanced},
              {"norm", est.vector.norm()}};
    body.update(extra);
    write_json(out / "ate.json", body, stamp);
    write_vector_tsv(out / "ate.tsv", est.vector, stamp);
    std::cout << body.dump() << "\n";
    return kOk;
}

int run_ate_matrix(const AnalyzeArgs& a) {
    if (a.estimates.empty()) throw CliError(kInvalid, "ate-matrix needs --estimate");
    Stamp stamp{"analyze ate-matrix", std::nullopt};
    std::vector<estimators::EffectEstimate> estimates;
    for (const auto& dir : a.estimates) {
        estimates.push_back(estimators::load_estimate(require_store(dir)));
        stamp.store(dir);
    }
    auto m = estimators::estimate_matrix(estimates);
    write_json(fs::path(a.out) / "matrix.json", m.json(), stamp);
    write_tsv(fs::path(a.out) / "matrix.tsv", m.tsv(), stamp);
    return kOk;
}

json scree_with_baseline(const geometry::PcaResult& main, const std::optional<geometry::PcaResult>& baseline,
                         const std::string& baseline_kind) {
    json j = main.scree_json();
    if (baseline) {
        j["baseline"] = baseline->scree_json();
        j["baseline"]["kind"] = baseline_kind;
    }
    return j;
}

int run_pca(const AnalyzeArgs& a) {
    const Feature feature = feature_arg(a.feature);
    if (a.random_baseline && !a.seed) throw CliError(kInvalid, "--random-baseline needs --seed");
    Stamp stamp{"analyze pca", a.seed};
    const auto& dir = single_store(a);
    auto store = repstore::read_store(require_store(dir));
    stamp.store(dir);
    auto augmented = load_augmented(a.augmented, stamp);
    auto pairs = feature_pairs(store, augmented, feature, nullptr);
    if (pairs.empty()) throw CliError(kInvalid, "no complete pairs for " + std::string(to_string(feature)));

    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> raw;
    for (const auto& p : pairs) raw.emplace_back(p.original, p.counterfactual);
    const Eigen::MatrixXd centered = geometry::paired_center(raw);
    const size_t dim = static_cast<size_t>(centered.cols());
    if (a.k == 0 || a.k > dim) throw CliError(kInvalid, "--k must be in [1, " + std::to_string(dim) + "]");
    auto result = geometry::pca(centered, a.k);

    std::optional<geometry::PcaResult> baseline;
    std::string baseline_kind;
    if (!a.baseline_store.empty()) {
        auto rw = geometry::load_random_weights_baseline(a.baseline_store);
        if (!rw) throw CliError(kMissing, "missing store " + a.baseline_store);
        stamp.store(a.baseline_store);
        auto rw_pairs = feature_pairs(*rw, augmented, feature, nullptr);
        std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> rw_raw;
        for (const auto& p : rw_pairs) rw_raw.emplace_back(p.original, p.counterfactual);
        if (!rw_raw.empty()) {
            baseline = geometry::pca(geometry::paired_center(rw_raw), std::min(a.k, static_cast<size_t>(rw->manifest.dim)));
            baseline_kind = "random-weights";
        }
    } else if (a.random_baseline) {
        baseline = geometry::pca(geometry::random_baseline(static_cast<size_t>(centered.rows()), dim, *a.seed), a.k);
        baseline_kind = "random-vectors";
    }

    json scree = scree_with_baseline(result, baseline, baseline_kind);
    if (!a.estimates.empty()) {
        auto psi = estimators::load_estimate(require_store(a.estimates.front()));
        stamp.store(a.estimates.front());
        if (result.k > 0) scree["alignment"] = geometry::alignment(result, psi);
    }
    const fs::path out(a.out);
    write_json(out / "scree.json", scree, stamp);
    std::string tsv = result.scree_tsv();
    write_tsv(out / "scree.tsv", tsv, stamp);

    // Projections of both variants on the first component, labelled by value.
    std::string proj = "intervention_id\tvariant\tvalue\tpc1\n";
    if (result.k > 0) {
        const Eigen::VectorXd pc1 = result.components.row(0).transpose();
        for (const auto& p : pairs) {
            proj += p.intervention_id + "\toriginal\t" + std::string(to_string(p.focus.source_value)) + "\t" +
                    format_double(p.original.dot(pc1)) + "\n";
            proj += p.intervention_id + "\tcounterfactual\t" + std::string(to_string(p.focus.target_value)) + "\t" +
                    format_double(p.counterfactual.dot(pc1)) + "\n";
        }
    }
    write_tsv(out / "projections.tsv", proj, stamp);
    return kOk;
}

int run_jsd(const AnalyzeArgs& a) {
    Stamp stamp{"analyze jsd", std::nullopt};
    const auto& dir = single_store(a);
    auto store = repstore::read_store(require_store(dir));
    stamp.store(dir);
    auto augmented = load_augmented(a.augmented, stamp);
    if (!a.feature.empty()) augmented = with_feature(augmented, feature_arg(a.feature));
    const std::string position = a.position.empty() ? store.manifest.position_kind : a.position;
    divergence::DivergenceReport report;
    try {
        report = divergence::divergence_report(store, augmented, position);
    } catch (const divergence::DivergenceError& e) {
        throw CliError(kInvalid, e.what());
    }
    std::string rows = "intervention_id\traw\tnaive\tpaired\n";
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("NA"); };
    for (const auto& r : report.rows)
        rows += r.intervention_id + "\t" + format_double(r.raw) + "\t" + opt(r.naive) + "\t" + opt(r.paired) + "\n";
    const fs::path out(a.out);
    write_json(out / "jsd.json", report.json(), stamp);
    write_tsv(out / "jsd.tsv", report.tsv(), stamp);
    write_tsv(out / "jsd_rows.tsv", rows, stamp);
    return kOk;
}

int run_adjbias(const AnalyzeArgs& a) {
    Stamp stamp{"analyze adjbias", std::nullopt};
    const auto& dir = single_store(a);
    auto store = repstore::read_store(require_store(dir));
    stamp.store(dir);
    auto augmented = load_augmented(a.augmented, stamp);
    std::vector<adjbias::AdjectiveEntry> adjectives = adjbias::default_adjectives();
    if (!a.adjectives.empty()) {
        std::ifstream in(a.adjectives);
        if (!in) throw CliError(kInvalid, "cannot read " + a.adjectives);
        adjectives = adjbias::read_adjectives(in);
        stamp.file(a.adjectives);
    }
    auto result = adjbias::bias_scores(store, augmented, adjectives);
    write_json(fs::path(a.out) / "adjbias.json", result.json(), stamp);
    write_tsv(fs::path(a.out) / "adjbias.tsv", result.tsv(), stamp);
    return kOk;
}

int run_probe(const AnalyzeArgs& a) {
    if (!a.seed) throw CliError(kInvalid, "probe needs --seed");
    Stamp stamp{"analyze probe", a.seed};
    std::vector<probing::LossKind> losses;
    for (const auto& l : a.losses) {
        auto loss = probing::parse_loss_kind(l);
        if (!loss) throw CliError(kInvalid, "unknown probe loss '" + l + "'");
        losses.push_back(*loss);
    }
    if (losses.empty()) losses = {probing::LossKind::Logistic, probing::LossKind::MaxMargin};

    // --store position=DIR, or DIR with the position taken from its manifest.
    std::vector<std::pair<std::string, repstore::Store>> loaded;
    for (const auto& spec : a.stores) {
        std::string position, dir = spec;
        if (auto eq = spec.find('='); eq != std::string::npos) {
            position = spec.substr(0, eq);
            dir = spec.substr(eq + 1);
        }
        auto store = repstore::read_store(require_store(dir));
        stamp.store(dir);
        if (position.empty()) position = store.manifest.position_kind;
        loaded.emplace_back(position, std::move(store));
    }
    std::vector<probing::StoreInput> inputs;
    for (const auto& [position, store] : loaded) inputs.push_back({position, &store});
    if (a.grid)
        for (const char* required : {"focus", "cls_or_last"}) {
            bool present = false;
            for (const auto& in : inputs) present = present || in.position_kind == required;
            if (!present) inputs.push_back({required, nullptr});
        }
    if (inputs.empty()) throw CliError(kInvalid, "probe needs --store");

    auto augmented = load_augmented(a.augmented, stamp);
    if (!a.feature.empty()) augmented = with_feature(augmented, feature_arg(a.feature));
    probing::ProbeConfig config;
    config.seed = *a.seed;
    config.l2 = a.l2;
    config.max_epochs = a.max_epochs;
    auto report = probing::probing_grid(inputs, augmented, losses, config);

    const fs::path out(a.out);
    json body = report.json();
    body["config"] = {{"l2", config.l2},
                      {"max_epochs", config.max_epochs},
                      {"grad_tol", config.grad_tol},
                      {"standardize", config.standardize}};
    write_json(out / "probe.json", body, stamp);
    write_tsv(out / "probe.tsv", report.tsv(), stamp);
    probing::save_probes(out / "probes", report.probes);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Counterfactual morphological interventions and causal analyses of contextual representations",
                 "morphocause"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    std::function<int()> run;

    AugmentArgs aug;
    auto* augment = app.add_subcommand("augment", "Reinflect focus nouns and their dependents in CoNLL-U files");
    augment->add_option("--feature", aug.feature, "gender or number")->required();
    augment->add_option("--in", aug.inputs, "CoNLL-U input (repeatable)")->required();
    augment->add_option("--out", aug.out, "Output directory")->required();
    augment->add_option("--dataset", aug.dataset, "Dataset name recorded on every pair");
    augment->add_option("--split", aug.split, "Split name (default: from UD file names)");
    augment->add_option("--lexicon", aug.lexicon, "Lexicon directory");
    augment->callback([&] { run = [&] { return run_augment(aug); }; });

    std::vector<std::string> sample_in;
    size_t sample_n = 100;
    std::optional<uint64_t> sample_seed;
    std::string sample_out;
    auto* sample = app.add_subcommand("sample-eval", "Draw a stratified review sheet from augmented corpora");
    sample->add_option("--in", sample_in, "Augmented CoNLL-U (repeatable)")->required();
    sample->add_option("--n", sample_n, "Sample size");
    sample->add_option("--seed", sample_seed, "Sampling seed");
    sample->add_option("--out", sample_out, "Output directory")->required();
    sample->callback([&] { run = [&] { return run_sample_eval(sample_in, sample_n, sample_seed, sample_out); }; });

    std::string score_in, score_out;
    auto* score = app.add_subcommand("score-eval", "Score a filled review sheet");
    score->add_option("--in", score_in, "Filled review sheet")->required();
    score->add_option("--out", score_out, "Output directory")->required();
    score->callback([&] { run = [&] { return run_score_eval(score_in, score_out); }; });

    AnalyzeArgs an;
    auto* analyze = app.add_subcommand("analyze", "Effect estimates, geometry, divergences, bias and probes");
    analyze->require_subcommand(1);
    auto common = [&](CLI::App* cmd, bool needs_augmented) {
        cmd->add_option("--out", an.out, "Output directory")->required();
        cmd->add_option("--store", an.stores, "Representation or distribution store");
        auto* opt = cmd->add_option("--augmented", an.augmented, "Augmented CoNLL-U (repeatable)");
        if (needs_augmented) opt->required();
        cmd->add_option("--seed", an.seed, "Seed for stochastic steps");
    };

    auto* ate = analyze->add_subcommand("ate", "Paired or naive average treatment effect");
    common(ate, false);
    ate->add_option("--feature", an.feature, "gender or number");
    ate->add_flag("--paired", an.paired, "Paired estimator (default)");
    ate->add_flag("--naive", an.naive, "Naive difference of group means");
    ate->add_flag("--balanced", an.balanced, "Down-sample the majority value first");
    ate->add_option("--templated-store", an.templated_store, "Templated minimal-pair store");
    ate->add_option("--corpus", an.corpus, "Corpus label for similarity matrices");
    ate->callback([&] {
        run = [&] {
            if (an.templated_store.empty() && an.augmented.empty())
                throw CliError(kInvalid, "ate needs --augmented or --templated-store");
            return run_ate(an);
        };
    });

    auto* matrix = analyze->add_subcommand("ate-matrix", "Cosine similarities between effect estimates");
    matrix->add_option("--out", an.out, "Output directory")->required();
    matrix->add_option("--estimate", an.estimates, "Estimate directory (repeatable)")->required();
    matrix->callback([&] { run = [&] { return run_ate_matrix(an); }; });

    auto* pca = analyze->add_subcommand("pca", "Principal components of paired-centred representations");
    common(pca, true);
    pca->add_option("--feature", an.feature, "gender or number");
    pca->add_option("--k", an.k, "Number of components");
    pca->add_option("--estimate", an.estimates, "Effect estimate for the alignment score");
    pca->add_option("--baseline-store", an.baseline_store, "Randomized-weights store");
    pca->add_flag("--random-baseline", an.random_baseline, "Scree of i.i.d. normal vectors");
    pca->callback([&] { run = [&] { return run_pca(an); }; });

    auto* jsd = analyze->add_subcommand("jsd", "Jensen-Shannon divergences of masked distributions");
    common(jsd, true);
    jsd->add_option("--feature", an.feature, "gender or number");
    jsd->add_option("--position", an.position, "Masked position label");

    auto* adj = analyze->add_subcommand("adjbias", "Gender bias of adjectives");
    common(adj, true);
    adj->add_option("--adjectives", an.adjectives, "Adjective list (TSV)");
    adj->callback([&] { run = [&] { return run_adjbias(an); }; });

    auto* probe = analyze->add_subcommand("probe", "Linear probes on original and augmented data");
    common(probe, true);
    probe->add_option("--feature", an.feature, "gender or number (default: both)");
    probe->add_option("--probe-loss", an.losses, "logistic or max-margin (repeatable)");
    probe->add_flag("--grid", an.grid, "Emit every focus and cls_or_last cell");
    probe->add_option("--l2", an.l2, "L2 strength");
    probe->add_option("--max-epochs", an.max_epochs, "Iteration cap");
    probe->callback([&] {
        if (probe->count("--feature") == 0) an.feature.clear();
        run = [&] { return run_probe(an); };
    });
    jsd->callback([&] {
        if (jsd->count("--feature") == 0) an.feature.clear();
        run = [&] { return run_jsd(an); };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        return run();
    } catch (const CliError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code;
    } catch (const repstore::MissingStoreError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kMissing;
    } catch (const repstore::StoreError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const conllu::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const conllu::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const lexicon::LexiconError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kMissing;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const estimators::EstimatorError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const geometry::GeometryError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const probing::ProbeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const divergence::DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const evaluation::SamplingError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
}
