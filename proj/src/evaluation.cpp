#include "morphocause/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "morphocause/random.hpp"
#include "morphocause/utf8.hpp"

namespace morphocause::evaluation {

using intervention::CounterfactualPair;

std::string Stratum::label() const {
    return (dataset.empty() ? std::string("-") : dataset) + "/" + std::string(to_string(feature)) + "/" +
           std::string(to_string(category));
}

Stratum stratum_of(const CounterfactualPair& pair) {
    return {pair.dataset, pair.focus.feature, pair.focus.source_value};
}

std::vector<CounterfactualPair> sample_for_evaluation(const std::vector<CounterfactualPair>& pairs, size_t n,
                                                     uint64_t seed) {
    if (n == 0) return {};
    std::set<std::string> datasets;
    std::set<Feature> features;
    for (const auto& p : pairs) {
        datasets.insert(p.dataset);
        features.insert(p.focus.feature);
    }
    if (pairs.empty()) throw SamplingError("no counterfactual pairs to sample from");

    std::vector<Stratum> strata;
    for (const auto& d : datasets)
        for (Feature f : features)
            for (FeatureValue v : {positive_pole(f), negative_pole(f)}) strata.push_back({d, f, v});
    std::sort(strata.begin(), strata.end(), [](const Stratum& a, const Stratum& b) { return a.label() < b.label(); });

    std::map<std::string, std::vector<const CounterfactualPair*>> pools;
    for (const auto& p : pairs) pools[stratum_of(p).label()].push_back(&p);
    for (auto& [label, pool] : pools)
        std::sort(pool.begin(), pool.end(),
                  [](auto* a, auto* b) { return a->intervention_id < b->intervention_id; });

    const size_t base = n / strata.size();
    const size_t extra = n % strata.size();
    for (size_t i = 0; i < strata.size(); ++i) {
        const size_t want = base + (i < extra ? 1 : 0);
        const size_t have = pools[strata[i].label()].size();
        if (have < want)
            throw SamplingError("stratum " + strata[i].label() + " has " + std::to_string(have) + " pairs, needs " +
                                std::to_string(want));
    }

    Rng rng(seed);
    std::vector<CounterfactualPair> out;
    for (size_t i = 0; i < strata.size(); ++i) {
        const size_t want = base + (i < extra ? 1 : 0);
        auto pool = pools[strata[i].label()];
        // Partial Fisher-Yates: the first `want` slots become the sample.
        for (size_t j = 0; j < want; ++j) {
            size_t k = j + static_cast<size_t>(rng.below(pool.size() - j));
            std::swap(pool[j], pool[k]);
        }
        std::vector<const CounterfactualPair*> chosen(pool.begin(), pool.begin() + static_cast<long>(want));
        std::sort(chosen.begin(), chosen.end(),
                  [](auto* a, auto* b) { return a->intervention_id < b->intervention_id; });
        for (auto* p : chosen) out.push_back(*p);
    }
    return out;
}

namespace {

std::string clean_cell(std::string s) {
    std::replace(s.begin(), s.end(), '\t', ' ');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> cols;
    size_t start = 0;
    while (true) {
        size_t tab = line.find('\t', start);
        cols.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    return cols;
}

std::optional<bool> parse_judgment(std::string s) {
    s = utf8::to_lower(s);
    s.erase(0, s.find_first_not_of(" \t\r"));
    s.erase(s.find_last_not_of(" \t\r") + 1);
    if (s == "1" || s == "yes" || s == "y" || s == "true" || s == "correct" || s == "ok") return true;
    if (s == "0" || s == "no" || s == "n" || s == "false" || s == "incorrect") return false;
    return std::nullopt;
}

}  // namespace

std::string review_sheet_tsv(const std::vector<CounterfactualPair>& sample) {
    std::string out = "item\tintervention_id\tstratum\toriginal\tcounterfactual\tjudgment\n";
    size_t item = 1;
    for (const auto& p : sample) {
        out += std::to_string(item++) + "\t" + clean_cell(p.intervention_id) + "\t" + stratum_of(p).label() + "\t" +
               clean_cell(conllu::surface_text(p.original)) + "\t" +
               clean_cell(conllu::surface_text(p.counterfactual)) + "\t\n";
    }
    return out;
}

WaldInterval wald_interval(size_t correct, size_t n, double z) {
    if (n == 0) throw std::invalid_argument("wald interval of an empty sample");
    if (correct > n) throw std::invalid_argument("more correct items than items");
    const double nn = static_cast<double>(n);
    if (correct == 0) return {0.0, std::min(1.0, 3.0 / nn), true};
    if (correct == n) return {std::max(0.0, 1.0 - 3.0 / nn), 1.0, true};
    const double p = static_cast<double>(correct) / nn;
    const double half = z * std::sqrt(p * (1.0 - p) / nn);
    return {std::max(0.0, p - half), std::min(1.0, p + half), false};
}

EvaluationScore score_review_sheet(std::string_view tsv) {
    std::stringstream in{std::string(tsv)};
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty review sheet");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_tabs(line);
    auto col = [&](const std::string& name) -> size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw std::invalid_argument("review sheet lacks column " + name);
        return static_cast<size_t>(it - header.begin());
    };
    const size_t judgment_col = col("judgment");
    const size_t stratum_col = col("stratum");

    EvaluationScore score;
    std::map<std::string, StratumScore> strata;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cols = split_tabs(line);
        if (cols.size() <= judgment_col)
            throw std::invalid_argument("review sheet line " + std::to_string(lineno) + ": missing judgment");
        auto ok = parse_judgment(cols[judgment_col]);
        if (!ok)
            throw std::invalid_argument("review sheet line " + std::to_string(lineno) + ": unreadable judgment '" +
                                        cols[judgment_col] + "'");
        auto& s = strata[cols[stratum_col]];
        s.stratum = cols[stratum_col];
        s.n++;
        score.n++;
        if (*ok) {
            s.correct++;
            score.correct++;
        }
    }
    if (score.n == 0) throw std::invalid_argument("review sheet has no judged items");
    score.accuracy = static_cast<double>(score.correct) / static_cast<double>(score.n);
    score.interval = wald_interval(score.correct, score.n);
    for (auto& [label, s] : strata) {
        s.accuracy = static_cast<double>(s.correct) / static_cast<double>(s.n);
        score.strata.push_back(s);
    }
    return score;
}

}  // namespace morphocause::evaluation
