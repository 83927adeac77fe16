#include "morphocause/adjbias.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

namespace morphocause::adjbias {

const std::vector<AdjectiveEntry>& default_adjectives() {
    static const std::vector<AdjectiveEntry> list = {
        {"beautiful", "hermoso", "hermosa"},
        {"sexy", "sexy", "sexy"},
        {"upset", "molesto", "molesta"},
        {"pretty", "bonito", "bonita"},
        {"delicate", "delicado", "delicada"},
        {"fast", "rápido", "rápida"},
        {"young", "joven", "joven"},
        {"intelligent", "inteligente", "inteligente"},
        {"funny", "divertido", "divertida"},
        {"strong", "fuerte", "fuerte"},
        {"hard", "duro", "dura"},
        {"cheerful", "alegre", "alegre"},
        {"protected", "protegido", "protegida"},
        {"excellent", "excelente", "excelente"},
        {"new", "nuevo", "nueva"},
        {"serious", "serio", "seria"},
        {"sensitive", "sensible", "sensible"},
        {"professional", "profesional", "profesional"},
        {"emotional", "emocional", "emocional"},
        {"independent", "independiente", "independiente"},
        {"fantastic", "fantástico", "fantástica"},
        {"brutal", "brutal", "brutal"},
        {"bad", "malo", "mala"},
        {"good", "bueno", "buena"},
        {"horrible", "horrible", "horrible"},
        {"sad", "triste", "triste"},
        {"nice", "amable", "amable"},
        {"quiet", "tranquilo", "tranquila"},
        {"rich", "rico", "rica"},
        {"rational", "racional", "racional"},
    };
    return list;
}

std::vector<AdjectiveEntry> read_adjectives(std::istream& in) {
    std::vector<AdjectiveEntry> out;
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
        if (cols.size() != 3 || cols[1].empty() || cols[2].empty())
            throw std::invalid_argument("adjective list line " + std::to_string(lineno) + ": expected gloss, masc, fem");
        out.push_back({cols[0], cols[1], cols[2]});
    }
    return out;
}

namespace {

std::string strip_marker(const std::string& token) {
    for (std::string_view marker : {"Ġ", "▁"})
        if (token.starts_with(marker)) return token.substr(marker.size());
    return token;
}

std::optional<size_t> find_form(const divergence::MaskedDistribution& dist, const std::string& form) {
    std::optional<size_t> loose;
    for (size_t i = 0; i < dist.tokens.size(); ++i) {
        if (dist.tokens[i] == form) return i;
        if (!loose && strip_marker(dist.tokens[i]) == form) loose = i;
    }
    return loose;
}

}  // namespace

double adjective_logprob(const divergence::MaskedDistribution& dist, const AdjectiveEntry& entry) {
    if (dist.tokens.size() != dist.probs.size())
        throw MissingVocab("distribution carries no vocabulary strings");
    auto m = find_form(dist, entry.masc_form);
    if (!m) throw MissingVocab("'" + entry.masc_form + "' is not in the vocabulary");
    double mass = dist.probs[*m];
    if (!entry.syncretic()) {
        auto f = find_form(dist, entry.fem_form);
        if (!f) throw MissingVocab("'" + entry.fem_form + "' is not in the vocabulary");
        mass += dist.probs[*f];
    }
    if (!(mass > 0.0)) throw MissingMass("no probability mass on '" + entry.gloss + "'");
    return std::log(mass);
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of an empty sequence");
    const size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<long>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<long>(mid));
    return (lower + upper) / 2.0;
}

BiasResult bias_scores(const std::vector<DistributionPair>& instances, const std::vector<AdjectiveEntry>& adjectives) {
    BiasResult result;
    for (const auto& adj : adjectives) {
        AdjectiveBiasScore s;
        s.adjective = adj;
        std::vector<double> ratios;
        bool missing_vocab = false;
        for (const auto& inst : instances) {
            try {
                ratios.push_back(adjective_logprob(inst.masc, adj) - adjective_logprob(inst.fem, adj));
            } catch (const MissingVocab&) {
                missing_vocab = true;
                break;
            } catch (const MissingMass&) {
                s.skipped++;
            }
        }
        if (missing_vocab) {
            result.excluded.push_back(adj.gloss);
            continue;
        }
        s.n_instances = ratios.size();
        s.empty = ratios.empty();
        if (!s.empty) s.score = median(std::move(ratios));
        result.scores.push_back(std::move(s));
    }
    return result;
}

BiasResult bias_scores(const repstore::Store& store, const std::vector<intervention::CounterfactualPair>& augmented,
                       const std::vector<AdjectiveEntry>& adjectives) {
    auto lookup = repstore::row_lookup(store);
    std::vector<DistributionPair> instances;
    size_t ineligible = 0;
    size_t missing = 0;
    for (const auto& p : augmented) {
        if (p.focus.feature != Feature::Gender) {
            ineligible++;
            continue;
        }
        int amods = 0;
        for (const auto& t : p.original.tokens)
            if (t.head == p.focus.token_index && t.base_deprel() == "amod") amods++;
        if (amods != 1) {
            ineligible++;
            continue;
        }
        auto o = lookup.find({p.intervention_id, "original"});
        auto c = lookup.find({p.intervention_id, "counterfactual"});
        if (o == lookup.end() || c == lookup.end()) {
            missing++;
            continue;
        }
        auto orig = divergence::distribution_row(store, o->second);
        auto cf = divergence::distribution_row(store, c->second);
        if (p.focus.source_value == FeatureValue::Masc)
            instances.push_back({std::move(orig), std::move(cf)});
        else
            instances.push_back({std::move(cf), std::move(orig)});
    }
    auto result = bias_scores(instances, adjectives);
    result.ineligible = ineligible;
    result.missing_rows = missing;
    return result;
}

std::string BiasResult::tsv() const {
    std::string out = "gloss\tmasc_form\tfem_form\tscore\tn_instances\tskipped\n";
    char buf[32];
    for (const auto& s : scores) {
        if (s.empty)
            std::snprintf(buf, sizeof buf, "NA");
        else
            std::snprintf(buf, sizeof buf, "%.6f", s.score);
        out += s.adjective.gloss + "\t" + s.adjective.masc_form + "\t" + s.adjective.fem_form + "\t" + buf + "\t" +
               std::to_string(s.n_instances) + "\t" + std::to_string(s.skipped) + "\n";
    }
    return out;
}

nlohmann::json BiasResult::json() const {
    std::vector<const AdjectiveBiasScore*> sorted;
    for (const auto& s : scores)
        if (!s.empty) sorted.push_back(&s);
    std::stable_sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->score < b->score; });
    nlohmann::json j;
    auto bars = nlohmann::json::array();
    for (auto* s : sorted)
        bars.push_back({{"gloss", s->adjective.gloss},
                        {"label", s->adjective.syncretic() ? s->adjective.masc_form
                                                          : s->adjective.masc_form + "/" + s->adjective.fem_form},
                        {"score", s->score},
                        {"n_instances", s->n_instances}});
    j["scores"] = bars;
    j["excluded"] = excluded;
    j["ineligible"] = ineligible;
    j["missing_rows"] = missing_rows;
    return j;
}

}  // namespace morphocause::adjbias
