#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "oracles.hpp"
#include "morphocause/adjbias.hpp"
#include "morphocause/random.hpp"

using namespace morphocause;
using namespace morphocause::adjbias;
using divergence::MaskedDistribution;

namespace {

const std::vector<std::string> kVocab{"Ġhermoso", "hermosa", "▁racional", "rico", "rica", "el", "la", "código"};

MaskedDistribution dist(const std::vector<double>& probs) {
    MaskedDistribution d;
    d.probs = probs;
    d.tokens = kVocab;
    for (size_t i = 0; i < probs.size(); ++i) d.vocab_ids.push_back(static_cast<int64_t>(i));
    return d;
}

MaskedDistribution random_dist(Rng& rng) {
    std::vector<double> p(kVocab.size());
    double total = 0;
    for (auto& x : p) total += x = 0.01 + rng.uniform();
    for (auto& x : p) x /= total;
    return dist(p);
}

const AdjectiveEntry kBeautiful{"beautiful", "hermoso", "hermosa"};
const AdjectiveEntry kRational{"rational", "racional", "racional"};
const AdjectiveEntry kRich{"rich", "rico", "rica"};

}  // namespace

TEST_SUITE("adjbias") {
    TEST_CASE("median agrees with a sort-based oracle") {
        Rng rng(5);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> v(1 + rng.below(30));
            for (auto& x : v) x = std::round(rng.normal() * 4) / 4;
            CHECK(median(v) == oracle::sorted_median(v));
        }
        CHECK(median({4.0, 1.0}) == 2.5);
        CHECK_THROWS_AS(median({}), std::invalid_argument);
    }

    TEST_CASE("log probability sums the two forms and strips boundary markers") {
        auto d = dist({0.1, 0.2, 0.05, 0.15, 0.25, 0.1, 0.1, 0.05});
        CHECK(adjective_logprob(d, kBeautiful) == doctest::Approx(std::log(0.3)));
        CHECK(adjective_logprob(d, kRich) == doctest::Approx(std::log(0.4)));
        // A syncretic form is counted once.
        CHECK(adjective_logprob(d, kRational) == doctest::Approx(std::log(0.05)));
    }

    TEST_CASE("missing vocabulary and missing mass are distinguished") {
        auto d = dist({0.0, 0.0, 0.1, 0.2, 0.2, 0.2, 0.2, 0.1});
        CHECK_THROWS_AS(adjective_logprob(d, {"x", "rápido", "rápida"}), MissingVocab);
        CHECK_THROWS_AS(adjective_logprob(d, kBeautiful), MissingMass);
        MaskedDistribution bare{{0, 1}, {0.5, 0.5}, {}};
        CHECK_THROWS_AS(adjective_logprob(bare, kRich), MissingVocab);

        auto ok = dist({0.1, 0.1, 0.1, 0.2, 0.2, 0.1, 0.1, 0.1});
        auto result = bias_scores({{ok, d}, {ok, ok}}, {kBeautiful, {"fast", "rápido", "rápida"}, kRich});
        CHECK(result.excluded == std::vector<std::string>{"fast"});
        REQUIRE(result.scores.size() == 2);
        CHECK(result.scores[0].skipped == 1);
        CHECK(result.scores[0].n_instances == 1);
        CHECK(result.scores[0].score == 0.0);
    }

    TEST_CASE("score is the median log ratio and flips sign under a variant swap") {
        Rng rng(9);
        std::vector<DistributionPair> inst, swapped;
        for (int i = 0; i < 41; ++i) {
            inst.push_back({random_dist(rng), random_dist(rng)});
            swapped.push_back({inst.back().fem, inst.back().masc});
        }
        const std::vector<AdjectiveEntry> adjs{kBeautiful, kRational, kRich};
        auto a = bias_scores(inst, adjs);
        auto b = bias_scores(swapped, adjs);
        REQUIRE(a.scores.size() == 3);
        for (size_t k = 0; k < 3; ++k) {
            std::vector<double> ratios;
            for (const auto& x : inst)
                ratios.push_back(adjective_logprob(x.masc, adjs[k]) - adjective_logprob(x.fem, adjs[k]));
            std::sort(ratios.begin(), ratios.end());
            CHECK(a.scores[k].score == ratios[20]);
            CHECK(a.scores[k].score == -b.scores[k].score);
            CHECK(a.scores[k].n_instances == 41);
        }
    }

    TEST_CASE("the shipped adjective list matches the built-in one") {
        std::istringstream in(testutil::read_file(std::filesystem::path(MORPHOCAUSE_DATA_DIR) / "adjectives.tsv"));
        auto list = read_adjectives(in);
        CHECK(list == default_adjectives());
        CHECK(list.size() == 30);
        size_t syncretic = 0;
        for (const auto& a : list) syncretic += a.syncretic();
        CHECK(syncretic > 10);
        std::istringstream bad("x\ty\n");
        CHECK_THROWS_AS(read_adjectives(bad), std::invalid_argument);
    }

    TEST_CASE("store-based scoring orients pairs by source value") {
        auto s = testutil::load_one("example1.conllu");
        auto lex = lexicon::Lexicon::load_default();
        auto pair = intervention::reinflect_tree(conllu::DepTree(s),
                                                 {2, Feature::Gender, FeatureValue::Masc, FeatureValue::Fem}, lex);
        auto rev = intervention::reinflect_tree(conllu::DepTree(pair.counterfactual), intervention::reversed(pair.focus),
                                                lex);
        rev.intervention_id = "rev:2:gender";

        repstore::Store store;
        store.manifest.kind = repstore::StoreKind::Dist;
        store.manifest.vocab_scope = "full";
        store.manifest.dim = kVocab.size();
        store.manifest.count = 4;
        store.manifest.position_kind = "adjective";
        for (size_t i = 0; i < kVocab.size(); ++i) store.manifest.vocab_ids.push_back(static_cast<int64_t>(i));
        store.manifest.vocab_tokens = kVocab;
        store.rows.resize(4, static_cast<Eigen::Index>(kVocab.size()));
        // masc context favours hermoso, fem context hermosa.
        store.rows << 0.4f, 0.1f, 0.1f, 0.1f, 0.1f, 0.1f, 0.05f, 0.05f,  //
            0.1f, 0.2f, 0.1f, 0.1f, 0.1f, 0.2f, 0.1f, 0.1f,              //
            0.1f, 0.2f, 0.1f, 0.1f, 0.1f, 0.2f, 0.1f, 0.1f,              //
            0.4f, 0.1f, 0.1f, 0.1f, 0.1f, 0.1f, 0.05f, 0.05f;
        store.manifest.index = {{pair.intervention_id, "original", 3},
                                {pair.intervention_id, "counterfactual", 3},
                                {rev.intervention_id, "original", 3},
                                {rev.intervention_id, "counterfactual", 3}};
        auto result = bias_scores(store, {pair, rev}, {kBeautiful});
        REQUIRE(result.scores.size() == 1);
        CHECK(result.scores[0].n_instances == 2);
        CHECK(result.scores[0].score == doctest::Approx(std::log(0.5 / 0.3)).epsilon(1e-6));
        CHECK(result.ineligible == 0);
        CHECK(result.json()["scores"][0]["label"] == "hermoso/hermosa");
        CHECK(result.tsv().rfind("gloss\tmasc_form\tfem_form\tscore\tn_instances\tskipped\n", 0) == 0);
    }
}
