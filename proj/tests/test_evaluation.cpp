#include <doctest.h>

#include <cmath>
#include <map>

#include "helpers.hpp"
#include "morphocause/evaluation.hpp"

using namespace morphocause;
using namespace morphocause::evaluation;
using intervention::CounterfactualPair;

namespace {

std::vector<CounterfactualPair> stub_pairs(const std::map<std::string, size_t>& per_stratum) {
    auto s = testutil::load_one("example1.conllu");
    std::vector<CounterfactualPair> out;
    for (const auto& [label, count] : per_stratum) {
        // label: dataset/feature/value
        auto a = label.find('/');
        auto b = label.rfind('/');
        const auto value = *parse_feature_value(label.substr(b + 1));
        for (size_t i = 0; i < count; ++i) {
            CounterfactualPair p;
            p.dataset = label.substr(0, a);
            p.focus = {2, feature_of(value), value, opposite(value)};
            p.intervention_id = label + "#" + std::to_string(1000 + i);
            p.original = s;
            p.counterfactual = s;
            out.push_back(p);
        }
    }
    return out;
}

std::map<std::string, size_t> full_design(size_t each) {
    std::map<std::string, size_t> m;
    for (const char* d : {"ancora", "gsd"})
        for (const char* v : {"Masc", "Fem"}) m[std::string(d) + "/Gender/" + v] = each;
    for (const char* d : {"ancora", "gsd"})
        for (const char* v : {"Sing", "Plur"}) m[std::string(d) + "/Number/" + v] = each;
    return m;
}

std::string sheet(const std::vector<std::pair<std::string, std::string>>& rows) {
    std::string out = "item\tintervention_id\tstratum\toriginal\tcounterfactual\tjudgment\n";
    size_t i = 1;
    for (const auto& [stratum, judgment] : rows) {
        out += std::to_string(i) + "\tid" + std::to_string(i) + "\t" + stratum + "\ta\tb\t" + judgment + "\n";
        ++i;
    }
    return out;
}

}  // namespace

TEST_SUITE("evaluation") {
    TEST_CASE("wald interval on 73 of 100 matches the reported range") {
        auto w = wald_interval(73, 100);
        const double p = 0.73;
        const double half = 1.959963984540054 * std::sqrt(p * (1 - p) / 100.0);
        CHECK(w.lower == doctest::Approx(p - half).epsilon(1e-12));
        CHECK(w.upper == doctest::Approx(p + half).epsilon(1e-12));
        CHECK(std::abs(w.lower - 0.64) <= 0.005);
        CHECK(std::abs(w.upper - 0.82) <= 0.005);
        CHECK_FALSE(w.degenerate);
    }

    TEST_CASE("degenerate proportions use the rule of three") {
        auto all = wald_interval(40, 40);
        CHECK(all.degenerate);
        CHECK(all.upper == 1.0);
        CHECK(all.lower == doctest::Approx(1.0 - 3.0 / 40.0));
        auto none = wald_interval(0, 10);
        CHECK(none.lower == 0.0);
        CHECK(none.upper == doctest::Approx(0.3));
        CHECK(wald_interval(0, 2).upper == 1.0);
        CHECK_THROWS_AS(wald_interval(0, 0), std::invalid_argument);
        CHECK_THROWS_AS(wald_interval(3, 2), std::invalid_argument);
    }

    TEST_CASE("stratified sampling allocates evenly with the remainder first") {
        auto pairs = stub_pairs(full_design(30));
        auto sample = sample_for_evaluation(pairs, 100, 7);
        REQUIRE(sample.size() == 100);
        std::map<std::string, size_t> counts;
        for (const auto& p : sample) counts[stratum_of(p).label()]++;
        REQUIRE(counts.size() == 8);
        // Sorted labels: ancora/Gender/Fem, ancora/Gender/Masc, ancora/Number/Plur, ancora/Number/Sing, gsd/...
        std::vector<size_t> expected{13, 13, 13, 13, 12, 12, 12, 12};
        size_t i = 0;
        for (const auto& [label, n] : counts) CHECK(n == expected[i++]);
        std::set<std::string> ids;
        for (const auto& p : sample) ids.insert(p.intervention_id);
        CHECK(ids.size() == 100);
    }

    TEST_CASE("sampling is seeded") {
        auto pairs = stub_pairs(full_design(30));
        auto ids = [](const std::vector<CounterfactualPair>& v) {
            std::vector<std::string> out;
            for (const auto& p : v) out.push_back(p.intervention_id);
            return out;
        };
        CHECK(ids(sample_for_evaluation(pairs, 40, 1)) == ids(sample_for_evaluation(pairs, 40, 1)));
        CHECK(ids(sample_for_evaluation(pairs, 40, 1)) != ids(sample_for_evaluation(pairs, 40, 2)));
    }

    TEST_CASE("an undersized stratum is named in the error") {
        auto design = full_design(30);
        design["gsd/Gender/Fem"] = 3;
        auto pairs = stub_pairs(design);
        try {
            sample_for_evaluation(pairs, 100, 1);
            FAIL("expected SamplingError");
        } catch (const SamplingError& e) {
            CHECK(std::string(e.what()).find("gsd/Gender/Fem") != std::string::npos);
        }
        // A stratum with no pairs at all is still part of the design.
        design.erase("gsd/Gender/Fem");
        CHECK_THROWS_AS(sample_for_evaluation(stub_pairs(design), 16, 1), SamplingError);
    }

    TEST_CASE("review sheets have a blank judgment column") {
        auto sample = sample_for_evaluation(stub_pairs(full_design(2)), 8, 3);
        const std::string tsv = review_sheet_tsv(sample);
        std::istringstream in(tsv);
        std::string line;
        std::getline(in, line);
        CHECK(line == "item\tintervention_id\tstratum\toriginal\tcounterfactual\tjudgment");
        size_t rows = 0;
        while (std::getline(in, line)) {
            ++rows;
            CHECK(line.back() == '\t');
            CHECK(line.find("El programador talentoso escribió el código.") != std::string::npos);
        }
        CHECK(rows == 8);
        CHECK_THROWS_AS(score_review_sheet(tsv), std::invalid_argument);
    }

    TEST_CASE("scoring a filled sheet") {
        std::vector<std::pair<std::string, std::string>> rows;
        for (int i = 0; i < 100; ++i) rows.emplace_back(i % 2 ? "a/Gender/Masc" : "a/Gender/Fem", i < 73 ? "1" : "0");
        auto score = score_review_sheet(sheet(rows));
        CHECK(score.n == 100);
        CHECK(score.correct == 73);
        CHECK(score.accuracy == doctest::Approx(0.73));
        CHECK(std::abs(score.interval.lower - 0.64) <= 0.005);
        CHECK(std::abs(score.interval.upper - 0.82) <= 0.005);
        REQUIRE(score.strata.size() == 2);
        CHECK(score.strata[0].n + score.strata[1].n == 100);
    }

    TEST_CASE("per-stratum table for one item per stratum") {
        std::vector<std::pair<std::string, std::string>> rows;
        size_t i = 0;
        for (const auto& [label, n] : full_design(1)) rows.emplace_back(label, i++ % 3 ? "yes" : "no");
        auto score = score_review_sheet(sheet(rows));
        REQUIRE(score.strata.size() == 8);
        for (const auto& s : score.strata) {
            CHECK(s.n == 1);
            CHECK((s.accuracy == 0.0 || s.accuracy == 1.0));
        }
        CHECK(score.correct == 5);
    }

    TEST_CASE("judgment spellings") {
        auto score = score_review_sheet(sheet({{"s", "Y"}, {"s", "TRUE"}, {"s", "correct"}, {"s", " n "}}));
        CHECK(score.correct == 3);
        CHECK_THROWS_AS(score_review_sheet(sheet({{"s", "maybe"}})), std::invalid_argument);
        CHECK_THROWS_AS(score_review_sheet(sheet({{"s", ""}})), std::invalid_argument);
        CHECK_THROWS_AS(score_review_sheet(""), std::invalid_argument);
    }
}
