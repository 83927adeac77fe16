#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "helpers.hpp"
#include "morphocause/repstore.hpp"
#include "morphocause/synthetic.hpp"

using namespace morphocause;
using namespace morphocause::repstore;

namespace {

Store small_store() {
    Store s;
    s.manifest.dim = 3;
    s.manifest.count = 4;
    s.manifest.model_id = "toy";
    s.manifest.position_kind = "focus";
    s.rows.resize(4, 3);
    s.rows << 1.0f, -2.5f, 0.125f, 3.0f, 4.0f, 5.0f, -1.0f, 0.0f, 1e-7f, 7.0f, 8.0f, 9.0f;
    s.manifest.index = {{"s1:2:gender", "original", 2},
                        {"s1:2:gender", "counterfactual", 2},
                        {"s2:1:gender", "original", 1},
                        {"s3:4:gender", "counterfactual", 4}};
    return s;
}

intervention::CounterfactualPair stub(const std::string& id, FeatureValue src) {
    intervention::CounterfactualPair p;
    p.intervention_id = id;
    p.focus = {2, feature_of(src), src, opposite(src)};
    p.split = "train";
    return p;
}

}  // namespace

TEST_SUITE("repstore") {
    TEST_CASE("stores round-trip exactly and write byte-stable files") {
        testutil::TempDir dir("store");
        auto s = small_store();
        s.manifest.extra["note"] = "x";
        write_store(dir / "a", s);
        write_store(dir / "b", s);
        for (const char* f : {"manifest.json", "reps.f32", "index.tsv"})
            CHECK(testutil::read_file(dir / "a" / f) == testutil::read_file(dir / "b" / f));
        auto back = read_store(dir / "a");
        CHECK(back.manifest == s.manifest);
        CHECK(back.rows == s.rows);
        CHECK(back.find("s1:2:gender", "counterfactual") == 1);
        CHECK_FALSE(back.find("s2:1:gender", "counterfactual").has_value());
    }

    TEST_CASE("payload is a magic header followed by little-endian float32") {
        testutil::TempDir dir("layout");
        write_store(dir.path(), small_store());
        const std::string bytes = testutil::read_file(dir / "reps.f32");
        CHECK(bytes.size() == 8 + 4 * 3 * 4);
        CHECK(bytes.substr(0, 8) == "NCPREPS1");
        // -2.5f = 0xC0200000
        const unsigned char expect[4] = {0x00, 0x00, 0x20, 0xC0};
        CHECK(std::memcmp(bytes.data() + 8 + 4, expect, 4) == 0);
        const std::string index = testutil::read_file(dir / "index.tsv");
        CHECK(index.rfind("row\tintervention_id\tvariant\ttoken_index\n0\ts1:2:gender\toriginal\t2\n", 0) == 0);
    }

    TEST_CASE("writer rejects bad shapes and values") {
        testutil::TempDir dir("bad-write");
        auto s = small_store();
        s.manifest.count = 5;
        CHECK_THROWS_AS(write_store(dir.path(), s), ShapeError);
        s = small_store();
        s.manifest.index.pop_back();
        CHECK_THROWS_AS(write_store(dir.path(), s), ShapeError);
        s = small_store();
        s.rows(1, 1) = std::numeric_limits<float>::quiet_NaN();
        CHECK_THROWS_AS(write_store(dir.path(), s), NonFiniteError);
        s = small_store();
        s.rows(0, 0) = std::numeric_limits<float>::infinity();
        CHECK_THROWS_AS(write_store(dir.path(), s), NonFiniteError);
        s = small_store();
        s.manifest.dtype = "float16";
        CHECK_THROWS_AS(write_store(dir.path(), s), VersionError);
        s = small_store();
        s.manifest.index[0].intervention_id = "a\tb";
        CHECK_THROWS_AS(write_store(dir.path(), s), StoreError);
    }

    TEST_CASE("reader detects damaged stores") {
        testutil::TempDir dir("bad-read");
        CHECK_THROWS_AS(read_store(dir / "nothing"), MissingStoreError);

        write_store(dir.path(), small_store());
        const std::string payload = testutil::read_file(dir / "reps.f32");
        const std::string manifest = testutil::read_file(dir / "manifest.json");
        const std::string index = testutil::read_file(dir / "index.tsv");

        SUBCASE("truncated payload") {
            testutil::write_file(dir / "reps.f32", payload.substr(0, payload.size() - 4));
            CHECK_THROWS_AS(read_store(dir.path()), CorruptionError);
        }
        SUBCASE("bad magic") {
            testutil::write_file(dir / "reps.f32", "XXXXXXXX" + payload.substr(8));
            CHECK_THROWS_AS(read_store(dir.path()), CorruptionError);
        }
        SUBCASE("unknown dtype") {
            auto j = nlohmann::json::parse(manifest);
            j["dtype"] = "bfloat16";
            testutil::write_file(dir / "manifest.json", j.dump());
            CHECK_THROWS_AS(read_store(dir.path()), VersionError);
        }
        SUBCASE("index shorter than count") {
            testutil::write_file(dir / "index.tsv", index.substr(0, index.rfind('\n', index.size() - 2) + 1));
            CHECK_THROWS_AS(read_store(dir.path()), ConsistencyError);
        }
        SUBCASE("manifest is not JSON") {
            testutil::write_file(dir / "manifest.json", "{not json");
            CHECK_THROWS_AS(read_store(dir.path()), CorruptionError);
        }
        SUBCASE("missing payload") {
            std::filesystem::remove(dir / "reps.f32");
            CHECK_THROWS_AS(read_store(dir.path()), MissingStoreError);
        }
    }

    TEST_CASE("join keeps complete pairs known to the corpus") {
        auto s = small_store();
        std::vector<intervention::CounterfactualPair> aug{stub("s1:2:gender", FeatureValue::Masc),
                                                          stub("s2:1:gender", FeatureValue::Fem)};
        auto joined = join_pairs(s, aug);
        REQUIRE(joined.pairs.size() == 1);
        CHECK(joined.skipped == 2);
        CHECK(joined.pairs[0].intervention_id == "s1:2:gender");
        CHECK(joined.pairs[0].original(1) == -2.5);
        CHECK(joined.pairs[0].counterfactual(2) == 5.0);
        CHECK(joined.pairs[0].focus.source_value == FeatureValue::Masc);
        CHECK(joined.pairs[0].split == "train");
    }

    TEST_CASE("join output is sorted and complete on synthetic stores") {
        synthetic::ExactEffectConfig cfg;
        cfg.n_pairs = 50;
        cfg.dim = 4;
        auto corpus = synthetic::exact_effect_corpus(cfg);
        auto store = synthetic::to_store(corpus.pairs, "focus");
        auto joined = join_pairs(store, synthetic::stub_augmented(corpus.pairs));
        CHECK(joined.skipped == 0);
        REQUIRE(joined.pairs.size() == 50);
        for (size_t i = 1; i < joined.pairs.size(); ++i)
            CHECK(joined.pairs[i - 1].intervention_id < joined.pairs[i].intervention_id);
    }

    TEST_CASE("templated stores join by feature value") {
        Store s;
        s.manifest.dim = 2;
        s.manifest.count = 3;
        s.rows.resize(3, 2);
        s.rows << 1, 2, 3, 4, 5, 6;
        s.manifest.index = {{"t1", "Masc", 1}, {"t1", "Fem", 1}, {"t2", "Masc", 1}};
        auto joined = join_value_pairs(s, Feature::Gender);
        REQUIRE(joined.pairs.size() == 1);
        CHECK(joined.skipped == 1);
        CHECK(joined.pairs[0].positive(0) == 1.0);
        CHECK(joined.pairs[0].negative(0) == 3.0);
    }

    TEST_CASE("row lookup covers every index entry") {
        auto s = small_store();
        auto m = row_lookup(s);
        CHECK(m.size() == 4);
        CHECK(m.at({"s3:4:gender", "counterfactual"}) == 3);
    }

    TEST_CASE("store kinds and manifest extras survive") {
        testutil::TempDir dir("kinds");
        auto s = small_store();
        s.manifest.kind = StoreKind::Dist;
        s.manifest.vocab_scope = "full";
        s.manifest.vocab_ids = {10, 11, 12};
        s.manifest.vocab_tokens = {"a", "b", "c"};
        s.manifest.baseline = "random-weights";
        write_store(dir.path(), s);
        auto back = read_store(dir.path());
        CHECK(back.manifest.kind == StoreKind::Dist);
        CHECK(back.manifest.vocab_ids == s.manifest.vocab_ids);
        CHECK(back.manifest.vocab_tokens == s.manifest.vocab_tokens);
        CHECK(back.manifest.baseline == "random-weights");
        s.manifest.vocab_ids = {1, 2};
        CHECK_THROWS_AS(write_store(dir / "x", s), ShapeError);
        CHECK(parse_store_kind("probe") == StoreKind::Probe);
        CHECK_FALSE(parse_store_kind("nope").has_value());
    }
}
