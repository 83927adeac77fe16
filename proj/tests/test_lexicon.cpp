#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "morphocause/adjbias.hpp"
#include "morphocause/lexicon.hpp"

using namespace morphocause;
using namespace morphocause::lexicon;

namespace {

const Lexicon& lex() {
    static const Lexicon l = Lexicon::load_default();
    return l;
}

std::string re(std::string_view form, std::string_view lemma, std::string_view upos, Feature f, FeatureValue v,
               const char* feats = nullptr) {
    if (feats) {
        auto parsed = conllu::Feats::parse(feats);
        return reinflect(lex(), form, lemma, upos, f, v, &parsed);
    }
    return reinflect(lex(), form, lemma, upos, f, v);
}

constexpr auto G = Feature::Gender;
constexpr auto N = Feature::Number;
constexpr auto Masc = FeatureValue::Masc;
constexpr auto Fem = FeatureValue::Fem;
constexpr auto Sing = FeatureValue::Sing;
constexpr auto Plur = FeatureValue::Plur;

}  // namespace

TEST_SUITE("lexicon") {
    TEST_CASE("paper examples reinflect word by word") {
        CHECK(re("programador", "programador", "NOUN", G, Fem) == "programadora");
        CHECK(re("talentoso", "talentoso", "ADJ", G, Fem) == "talentosa");
        CHECK(re("El", "el", "DET", G, Fem) == "La");
        CHECK(re("la", "el", "DET", G, Masc) == "el");
        CHECK(re("mujer", "mujer", "NOUN", G, Masc) == "hombre");
        CHECK(re("La", "el", "DET", G, Masc) == "El");
    }

    TEST_CASE("suppletive pairs change the lemma") {
        auto r = lex().reinflect_token("mujer", "mujer", Pos::Noun, G, Masc);
        CHECK(r.form == "hombre");
        CHECK(r.lemma == "hombre");
        auto p = lex().reinflect_token("madres", "madre", Pos::Noun, G, Masc);
        CHECK(p.form == "padres");
        CHECK(p.lemma == "padre");
        auto k = lex().reinflect_token("rey", "rey", Pos::Noun, G, Fem);
        CHECK(k.form == "reina");
    }

    TEST_CASE("number rules") {
        CHECK(re("ciudad", "ciudad", "NOUN", N, Plur) == "ciudades");
        CHECK(re("ciudades", "ciudad", "NOUN", N, Sing) == "ciudad");
        CHECK(re("profesor", "profesor", "NOUN", N, Plur) == "profesores");
        CHECK(re("lápiz", "lápiz", "NOUN", N, Plur) == "lápices");
        CHECK(re("canción", "canción", "NOUN", N, Plur) == "canciones");
        CHECK(re("canciones", "canción", "NOUN", N, Sing) == "canción");
        CHECK(re("joven", "joven", "ADJ", N, Plur) == "jóvenes");
        CHECK(re("jóvenes", "joven", "ADJ", N, Sing) == "joven");
        CHECK(re("casa", "casa", "NOUN", N, Plur) == "casas");
        CHECK(re("feliz", "feliz", "ADJ", N, Plur) == "felices");
        CHECK(re("un", "uno", "DET", N, Plur) == "unos");
        CHECK(re("unas", "uno", "DET", N, Sing) == "una");
        CHECK(re("este", "este", "DET", N, Plur) == "estos");
    }

    TEST_CASE("verbs and copulas follow number") {
        const char* past = "Mood=Ind|Number=Sing|Person=3|Tense=Past|VerbForm=Fin";
        const char* pres = "Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin";
        CHECK(re("escribió", "escribir", "VERB", N, Plur, past) == "escribieron");
        CHECK(re("compró", "comprar", "VERB", N, Plur, past) == "compraron");
        CHECK(re("busca", "buscar", "VERB", N, Plur, pres) == "buscan");
        CHECK(re("es", "ser", "AUX", N, Plur, pres) == "son");
        CHECK(re("dio", "dar", "VERB", N, Plur, past) == "dieron");
        CHECK(re("ha", "haber", "AUX", N, Plur, pres) == "han");
        CHECK(re("fueron", "ir", "VERB", N, Sing, "Mood=Ind|Number=Plur|Person=3|Tense=Past|VerbForm=Fin") == "fue");
    }

    TEST_CASE("verbs outside the third person or finite forms fail") {
        CHECK_THROWS_AS(re("escribí", "escribir", "VERB", N, Plur, "Mood=Ind|Number=Sing|Person=1|Tense=Past|VerbForm=Fin"),
                        ReinflectionFailure);
        CHECK_THROWS_AS(re("escribir", "escribir", "VERB", N, Plur, "VerbForm=Inf"), ReinflectionFailure);
    }

    TEST_CASE("syncretic forms are returned unchanged") {
        CHECK(re("inteligente", "inteligente", "ADJ", G, Fem) == "inteligente");
        CHECK(re("feliz", "feliz", "ADJ", G, Masc) == "feliz");
        CHECK(re("mejor", "mejor", "ADJ", G, Fem) == "mejor");
        CHECK(re("racional", "racional", "ADJ", G, Fem) == "racional");
        CHECK(re("bebés", "bebé", "NOUN", G, Fem) == "bebés");
    }

    TEST_CASE("casing of the source is kept") {
        CHECK(re("Programador", "programador", "NOUN", G, Fem) == "Programadora");
        CHECK(re("LOS", "el", "DET", N, Sing) == "EL");
    }

    TEST_CASE("adjective list pairs reinflect into each other") {
        for (const auto& a : adjbias::default_adjectives()) {
            CAPTURE(a.gloss);
            CHECK(re(a.masc_form, a.masc_form, "ADJ", G, Fem) == a.fem_form);
            CHECK(re(a.fem_form, a.masc_form, "ADJ", G, Masc) == a.masc_form);
        }
    }

    TEST_CASE("number reinflection is an involution on the fixture vocabulary") {
        auto sentences = conllu::parse_conllu(testutil::read_file(testutil::data_path("fixture200.conllu")));
        size_t checked = 0;
        for (const auto& s : sentences)
            for (const auto& t : s.tokens) {
                if (t.upos != "NOUN" && t.upos != "ADJ" && t.upos != "DET") continue;
                auto num = t.feats.get("Number");
                if (!num) continue;
                const auto src = *parse_feature_value(*num);
                const std::string there = re(t.form, t.lemma, t.upos, N, opposite(src));
                CAPTURE(t.form);
                CHECK(re(there, t.lemma, t.upos, N, src) == t.form);
                ++checked;
            }
        CHECK(checked > 300);
    }

    TEST_CASE("exceptions are added with their inverse") {
        auto rules = ReinflectionRuleSet::builtin();
        rules.add_exception({"foo", Pos::Noun, G, Fem, "fooina"});
        CHECK(rules.apply("foo", "foo", Pos::Noun, G, Fem) == "fooina");
        CHECK(rules.apply("fooina", "foo", Pos::Noun, G, Masc) == "foo");
        std::istringstream bad("foo\tNOUN\tGender\n");
        CHECK_THROWS_AS(rules.read_exceptions(bad), LexiconError);
    }

    TEST_CASE("every shipped exception round-trips through its inverse") {
        for (const auto& e : lex().rules.exceptions()) {
            CAPTURE(e.form);
            CAPTURE(e.output);
            const FeatureValue back = opposite(e.target);
            auto there = lex().rules.apply(e.form, e.form, e.pos, e.feature, e.target);
            CHECK(there == e.output);
            if (there != e.form) CHECK(lex().rules.apply(there, e.form, e.pos, e.feature, back) == e.form);
        }
    }

    TEST_CASE("animacy lookups fold case") {
        CHECK(lex().is_animate("programador"));
        CHECK(lex().is_animate("Programadora"));
        CHECK(lex().is_animate("mujer"));
        CHECK_FALSE(lex().is_animate("código"));
        CHECK_FALSE(lex().is_animate("puente"));
        std::istringstream in("# comment\n\nniño\n");
        auto a = AnimacyLexicon::read(in);
        CHECK(a.size() == 1);
        CHECK(a.is_animate("NIÑO"));
    }

    TEST_CASE("contractions are created and dropped with the determiner") {
        const std::string text =
            "# sent_id = c\n"
            "1\tfue\tir\tVERB\t_\t_\t0\troot\t_\t_\n"
            "2\ta\ta\tADP\t_\t_\t4\tcase\t_\t_\n"
            "3\tel\tel\tDET\t_\tGender=Masc|Number=Sing\t4\tdet\t_\t_\n"
            "4\tniño\tniño\tNOUN\t_\tGender=Masc|Number=Sing\t1\tobl\t_\tSpaceAfter=No\n\n";
        auto s = conllu::parse_conllu(text).at(0);
        auto fused = apply_contractions(s);
        REQUIRE(fused.multiword.size() == 1);
        CHECK(fused.multiword[0].form == "al");
        CHECK(conllu::surface_text(fused) == "fue al niño");
        CHECK(is_contraction(fused, fused.multiword[0]));
        CHECK(split_contractions(fused) == s);

        auto fem = fused;
        fem.token(3).form = "la";
        auto dropped = apply_contractions(fem);
        CHECK(dropped.multiword.empty());
        CHECK(conllu::surface_text(dropped) == "fue a la niño");

        // A restricted call leaves other determiners alone.
        CHECK(apply_contractions(s, {4}).multiword.empty());
        CHECK(apply_contractions(s, {3}).multiword.size() == 1);
    }

    TEST_CASE("loading a directory with a malformed table fails") {
        testutil::TempDir dir("lexicon");
        testutil::write_file(dir / "animate_lemmas.txt", "niño\n");
        testutil::write_file(dir / "suppletive.tsv", "hombre\thombre\tmujer\n");
        testutil::write_file(dir / "exceptions.tsv", "");
        CHECK_THROWS_AS(Lexicon::load(dir.path()), LexiconError);
        testutil::write_file(dir / "suppletive.tsv", "hombre\thombre\tmujer\tmujer\n");
        auto l = Lexicon::load(dir.path());
        CHECK(l.is_animate("niño"));
        CHECK(l.reinflect_token("hombre", "hombre", Pos::Noun, G, Fem).form == "mujer");
    }
}
