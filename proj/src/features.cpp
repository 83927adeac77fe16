#include "morphocause/features.hpp"

#include "morphocause/utf8.hpp"

namespace morphocause {

FeatureValue positive_pole(Feature feature) {
    return feature == Feature::Gender ? FeatureValue::Masc : FeatureValue::Sing;
}

FeatureValue negative_pole(Feature feature) {
    return feature == Feature::Gender ? FeatureValue::Fem : FeatureValue::Plur;
}

bool is_positive_pole(FeatureValue value) { return value == FeatureValue::Masc || value == FeatureValue::Sing; }

Feature feature_of(FeatureValue value) {
    return (value == FeatureValue::Masc || value == FeatureValue::Fem) ? Feature::Gender : Feature::Number;
}

FeatureValue opposite(FeatureValue value) {
    switch (value) {
        case FeatureValue::Masc: return FeatureValue::Fem;
        case FeatureValue::Fem: return FeatureValue::Masc;
        case FeatureValue::Sing: return FeatureValue::Plur;
        case FeatureValue::Plur: return FeatureValue::Sing;
    }
    return value;
}

std::string_view to_string(Feature feature) { return feature == Feature::Gender ? "Gender" : "Number"; }

std::string_view to_string(FeatureValue value) {
    switch (value) {
        case FeatureValue::Masc: return "Masc";
        case FeatureValue::Fem: return "Fem";
        case FeatureValue::Sing: return "Sing";
        case FeatureValue::Plur: return "Plur";
    }
    return "";
}

std::string convention_label(Feature feature) {
    return std::string(to_string(positive_pole(feature))) + "-" + std::string(to_string(negative_pole(feature)));
}

std::optional<Feature> parse_feature(std::string_view text) {
    auto lowered = utf8::to_lower(text);
    if (lowered == "gender") return Feature::Gender;
    if (lowered == "number") return Feature::Number;
    return std::nullopt;
}

std::optional<FeatureValue> parse_feature_value(std::string_view text) {
    auto lowered = utf8::to_lower(text);
    if (lowered == "masc") return FeatureValue::Masc;
    if (lowered == "fem") return FeatureValue::Fem;
    if (lowered == "sing") return FeatureValue::Sing;
    if (lowered == "plur") return FeatureValue::Plur;
    return std::nullopt;
}

std::optional<Pos> parse_pos(std::string_view upos) {
    if (upos == "NOUN") return Pos::Noun;
    if (upos == "ADJ") return Pos::Adj;
    if (upos == "DET") return Pos::Det;
    if (upos == "VERB") return Pos::Verb;
    if (upos == "AUX") return Pos::Aux;
    if (upos == "PRON") return Pos::Pron;
    return std::nullopt;
}

std::string_view to_string(Pos pos) {
    switch (pos) {
        case Pos::Noun: return "NOUN";
        case Pos::Adj: return "ADJ";
        case Pos::Det: return "DET";
        case Pos::Verb: return "VERB";
        case Pos::Aux: return "AUX";
        case Pos::Pron: return "PRON";
    }
    return "";
}

}  // namespace morphocause
