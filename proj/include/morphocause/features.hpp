#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace morphocause {

enum class Feature { Gender, Number };

enum class FeatureValue { Masc, Fem, Sing, Plur };

/// The two values of a feature, ordered by the fixed effect convention:
/// estimates are always "positive pole minus negative pole" (Masc-Fem, Sing-Plur).
FeatureValue positive_pole(Feature feature);
FeatureValue negative_pole(Feature feature);
bool is_positive_pole(FeatureValue value);

Feature feature_of(FeatureValue value);
FeatureValue opposite(FeatureValue value);

/// UD spelling: "Gender", "Number", "Masc", ...
std::string_view to_string(Feature feature);
std::string_view to_string(FeatureValue value);
/// "Masc-Fem" / "Sing-Plur".
std::string convention_label(Feature feature);

/// Accepts UD spelling or lowercase ("gender").
std::optional<Feature> parse_feature(std::string_view text);
std::optional<FeatureValue> parse_feature_value(std::string_view text);

enum class Pos { Noun, Adj, Det, Verb, Aux, Pron };

std::optional<Pos> parse_pos(std::string_view upos);
std::string_view to_string(Pos pos);

}  // namespace morphocause
