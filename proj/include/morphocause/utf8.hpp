#pragma once

#include <string>
#include <string_view>

namespace morphocause::utf8 {

// Decoding throws std::invalid_argument on malformed input.
std::u32string decode(std::string_view text);
std::string encode(std::u32string_view text);

// Case mapping covers ASCII and the Latin-1 letters used in Spanish.
char32_t to_lower(char32_t c);
char32_t to_upper(char32_t c);
std::string to_lower(std::string_view text);
std::u32string to_lower(std::u32string_view text);

bool is_upper(char32_t c);
bool is_lower(char32_t c);

enum class Casing { Lower, Capitalized, Upper };

Casing casing_of(std::u32string_view text);
std::u32string apply_casing(std::u32string_view lowered, Casing casing);

}  // namespace morphocause::utf8
