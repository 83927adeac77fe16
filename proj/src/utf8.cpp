#include "morphocause/utf8.hpp"

#include <stdexcept>

namespace morphocause::utf8 {

std::u32string decode(std::string_view text) {
    std::u32string out;
    out.reserve(text.size());
    size_t i = 0;
    while (i < text.size()) {
        auto lead = static_cast<unsigned char>(text[i]);
        char32_t cp = 0;
        size_t len = 0;
        if (lead < 0x80) {
            cp = lead;
            len = 1;
        } else if ((lead & 0xE0) == 0xC0) {
            cp = lead & 0x1F;
            len = 2;
        } else if ((lead & 0xF0) == 0xE0) {
            cp = lead & 0x0F;
            len = 3;
        } else if ((lead & 0xF8) == 0xF0) {
            cp = lead & 0x07;
            len = 4;
        } else {
            throw std::invalid_argument("invalid UTF-8 lead byte");
        }
        if (i + len > text.size()) throw std::invalid_argument("truncated UTF-8 sequence");
        for (size_t k = 1; k < len; ++k) {
            auto b = static_cast<unsigned char>(text[i + k]);
            if ((b & 0xC0) != 0x80) throw std::invalid_argument("invalid UTF-8 continuation byte");
            cp = (cp << 6) | (b & 0x3F);
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string encode(std::u32string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char32_t cp : text) {
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
    }
    return out;
}

// Latin-1 supplement: U+00C0..U+00DE map to +0x20, except U+00D7 (multiplication sign).
bool is_upper(char32_t c) {
    return (c >= U'A' && c <= U'Z') || (c >= 0xC0 && c <= 0xDE && c != 0xD7);
}

bool is_lower(char32_t c) {
    return (c >= U'a' && c <= U'z') || (c >= 0xDF && c <= 0xFF && c != 0xF7);
}

char32_t to_lower(char32_t c) { return is_upper(c) ? c + 0x20 : c; }

char32_t to_upper(char32_t c) {
    if ((c >= U'a' && c <= U'z') || (c >= 0xE0 && c <= 0xFE && c != 0xF7)) return c - 0x20;
    return c;
}

std::u32string to_lower(std::u32string_view text) {
    std::u32string out(text);
    for (auto& c : out) c = to_lower(c);
    return out;
}

std::string to_lower(std::string_view text) { return encode(to_lower(decode(text))); }

Casing casing_of(std::u32string_view text) {
    bool any_letter = false;
    bool all_upper = true;
    for (char32_t c : text) {
        if (is_upper(c) || is_lower(c)) {
            any_letter = true;
            if (!is_upper(c)) all_upper = false;
        }
    }
    // A single capital letter ("A") reads as capitalized, not all-caps.
    if (any_letter && all_upper && text.size() > 1) return Casing::Upper;
    if (!text.empty() && is_upper(text.front())) return Casing::Capitalized;
    return Casing::Lower;
}

std::u32string apply_casing(std::u32string_view lowered, Casing casing) {
    std::u32string out(lowered);
    switch (casing) {
        case Casing::Lower:
            break;
        case Casing::Capitalized:
            if (!out.empty()) out.front() = to_upper(out.front());
            break;
        case Casing::Upper:
            for (auto& c : out) c = to_upper(c);
            break;
    }
    return out;
}

}  // namespace morphocause::utf8
