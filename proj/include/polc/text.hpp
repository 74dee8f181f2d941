#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "polc/errors.hpp"

namespace polc {

inline bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_ascii_alnum(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

inline char to_lower_ascii(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::string lower_ascii(std::string_view text) {
    std::string out(text);
    for (char& c : out) c = to_lower_ascii(c);
    return out;
}

/// Collapses every whitespace run to a single space and trims both ends.
inline std::string collapse_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (is_ascii_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    return out;
}

inline std::string trim(std::string_view text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && is_ascii_space(text[begin])) ++begin;
    while (end > begin && is_ascii_space(text[end - 1])) --end;
    return std::string(text.substr(begin, end - begin));
}

/// A token is a maximal run of non-whitespace bytes.
inline std::vector<std::string_view> whitespace_tokens(std::string_view text) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && is_ascii_space(text[i])) ++i;
        std::size_t start = i;
        while (i < n && !is_ascii_space(text[i])) ++i;
        if (i > start) tokens.push_back(text.substr(start, i - start));
    }
    return tokens;
}

inline std::size_t token_count(std::string_view text) {
    std::size_t count = 0;
    bool in_token = false;
    for (char c : text) {
        if (is_ascii_space(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

/// Case-folds and collapses whitespace; used when matching quoted excerpts
/// against segment text.
inline std::string normalize_for_match(std::string_view text) {
    return lower_ascii(collapse_whitespace(text));
}

namespace detail {

inline bool ci_starts_with(std::string_view text, std::size_t pos, std::string_view word) {
    if (pos + word.size() > text.size()) return false;
    for (std::size_t i = 0; i < word.size(); ++i) {
        if (to_lower_ascii(text[pos + i]) != to_lower_ascii(word[i])) return false;
    }
    return true;
}

}  // namespace detail

inline bool is_kebab_case(std::string_view id) {
    if (id.empty()) return false;
    bool last_was_hyphen = true;  // a leading hyphen is invalid
    for (char c : id) {
        if (c == '-') {
            if (last_was_hyphen) return false;
            last_was_hyphen = true;
        } else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
            last_was_hyphen = false;
        } else {
            return false;
        }
    }
    return !last_was_hyphen;
}

/// Normalizes a raw name to lowercase kebab-case: ASCII-lowercases, turns
/// whitespace and underscores into hyphens, collapses hyphen runs, trims
/// hyphens. The result must be valid kebab-case or a SchemaError is thrown.
inline std::string normalize_identifier(std::string_view raw, const std::string& path) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        char lower = to_lower_ascii(c);
        if (is_ascii_space(lower) || lower == '_') lower = '-';
        if (lower == '-' && (out.empty() || out.back() == '-')) continue;
        out.push_back(lower);
    }
    while (!out.empty() && out.back() == '-') out.pop_back();
    if (!is_kebab_case(out)) {
        throw SchemaError(path, "identifier \"" + std::string(raw) +
                                    "\" does not normalize to lowercase kebab-case");
    }
    return out;
}

/// Decodes `bytes` as UTF-8, replacing every invalid byte with U+FFFD.
/// The number of replacements is reported through `replacements` if given.
inline std::string utf8_sanitize(std::string_view bytes, std::size_t* replacements = nullptr) {
    static constexpr std::string_view kReplacement = "\xEF\xBF\xBD";
    std::string out;
    out.reserve(bytes.size());
    std::size_t replaced = 0;
    std::size_t i = 0;
    const std::size_t n = bytes.size();
    while (i < n) {
        const unsigned char lead = static_cast<unsigned char>(bytes[i]);
        if (lead < 0x80) {
            out.push_back(static_cast<char>(lead));
            ++i;
            continue;
        }
        int length = 0;
        unsigned int code_point = 0;
        if ((lead & 0xE0) == 0xC0) {
            length = 2;
            code_point = lead & 0x1Fu;
        } else if ((lead & 0xF0) == 0xE0) {
            length = 3;
            code_point = lead & 0x0Fu;
        } else if ((lead & 0xF8) == 0xF0) {
            length = 4;
            code_point = lead & 0x07u;
        }
        bool valid = length > 0 && i + static_cast<std::size_t>(length) <= n;
        for (int j = 1; valid && j < length; ++j) {
            const unsigned char cont = static_cast<unsigned char>(bytes[i + static_cast<std::size_t>(j)]);
            if ((cont & 0xC0) != 0x80) {
                valid = false;
            } else {
                code_point = (code_point << 6) | (cont & 0x3Fu);
            }
        }
        if (valid) {
            if (length == 2 && code_point < 0x80) valid = false;
            if (length == 3 && code_point < 0x800) valid = false;
            if (length == 4 && code_point < 0x10000) valid = false;
            if (code_point >= 0xD800 && code_point <= 0xDFFF) valid = false;
            if (code_point > 0x10FFFF) valid = false;
        }
        if (valid) {
            out.append(bytes.substr(i, static_cast<std::size_t>(length)));
            i += static_cast<std::size_t>(length);
        } else {
            out.append(kReplacement);
            ++i;
            ++replaced;
        }
    }
    if (replacements) *replacements = replaced;
    return out;
}

/// Encodes a code point as UTF-8 and appends it to `out`.
inline void append_utf8(std::string& out, unsigned int code_point) {
    if (code_point < 0x80) {
        out.push_back(static_cast<char>(code_point));
    } else if (code_point < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (code_point >> 6)));
        out.push_back(static_cast<char>(0x80 | (code_point & 0x3F)));
    } else if (code_point < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (code_point >> 12)));
        out.push_back(static_cast<char>(0x80 | ((code_point >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (code_point & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (code_point >> 18)));
        out.push_back(static_cast<char>(0x80 | ((code_point >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((code_point >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (code_point & 0x3F)));
    }
}

}  // namespace polc
