#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "polc/errors.hpp"
#include "polc/text.hpp"

namespace polc {

inline constexpr int kDefaultSegmentTokens = 300;

enum class SourceFormat { Plain, Html };

/// A policy document normalized to plain text: valid UTF-8, whitespace
/// collapsed to single spaces, nonempty.
struct PolicyDocument {
    std::string policy_id;
    std::string text;
    std::string source;               // provenance label (path, URL, ...), informational
    std::size_t utf8_replacements = 0;  // invalid bytes replaced with U+FFFD at ingest
};

/// A contiguous run of whole tokens from the document. Indices are assigned
/// in document order starting at 0.
struct Segment {
    int index = 0;
    std::string text;
    int token_count = 0;
};

namespace detail {

inline void decode_entity(std::string_view entity, std::string& out) {
    // `entity` is the text between '&' and ';'.
    if (entity.empty()) {
        out += "&;";
        return;
    }
    if (entity[0] == '#') {
        unsigned int code_point = 0;
        bool ok = entity.size() > 1;
        if (ok && (entity[1] == 'x' || entity[1] == 'X')) {
            ok = entity.size() > 2;
            for (std::size_t i = 2; ok && i < entity.size(); ++i) {
                const char c = to_lower_ascii(entity[i]);
                if (c >= '0' && c <= '9') code_point = code_point * 16 + static_cast<unsigned>(c - '0');
                else if (c >= 'a' && c <= 'f') code_point = code_point * 16 + static_cast<unsigned>(c - 'a' + 10);
                else ok = false;
                if (code_point > 0x10FFFF) ok = false;
            }
        } else {
            for (std::size_t i = 1; ok && i < entity.size(); ++i) {
                const char c = entity[i];
                if (c >= '0' && c <= '9') code_point = code_point * 10 + static_cast<unsigned>(c - '0');
                else ok = false;
                if (code_point > 0x10FFFF) ok = false;
            }
        }
        if (ok && code_point > 0 && !(code_point >= 0xD800 && code_point <= 0xDFFF)) {
            append_utf8(out, code_point);
        } else {
            out += '&';
            out += entity;
            out += ';';
        }
        return;
    }
    if (entity == "amp") out += '&';
    else if (entity == "lt") out += '<';
    else if (entity == "gt") out += '>';
    else if (entity == "quot") out += '"';
    else if (entity == "apos") out += '\'';
    else if (entity == "nbsp") out += ' ';
    else {
        out += '&';
        out += entity;
        out += ';';
    }
}

/// Basic tag stripping: drops <script>/<style> elements and comments whole,
/// replaces every other tag with a space, and decodes common entities.
inline std::string strip_html(std::string_view html) {
    std::string out;
    out.reserve(html.size());
    std::size_t i = 0;
    const std::size_t n = html.size();
    while (i < n) {
        const char c = html[i];
        if (c == '<') {
            if (ci_starts_with(html, i, "<!--")) {
                const std::size_t end = html.find("-->", i + 4);
                i = end == std::string_view::npos ? n : end + 3;
                out += ' ';
                continue;
            }
            auto element_end = [&](std::string_view close) {
                std::size_t j = i;
                while (j < n) {
                    if (html[j] == '<' && ci_starts_with(html, j, close)) {
                        const std::size_t gt = html.find('>', j);
                        return gt == std::string_view::npos ? n : gt + 1;
                    }
                    ++j;
                }
                return n;
            };
            if (ci_starts_with(html, i, "<script") &&
                (i + 7 >= n || !is_ascii_alnum(html[i + 7]))) {
                i = element_end("</script");
                out += ' ';
                continue;
            }
            if (ci_starts_with(html, i, "<style") && (i + 6 >= n || !is_ascii_alnum(html[i + 6]))) {
                i = element_end("</style");
                out += ' ';
                continue;
            }
            const std::size_t gt = html.find('>', i);
            i = gt == std::string_view::npos ? n : gt + 1;
            out += ' ';
            continue;
        }
        if (c == '&') {
            const std::size_t semi = html.find(';', i + 1);
            // Entities are short; a distant or missing ';' means a literal '&'.
            if (semi != std::string_view::npos && semi - i <= 10) {
                decode_entity(html.substr(i + 1, semi - i - 1), out);
                i = semi + 1;
                continue;
            }
            out += '&';
            ++i;
            continue;
        }
        out += c;
        ++i;
    }
    return out;
}

/// Splits collapsed text into sentences. A sentence ends at '.', '!' or '?'
/// followed by whitespace (or end of text); the terminator stays with the
/// sentence. Deliberately simple — abbreviations like "U.S." do split.
inline std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> sentences;
    std::string current;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        current.push_back(c);
        const bool terminator = c == '.' || c == '!' || c == '?';
        const bool at_boundary = i + 1 == text.size() || is_ascii_space(text[i + 1]);
        if (terminator && at_boundary) {
            const std::string sentence = trim(current);
            if (!sentence.empty()) sentences.push_back(sentence);
            current.clear();
        }
    }
    const std::string tail = trim(current);
    if (!tail.empty()) sentences.push_back(tail);
    return sentences;
}

}  // namespace detail

/// Normalizes raw bytes into a PolicyDocument: UTF-8 sanitized (lossy,
/// counted), HTML stripped when requested, whitespace collapsed. An empty
/// result is an IngestError — there is nothing to compile.
inline PolicyDocument ingest(std::string_view raw, SourceFormat format, std::string policy_id,
                             std::string source = "") {
    PolicyDocument document;
    document.policy_id = std::move(policy_id);
    document.source = std::move(source);
    std::string text = utf8_sanitize(raw, &document.utf8_replacements);
    if (format == SourceFormat::Html) text = detail::strip_html(text);
    document.text = collapse_whitespace(text);
    if (document.text.empty()) {
        throw IngestError("document \"" + document.policy_id + "\" is empty after normalization");
    }
    return document;
}

/// Splits a document into segments of at most `max_tokens` tokens (a token is
/// a whitespace-delimited run). Whole sentences are packed greedily; a single
/// sentence longer than `max_tokens` closes the open segment and is
/// hard-split at token boundaries into maximal chunks. Segments partition the
/// document's tokens in order.
inline std::vector<Segment> segment_document(const PolicyDocument& document,
                                             int max_tokens = kDefaultSegmentTokens) {
    if (max_tokens < 1) throw Error("max_tokens must be at least 1");
    std::vector<Segment> segments;
    std::string current;
    int current_tokens = 0;

    auto flush = [&] {
        if (current_tokens == 0) return;
        Segment segment;
        segment.index = static_cast<int>(segments.size());
        segment.text = std::move(current);
        segment.token_count = current_tokens;
        segments.push_back(std::move(segment));
        current.clear();
        current_tokens = 0;
    };

    for (const std::string& sentence : detail::split_sentences(document.text)) {
        const auto tokens = whitespace_tokens(sentence);
        const int count = static_cast<int>(tokens.size());
        if (count > max_tokens) {
            flush();
            std::size_t offset = 0;
            while (offset < tokens.size()) {
                const std::size_t take =
                    std::min(tokens.size() - offset, static_cast<std::size_t>(max_tokens));
                std::string chunk;
                for (std::size_t i = 0; i < take; ++i) {
                    if (i > 0) chunk += ' ';
                    chunk += tokens[offset + i];
                }
                current = std::move(chunk);
                current_tokens = static_cast<int>(take);
                flush();
                offset += take;
            }
            continue;
        }
        if (current_tokens + count > max_tokens) flush();
        if (!current.empty()) current += ' ';
        current += sentence;
        current_tokens += count;
    }
    flush();
    return segments;
}

}  // namespace polc
