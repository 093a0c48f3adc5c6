#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace hopir {

namespace utf8 {

inline constexpr char32_t invalid = 0xFFFFFFFF;

/// Decodes one code point starting at `pos`; advances `pos`. Malformed bytes
/// decode to `invalid` and consume a single byte.
inline char32_t decode(std::string_view s, std::size_t& pos)
{
    auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
    unsigned char c0 = byte(pos);
    if (c0 < 0x80) {
        ++pos;
        return c0;
    }
    int len = 0;
    char32_t cp = 0;
    if ((c0 & 0xE0) == 0xC0) {
        len = 2;
        cp = c0 & 0x1F;
    } else if ((c0 & 0xF0) == 0xE0) {
        len = 3;
        cp = c0 & 0x0F;
    } else if ((c0 & 0xF8) == 0xF0) {
        len = 4;
        cp = c0 & 0x07;
    } else {
        ++pos;
        return invalid;
    }
    if (pos + len > s.size()) {
        ++pos;
        return invalid;
    }
    for (int i = 1; i < len; ++i) {
        unsigned char c = byte(pos + i);
        if ((c & 0xC0) != 0x80) {
            ++pos;
            return invalid;
        }
        cp = (cp << 6) | (c & 0x3F);
    }
    pos += len;
    return cp;
}

inline void append(std::string& out, char32_t cp)
{
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

}  // namespace utf8

/// Simple case folding for Latin, Greek and Cyrillic; other scripts are left
/// unchanged.
inline char32_t to_lower(char32_t c)
{
    if (c >= 'A' && c <= 'Z') {
        return c + 32;
    }
    if (c < 0x80) {
        return c;
    }
    if (c >= 0xC0 && c <= 0xDE && c != 0xD7) {
        return c + 32;
    }
    if ((c >= 0x100 && c <= 0x137) || (c >= 0x14A && c <= 0x177)) {
        return (c % 2 == 0) ? c + 1 : c;
    }
    if ((c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E)) {
        return (c % 2 == 1) ? c + 1 : c;
    }
    if (c == 0x178) {
        return 0xFF;
    }
    if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) {
        return c + 32;
    }
    if (c >= 0x410 && c <= 0x42F) {
        return c + 32;
    }
    if (c >= 0x400 && c <= 0x40F) {
        return c + 80;
    }
    return c;
}

inline bool is_upper(char32_t c) { return to_lower(c) != c; }

/// Token characters: ASCII letters and digits, plus any non-ASCII code point
/// outside the punctuation, symbol and space blocks.
inline bool is_token_char(char32_t c)
{
    if (c < 0x80) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
    }
    if (c == utf8::invalid || c <= 0xBF || c == 0xD7 || c == 0xF7) {
        return false;
    }
    if ((c >= 0x2000 && c <= 0x2BFF) || (c >= 0x2E00 && c <= 0x2E7F) || (c >= 0x3000 && c <= 0x303F)
        || (c >= 0xFE30 && c <= 0xFE4F) || (c >= 0xFF00 && c <= 0xFF0F) || (c >= 0xFF1A && c <= 0xFF20)
        || c == 0xFEFF) {
        return false;
    }
    return true;
}

/// Stopword list; only consulted where a rule asks for it (the capitalization
/// tagger, optional query stopping).
inline const std::set<std::string, std::less<>>& default_stopwords()
{
    static const std::set<std::string, std::less<>> words{
        "a",    "about", "after", "all",   "also",  "an",    "and",   "are",   "as",    "at",    "be",
        "been", "but",   "by",    "can",   "did",   "do",    "does",  "for",   "from",  "had",   "has",
        "have", "he",    "her",   "his",   "how",   "i",     "if",    "in",    "into",  "is",    "it",
        "its",  "many",  "more",  "most",  "no",    "not",   "of",    "on",    "one",   "or",    "other",
        "our",  "she",   "so",    "some",  "than",  "that",  "the",   "their", "them",  "then",  "there",
        "these", "they", "this",  "those", "to",    "was",   "we",    "were",  "what",  "when",  "where",
        "which", "while", "who",  "whom",  "whose", "why",   "will",  "with",  "would", "you",   "your"};
    return words;
}

struct TokenizerConfig {
    /// Drop stopwords from query token streams. Never applied to passage text.
    bool stop_queries = false;
    std::set<std::string, std::less<>> stopwords = default_stopwords();

    [[nodiscard]] bool is_stopword(std::string_view token) const { return stopwords.contains(token); }
};

/// A token with its byte range in the original text.
struct TokenSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    std::string token;  // lowercased
    bool capitalized = false;
};

inline std::vector<TokenSpan> tokenize_spans(std::string_view text)
{
    std::vector<TokenSpan> out;
    std::size_t pos = 0;
    TokenSpan cur;
    bool in_token = false;
    while (pos < text.size()) {
        std::size_t here = pos;
        char32_t cp = utf8::decode(text, pos);
        if (is_token_char(cp)) {
            if (!in_token) {
                cur = TokenSpan{here, here, {}, is_upper(cp)};
                in_token = true;
            }
            utf8::append(cur.token, to_lower(cp));
            cur.end = pos;
        } else if (in_token) {
            out.push_back(std::move(cur));
            in_token = false;
        }
    }
    if (in_token) {
        out.push_back(std::move(cur));
    }
    return out;
}

/// Lowercased alphanumeric token stream. No stemming, no stopping.
inline std::vector<std::string> tokenize(std::string_view text)
{
    std::vector<std::string> out;
    for (auto& span : tokenize_spans(text)) {
        out.push_back(std::move(span.token));
    }
    return out;
}

inline std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config)
{
    (void)config;
    return tokenize(text);
}

/// Query-side tokenization; applies stopping when configured.
inline std::vector<std::string> tokenize_query(std::string_view text, const TokenizerConfig& config)
{
    auto tokens = tokenize(text);
    if (config.stop_queries) {
        std::erase_if(tokens, [&](const std::string& t) { return config.is_stopword(t); });
    }
    return tokens;
}

inline std::string join(const std::vector<std::string>& tokens, std::string_view sep = " ")
{
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) {
            out += sep;
        }
        out += tokens[i];
    }
    return out;
}

/// Alias-key normalization: tokenize and rejoin with single spaces.
inline std::string normalize(std::string_view text) { return join(tokenize(text)); }

}  // namespace hopir
