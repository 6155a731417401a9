#pragma once

#include <array>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "sfc/common.hpp"
#include "sfc/corpus.hpp"

namespace sfc {

using TokenSequence = std::vector<std::string>;

struct StopwordList {
    std::unordered_set<std::string> words;

    bool contains(const std::string& tok) const { return words.count(tok) != 0; }
};

// One lowercase token per line, '#' starts a comment.
inline StopwordList load_stopwords(const std::filesystem::path& path) {
    StopwordList list;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open stopword file: " + path.string());
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto content = trim(line);
        if (content.empty() || content.front() == '#') continue;
        list.words.insert(std::string(content));
    }
    return list;
}

namespace utf8 {

// Decodes the codepoint at p (p < end). Malformed bytes are passed through
// one byte at a time rather than rejected.
inline char32_t decode(const char*& p, const char* end) {
    const auto byte = [&](int i) { return static_cast<unsigned char>(p[i]); };
    unsigned char b0 = byte(0);
    if (b0 < 0x80) {
        p += 1;
        return b0;
    }
    auto cont = [&](int i) { return p + i < end && (byte(i) & 0xC0) == 0x80; };
    if ((b0 & 0xE0) == 0xC0 && cont(1)) {
        char32_t cp = ((b0 & 0x1Fu) << 6) | (byte(1) & 0x3Fu);
        p += 2;
        return cp;
    }
    if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
        char32_t cp = ((b0 & 0x0Fu) << 12) | ((byte(1) & 0x3Fu) << 6) | (byte(2) & 0x3Fu);
        p += 3;
        return cp;
    }
    if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
        char32_t cp = ((b0 & 0x07u) << 18) | ((byte(1) & 0x3Fu) << 12) |
                      ((byte(2) & 0x3Fu) << 6) | (byte(3) & 0x3Fu);
        p += 4;
        return cp;
    }
    p += 1;
    return b0;  // treat stray byte as Latin-1
}

inline void encode(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

// Lowercase mapping covering ASCII plus the Latin blocks the Vietnamese
// alphabet lives in (Latin-1, Extended-A, O/U-horn, Extended Additional).
inline char32_t to_lower(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 32;
    if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 0x20;
    if (cp >= 0x0100 && cp <= 0x0137 && (cp % 2) == 0) return cp + 1;
    if (cp == 0x0168 || cp == 0x01A0 || cp == 0x01AF) return cp + 1;
    if (cp >= 0x1E00 && cp <= 0x1E95 && (cp % 2) == 0) return cp + 1;
    if (cp >= 0x1EA0 && cp <= 0x1EF9 && (cp % 2) == 0) return cp + 1;
    return cp;
}

inline bool is_symbol_or_punct(char32_t cp) {
    return (cp >= 0x2000 && cp <= 0x2BFF) ||   // punctuation, arrows, math, dingbats
           (cp >= 0x2E00 && cp <= 0x2E7F) ||
           (cp >= 0x3000 && cp <= 0x303F) ||
           (cp >= 0xFE00 && cp <= 0xFE4F) ||   // variation selectors
           (cp >= 0x1F000 && cp <= 0x1FBFF);   // emoji and friends
}

inline bool is_letter(char32_t cp) {
    if (cp < 0x80) return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    if (cp < 0xC0) return false;  // Latin-1 punctuation and signs
    if (cp == 0x00D7 || cp == 0x00F7) return false;
    return !is_symbol_or_punct(cp);
}

}  // namespace utf8

inline std::string lowercase_utf8(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    const char* p = s.data();
    const char* end = s.data() + s.size();
    while (p < end) utf8::encode(out, utf8::to_lower(utf8::decode(p, end)));
    return out;
}

inline bool contains_letter(std::string_view tok) {
    const char* p = tok.data();
    const char* end = tok.data() + tok.size();
    while (p < end)
        if (utf8::is_letter(utf8::decode(p, end))) return true;
    return false;
}

// ASCII emoticons that survive the "contains a letter" test.
inline bool is_emoticon(const std::string& tok) {
    static const std::unordered_set<std::string> table = {
        ":)",  ":-)", ":))", ":(",  ":-(", ":((", ";)",  ";-)", ":d",  ":-d",
        ":p",  ":-p", ":v",  ":3",  ":o",  ":-o", ":|",  ":/",  ":-/", "=)",
        "=))", "=(",  "=((", ":'(", "^^",  "^_^", "<3",  "-_-", "t.t",
    };
    return table.count(tok) != 0;
}

// Whitespace split plus lowercasing. Underscore-joined compounds from word
// segmentation ("giảng_viên") stay intact.
inline TokenSequence tokenize(std::string_view text) {
    TokenSequence tokens;
    std::size_t i = 0;
    const auto is_space = [](char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
    };
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (i > start) tokens.push_back(lowercase_utf8(text.substr(start, i - start)));
    }
    return tokens;
}

// Order-preserving filter: drops emoticons, tokens without a letter (pure
// digits, punctuation, emoji) and stopwords. Idempotent by construction.
inline TokenSequence clean(const TokenSequence& tokens, const StopwordList& stopwords) {
    TokenSequence out;
    out.reserve(tokens.size());
    for (const auto& tok : tokens) {
        if (tok.empty()) continue;
        if (is_emoticon(tok)) continue;
        if (!contains_letter(tok)) continue;
        if (stopwords.contains(tok)) continue;
        out.push_back(tok);
    }
    return out;
}

inline TokenSequence preprocess_text(std::string_view text, const StopwordList& stopwords) {
    return clean(tokenize(text), stopwords);
}

// Every record keeps an entry; records reduced to nothing stay as empty
// sequences so label alignment is preserved downstream.
inline std::map<std::string, TokenSequence> preprocess_corpus(const Corpus& corpus,
                                                              const StopwordList& stopwords) {
    std::map<std::string, TokenSequence> out;
    for (const auto& rec : corpus.records)
        out[rec.id] = preprocess_text(rec.text, stopwords);
    return out;
}

inline std::vector<std::string> empty_after_preprocess(
    const std::map<std::string, TokenSequence>& tokens) {
    std::vector<std::string> ids;
    for (const auto& [id, seq] : tokens)
        if (seq.empty()) ids.push_back(id);
    return ids;
}

}  // namespace sfc
