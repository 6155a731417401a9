#pragma once

#include <cctype>
#include <string>
#include <vector>

// Minimal XML well-formedness check: prolog, matched/nested tags, quoted
// attribute values, self-closing tags. Not a full parser — enough to catch a
// malformed generator.
inline bool xml_well_formed(const std::string& text, std::string* error = nullptr) {
    const auto fail = [&](const std::string& msg) {
        if (error) *error = msg;
        return false;
    };
    std::vector<std::string> stack;
    std::size_t i = 0;
    const std::size_t n = text.size();
    bool seen_element = false;
    while (i < n) {
        if (text[i] != '<') {
            if (text[i] == '>') return fail("stray '>'");
            if (text[i] == '&') {
                auto semi = text.find(';', i);
                if (semi == std::string::npos || semi - i > 8) return fail("bad entity");
                i = semi;
            }
            ++i;
            continue;
        }
        if (text.compare(i, 2, "<?") == 0) {
            auto end = text.find("?>", i);
            if (end == std::string::npos) return fail("unterminated prolog");
            i = end + 2;
            continue;
        }
        if (text.compare(i, 4, "<!--") == 0) {
            auto end = text.find("-->", i);
            if (end == std::string::npos) return fail("unterminated comment");
            i = end + 3;
            continue;
        }
        const bool closing = i + 1 < n && text[i + 1] == '/';
        std::size_t p = i + (closing ? 2 : 1);
        std::size_t name_start = p;
        while (p < n && (std::isalnum(static_cast<unsigned char>(text[p])) || text[p] == ':' ||
                         text[p] == '_' || text[p] == '-'))
            ++p;
        if (p == name_start) return fail("empty tag name");
        const std::string name = text.substr(name_start, p - name_start);

        // scan attributes until '>' or '/>'
        bool self_closing = false;
        while (p < n && text[p] != '>') {
            if (text[p] == '"') {
                auto endq = text.find('"', p + 1);
                if (endq == std::string::npos) return fail("unterminated attribute value");
                p = endq + 1;
                continue;
            }
            if (text[p] == '/' && p + 1 < n && text[p + 1] == '>') {
                self_closing = true;
                ++p;
                break;
            }
            if (text[p] == '<') return fail("nested '<'");
            ++p;
        }
        if (p >= n) return fail("unterminated tag");
        if (closing) {
            if (self_closing) return fail("closing tag cannot self-close");
            if (stack.empty() || stack.back() != name)
                return fail("mismatched closing tag " + name);
            stack.pop_back();
        } else if (!self_closing) {
            stack.push_back(name);
            seen_element = true;
        } else {
            seen_element = true;
        }
        i = p + 1;
    }
    if (!stack.empty()) return fail("unclosed tag " + stack.back());
    if (!seen_element) return fail("no elements");
    return true;
}
