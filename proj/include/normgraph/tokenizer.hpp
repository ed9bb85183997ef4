// Lexical tokenizer shared by the sparse index and the deterministic
// embedder: lowercase alphanumeric runs, plus dotted section codes
// ("7.2", "A.1.2") emitted as one extra compound term so that clause
// references are matchable as units.
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "normgraph/common.hpp"

namespace normgraph {

namespace detail {

// Matches a maximal dotted code starting at `pos`: [0-9]+(\.[0-9]+)+ or
// [A-Za-z](\.[0-9]+)+. Returns its length, or 0 if none starts here.
inline size_t match_dotted_code(std::string_view s, size_t pos) {
    size_t i = pos;
    if (i >= s.size()) return 0;
    if (std::isdigit(static_cast<unsigned char>(s[i]))) {
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    } else if (std::isalpha(static_cast<unsigned char>(s[i]))) {
        ++i;
    } else {
        return 0;
    }
    size_t segments = 1;
    while (i < s.size() && s[i] == '.') {
        size_t j = i + 1;
        size_t digits = 0;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
            ++j;
            ++digits;
        }
        if (digits == 0) break;
        i = j;
        ++segments;
    }
    if (segments < 2) return 0;
    return i - pos;
}

// Greedy left-to-right scan for maximal dotted codes; spans do not overlap.
inline std::vector<std::pair<size_t, size_t>> dotted_code_spans(std::string_view s) {
    std::vector<std::pair<size_t, size_t>> spans;
    size_t i = 0;
    while (i < s.size()) {
        size_t len = match_dotted_code(s, i);
        if (len > 0) {
            spans.emplace_back(i, i + len);
            i += len;
        } else {
            ++i;
        }
    }
    return spans;
}

}  // namespace detail

// Lowercases, splits on non-alphanumerics, and additionally emits every
// maximal dotted code as one compound term right after its parts.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    const auto codes = detail::dotted_code_spans(text);
    size_t ci = 0;
    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        while (i < n && !is_alnum(text[i])) ++i;
        size_t b = i;
        while (i < n && is_alnum(text[i])) ++i;
        if (i > b) out.push_back(to_lower(text.substr(b, i - b)));
        while (ci < codes.size() && codes[ci].second <= i) {
            out.push_back(to_lower(text.substr(codes[ci].first, codes[ci].second - codes[ci].first)));
            ++ci;
        }
    }
    return out;
}

}  // namespace normgraph
