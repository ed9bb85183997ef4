// Dotted section codes ("1.2.3", "A.1") and the parthood prefix rule.
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "normgraph/common.hpp"

namespace normgraph {

struct SectionCode {
    std::vector<std::string> segments;

    // Splits on '.'; every segment must be non-empty and alphanumeric.
    static std::optional<SectionCode> parse(std::string_view s) {
        if (s.empty()) return std::nullopt;
        SectionCode code;
        size_t b = 0;
        for (size_t i = 0; i <= s.size(); ++i) {
            if (i == s.size() || s[i] == '.') {
                if (i == b) return std::nullopt;
                std::string_view seg = s.substr(b, i - b);
                for (char c : seg)
                    if (!is_alnum(c)) return std::nullopt;
                code.segments.emplace_back(seg);
                b = i + 1;
            }
        }
        return code;
    }

    std::string str() const { return join(segments, "."); }

    bool operator==(const SectionCode& other) const = default;
};

// True iff `parent` is a strict prefix of `child` with exactly one fewer
// segment. (The single-extra-character reading breaks for multi-digit
// segments like "1.2.10", so the rule is segment based.)
inline bool is_parent_code(const SectionCode& parent, const SectionCode& child) {
    if (child.segments.size() != parent.segments.size() + 1) return false;
    for (size_t i = 0; i < parent.segments.size(); ++i)
        if (parent.segments[i] != child.segments[i]) return false;
    return true;
}

namespace detail {

// Segment order used by heading plausibility: numeric segments by value,
// then lettered segments ("A" < "B", annexes follow numbered clauses).
inline bool segment_greater(const std::string& a, const std::string& b) {
    auto key = [](const std::string& s) {
        std::string alpha;
        unsigned long long num = 0;
        bool has_num = false;
        for (char c : s) {
            if (std::isdigit(static_cast<unsigned char>(c))) {
                num = num * 10 + static_cast<unsigned long long>(c - '0');
                has_num = true;
            } else {
                alpha.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
            }
        }
        return std::tuple<std::string, bool, unsigned long long>(alpha, has_num, num);
    };
    return key(a) > key(b);
}

}  // namespace detail

// Heading-sequence plausibility: `next` may follow `prev` when it is a
// child of prev, or a greater sibling of prev or of one of prev's
// ancestors. Rejects in-body false positives like "see 3.1" deep inside
// clause 7.
inline bool is_plausible_successor(const SectionCode& prev, const SectionCode& next) {
    if (is_parent_code(prev, next)) return true;
    for (size_t len = 1; len <= prev.segments.size(); ++len) {
        if (next.segments.size() != len) continue;
        bool prefix_equal = true;
        for (size_t i = 0; i + 1 < len; ++i) {
            if (next.segments[i] != prev.segments[i]) {
                prefix_equal = false;
                break;
            }
        }
        if (prefix_equal && detail::segment_greater(next.segments[len - 1], prev.segments[len - 1]))
            return true;
    }
    return false;
}

}  // namespace normgraph
