// Shared low-level utilities: errors, logging, string helpers, hashing,
// file IO and a minimal parallel-for.
#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace normgraph {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Distinguished failure classes so the CLI can map them to exit codes.
class VersionMismatchError : public Error {
public:
    using Error::Error;
};

class StaleIndexError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Logging (stderr only; data goes to stdout/files)
// ---------------------------------------------------------------------------

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

inline LogLevel& log_level() {
    static LogLevel level = LogLevel::warn;
    return level;
}

inline LogLevel parse_log_level(std::string_view s) {
    if (s == "debug") return LogLevel::debug;
    if (s == "info") return LogLevel::info;
    if (s == "warn") return LogLevel::warn;
    if (s == "error") return LogLevel::error;
    if (s == "off") return LogLevel::off;
    throw ConfigError("unknown log level: " + std::string(s));
}

inline void log_at(LogLevel level, const char* tag, const std::string& msg) {
    if (level < log_level()) return;
    std::fprintf(stderr, "[%s] %s\n", tag, msg.c_str());
}

inline void log_debug(const std::string& msg) { log_at(LogLevel::debug, "debug", msg); }
inline void log_info(const std::string& msg) { log_at(LogLevel::info, "info", msg); }
inline void log_warn(const std::string& msg) { log_at(LogLevel::warn, "warn", msg); }
inline void log_error(const std::string& msg) { log_at(LogLevel::error, "error", msg); }

// ---------------------------------------------------------------------------
// String helpers
// ---------------------------------------------------------------------------

inline bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_alnum(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

// Collapses every run of whitespace to a single space and trims the ends.
inline std::string normalize_ws(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_ws = true;  // leading whitespace dropped
    for (char c : s) {
        if (is_space(c)) {
            in_ws = true;
        } else {
            if (in_ws && !out.empty()) out.push_back(' ');
            out.push_back(c);
            in_ws = false;
        }
    }
    return out;
}

// Whitespace-delimited tokens.
inline std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        size_t b = i;
        while (i < s.size() && !is_space(s[i])) ++i;
        if (i > b) out.emplace_back(s.substr(b, i - b));
    }
    return out;
}

// Byte offsets [begin, end) of each whitespace-delimited token.
inline std::vector<std::pair<size_t, size_t>> word_spans(std::string_view s) {
    std::vector<std::pair<size_t, size_t>> out;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        size_t b = i;
        while (i < s.size() && !is_space(s[i])) ++i;
        if (i > b) out.emplace_back(b, i);
    }
    return out;
}

template <typename It>
std::string join(It begin, It end, std::string_view sep) {
    std::string out;
    for (It it = begin; it != end; ++it) {
        if (it != begin) out += sep;
        out += *it;
    }
    return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    return join(parts.begin(), parts.end(), sep);
}

// ---------------------------------------------------------------------------
// FNV-1a 64-bit
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = kFnvOffset) {
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

// ---------------------------------------------------------------------------
// File IO
// ---------------------------------------------------------------------------

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("short write: " + path.string());
}

// ---------------------------------------------------------------------------
// Parallel for
// ---------------------------------------------------------------------------

inline unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Runs fn(i) for i in [0, n). Results must be written to independent slots;
// item order of execution is unspecified but every index runs exactly once.
template <typename Fn>
void parallel_for(size_t n, unsigned threads, Fn&& fn) {
    threads = resolve_threads(threads);
    if (n == 0) return;
    if (threads <= 1 || n == 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    unsigned count = static_cast<unsigned>(std::min<size_t>(threads, n));
    pool.reserve(count);
    for (unsigned t = 0; t < count; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= n || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace normgraph
