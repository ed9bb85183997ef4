// Deterministic random generators for property tests. Everything here is
// seeded and hand-rolled (no std::uniform_int_distribution) so test data
// is identical on every platform.
#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "normgraph/graph.hpp"
#include "normgraph/manifest.hpp"

namespace ngtest {

struct Rng {
    std::mt19937_64 eng;

    explicit Rng(std::uint64_t seed) : eng(seed) {}

    std::uint64_t next() { return eng(); }
    size_t below(size_t n) { return n == 0 ? 0 : static_cast<size_t>(eng() % n); }
    size_t in(size_t lo, size_t hi) { return lo + below(hi - lo + 1); }  // inclusive
    double real01() { return static_cast<double>(eng() >> 11) / 9007199254740992.0; }
    bool chance(double p) { return real01() < p; }

    template <typename T>
    const T& pick(const std::vector<T>& v) {
        return v[below(v.size())];
    }
};

inline std::string random_word(Rng& rng, size_t min_len = 3, size_t max_len = 9) {
    size_t len = rng.in(min_len, max_len);
    std::string w;
    for (size_t i = 0; i < len; ++i) w.push_back(static_cast<char>('a' + rng.below(26)));
    return w;
}

inline std::vector<std::string> random_vocab(Rng& rng, size_t n) {
    std::vector<std::string> v;
    for (size_t i = 0; i < n; ++i) v.push_back(random_word(rng));
    return v;
}

inline std::string random_sentence(Rng& rng, const std::vector<std::string>& vocab,
                                   bool with_modal = false, size_t min_words = 5,
                                   size_t max_words = 14) {
    static const std::vector<std::string> kModals = {"shall", "must", "should", "may", "will"};
    size_t n = rng.in(min_words, max_words);
    std::vector<std::string> words;
    for (size_t i = 0; i < n; ++i) words.push_back(rng.pick(vocab));
    if (with_modal) words[rng.below(words.size())] = rng.pick(kModals);
    std::string s;
    for (size_t i = 0; i < words.size(); ++i) {
        if (i) s += ' ';
        s += i == 0 && !words[i].empty()
                 ? static_cast<char>(std::toupper(static_cast<unsigned char>(words[i][0]))) +
                       words[i].substr(1)
                 : words[i];
    }
    s += '.';
    return s;
}

// Random frozen graph: a parthood forest over `docs` documents plus
// `extra_citations` random non-self citation edges.
inline normgraph::InfoGraph random_graph(Rng& rng, size_t docs, size_t max_nodes,
                                         size_t extra_citations) {
    normgraph::InfoGraph g;
    std::vector<std::string> ids;
    std::vector<std::vector<std::string>> per_doc(docs);
    for (size_t d = 0; d < docs; ++d) {
        std::string doc_id = "doc" + std::to_string(d);
        normgraph::InfoUnit root;
        root.id = doc_id;
        root.doc_id = doc_id;
        root.title = "Document " + std::to_string(d);
        root.kind = normgraph::NodeKind::document;
        g.add_node(root);
        ids.push_back(doc_id);
        per_doc[d].push_back(doc_id);
    }
    size_t total = docs + rng.below(max_nodes - docs + 1);
    size_t seq = 0;
    while (ids.size() < total) {
        size_t d = rng.below(docs);
        std::string parent = rng.pick(per_doc[d]);
        std::string tag = "s" + std::to_string(seq++);
        normgraph::InfoUnit u;
        u.id = "doc" + std::to_string(d) + "#" + tag;
        u.doc_id = "doc" + std::to_string(d);
        u.section_code = tag;
        u.title = "Section " + tag;
        u.body = "body " + tag;
        u.kind = normgraph::NodeKind::section;
        g.add_node(u);
        g.add_parthood(u.id, parent);
        ids.push_back(u.id);
        per_doc[d].push_back(u.id);
    }
    for (size_t c = 0; c < extra_citations; ++c) {
        const std::string& from = rng.pick(ids);
        const std::string& to = rng.pick(ids);
        if (from != to) g.add_citation(from, to);
    }
    g.freeze();
    return g;
}

inline std::vector<float> random_unit_vector(Rng& rng, std::uint32_t dim) {
    std::vector<float> v(dim);
    double s = 0;
    for (auto& x : v) {
        x = static_cast<float>(rng.real01() * 2.0 - 1.0);
        s += static_cast<double>(x) * x;
    }
    double norm = std::sqrt(s);
    if (norm == 0) {
        v[0] = 1.0f;
        return v;
    }
    for (auto& x : v) x = static_cast<float>(x / norm);
    return v;
}

// Scratch directory under the system temp root, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("ngtest-" + tag + "-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter.fetch_add(1)));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

// A small synthetic document with heading-structured text. Returns the
// text; codes/titles supplied by the caller.
struct CorpusWriter {
    std::filesystem::path dir;
    nlohmann::json manifest = {{"documents", nlohmann::json::array()}};

    explicit CorpusWriter(std::filesystem::path d) : dir(std::move(d)) {
        std::filesystem::create_directories(dir);
    }

    void add_doc(const std::string& doc_id, const std::string& title,
                 const std::vector<std::string>& aliases, const std::string& text) {
        std::string file = doc_id + ".txt";
        normgraph::write_file(dir / file, text);
        manifest["documents"].push_back(
            {{"doc_id", doc_id}, {"title", title}, {"aliases", aliases}, {"path", file}});
    }

    std::filesystem::path finish() {
        auto p = dir / "manifest.json";
        normgraph::write_file(p, manifest.dump(2) + "\n");
        return p;
    }
};

}  // namespace ngtest
