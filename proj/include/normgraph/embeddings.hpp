// Dense embeddings for InfoUnits: a deterministic hashing embedder (the
// hermetic default), a pluggable remote backend, cosine similarity, and
// graph-neighbor smoothing.
#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "normgraph/common.hpp"
#include "normgraph/graph.hpp"
#include "normgraph/tokenizer.hpp"

namespace normgraph {

struct EmbeddingMatrix {
    std::uint32_t dim = 0;
    std::uint32_t count = 0;
    std::vector<float> data;   // row-major, count x dim
    std::vector<float> norms;  // cached L2 norms (1 or 0 after finalize)

    std::span<const float> row(std::uint32_t i) const {
        return std::span<const float>(data.data() + static_cast<size_t>(i) * dim, dim);
    }
    std::span<float> row(std::uint32_t i) {
        return std::span<float>(data.data() + static_cast<size_t>(i) * dim, dim);
    }

    void recompute_norms() {
        norms.resize(count);
        for (std::uint32_t i = 0; i < count; ++i) {
            double s = 0;
            for (float v : row(i)) s += static_cast<double>(v) * v;
            norms[i] = static_cast<float>(std::sqrt(s));
        }
    }

    // Unit-normalizes every non-zero row.
    void normalize_rows() {
        norms.resize(count);
        for (std::uint32_t i = 0; i < count; ++i) {
            auto r = row(i);
            double s = 0;
            for (float v : r) s += static_cast<double>(v) * v;
            double norm = std::sqrt(s);
            if (norm > 0) {
                for (float& v : r) v = static_cast<float>(v / norm);
                norms[i] = 1.0f;
            } else {
                norms[i] = 0.0f;
            }
        }
    }
};

inline double cosine_similarity(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size())
        throw Error("cosine: dimension mismatch: " + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()));
    double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

struct EmbedderSpec {
    enum class Backend { deterministic_local, remote_http };
    Backend backend = Backend::deterministic_local;
    std::string model_name = "fnv1a-bow-v1";
    std::uint32_t dim = 256;
    std::string endpoint;                            // remote only
    std::string auth_env = "NORMGRAPH_API_TOKEN";    // bearer token env var

    void validate() const {
        if (dim == 0) throw Error("embedder: dim must be > 0");
        if (backend == Backend::remote_http && endpoint.empty())
            throw Error("embedder: remote_http requires an endpoint");
    }
};

inline const char* backend_name(EmbedderSpec::Backend b) {
    return b == EmbedderSpec::Backend::deterministic_local ? "deterministic_local" : "remote_http";
}

inline std::optional<EmbedderSpec::Backend> backend_from(std::string_view s) {
    if (s == "deterministic_local" || s == "deterministic" || s == "local")
        return EmbedderSpec::Backend::deterministic_local;
    if (s == "remote_http" || s == "remote") return EmbedderSpec::Backend::remote_http;
    return std::nullopt;
}

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::uint32_t dim() const = 0;
    // Always returns an L2-normalized vector (or the zero vector).
    virtual std::vector<float> embed(const std::string& text) = 0;
};

// Hashed bag-of-words embedder: per token, FNV-1a 64 picks a bucket
// (h mod dim) and a sign (bit 63), the bucket accumulates +-1, and the
// result is L2-normalized. Integer hashing plus per-bucket integer
// accumulation makes it reproducible across runs and platforms.
class DeterministicEmbedder : public Embedder {
public:
    explicit DeterministicEmbedder(std::uint32_t dim = 256) : dim_(dim) {
        if (dim == 0) throw Error("embedder: dim must be > 0");
    }

    std::uint32_t dim() const override { return dim_; }

    std::vector<float> embed(const std::string& text) override {
        std::vector<std::int64_t> acc(dim_, 0);
        for (const auto& token : tokenize(text)) {
            std::uint64_t h = fnv1a64(token);
            std::uint32_t bucket = static_cast<std::uint32_t>(h % dim_);
            acc[bucket] += (h >> 63) ? -1 : 1;
        }
        std::vector<float> out(dim_, 0.0f);
        double s = 0;
        for (std::uint32_t i = 0; i < dim_; ++i) {
            out[i] = static_cast<float>(acc[i]);
            s += static_cast<double>(acc[i]) * static_cast<double>(acc[i]);
        }
        double norm = std::sqrt(s);
        if (norm > 0)
            for (float& v : out) v = static_cast<float>(v / norm);
        return out;
    }

private:
    std::uint32_t dim_;
};

inline std::vector<float> embed_text(Embedder& embedder, const std::string& text) {
    auto v = embedder.embed(text);
    if (v.size() != embedder.dim())
        throw Error("embedder returned wrong dimension: " + std::to_string(v.size()));
    return v;
}

// One row per node, canonical order; the embedded text is unit_text
// (title and body, code-prefixed for sections).
inline EmbeddingMatrix embed_graph(Embedder& embedder, const InfoGraph& graph,
                                   unsigned threads = 0) {
    EmbeddingMatrix m;
    m.dim = embedder.dim();
    m.count = static_cast<std::uint32_t>(graph.size());
    m.data.assign(static_cast<size_t>(m.dim) * m.count, 0.0f);
    parallel_for(graph.size(), threads, [&](size_t i) {
        auto v = embedder.embed(unit_text(graph.node(static_cast<InfoGraph::Ord>(i))));
        if (v.size() != m.dim)
            throw Error("embedding dimension mismatch on node " +
                        graph.node(static_cast<InfoGraph::Ord>(i)).id);
        std::copy(v.begin(), v.end(), m.row(static_cast<std::uint32_t>(i)).begin());
    });
    m.normalize_rows();
    return m;
}

struct SmoothingConfig {
    double alpha = 0.5;   // weight of the node's own embedding, in (0, 1]
    std::uint32_t passes = 1;

    void validate() const {
        if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("smoothing: alpha must be in (0, 1]");
        if (passes < 1) throw Error("smoothing: passes must be >= 1");
    }
};

// Blends each node with the mean of its graph neighbors:
// v' = alpha * v + (1 - alpha) * mean(neighbors), synchronously for all
// nodes per pass, then re-normalizes. Nodes without neighbors are left
// untouched. Neighbor vectors are summed in neighbor-id order so the
// result is invariant under node-order permutation, bit for bit.
inline EmbeddingMatrix smooth(const EmbeddingMatrix& input, const InfoGraph& graph,
                              const SmoothingConfig& config, unsigned threads = 0) {
    config.validate();
    if (input.count != graph.size())
        throw Error("smooth: matrix/graph size mismatch");
    EmbeddingMatrix cur = input;
    EmbeddingMatrix next = input;

    std::vector<std::vector<std::uint32_t>> ordered_neighbors(graph.size());
    parallel_for(graph.size(), threads, [&](size_t i) {
        auto ns = graph.neighbors(static_cast<InfoGraph::Ord>(i));
        std::sort(ns.begin(), ns.end(), [&](std::uint32_t a, std::uint32_t b) {
            return graph.node(a).id < graph.node(b).id;
        });
        ordered_neighbors[i] = std::move(ns);
    });

    for (std::uint32_t pass = 0; pass < config.passes; ++pass) {
        parallel_for(graph.size(), threads, [&](size_t i) {
            const auto& ns = ordered_neighbors[i];
            auto src = cur.row(static_cast<std::uint32_t>(i));
            auto dst = next.row(static_cast<std::uint32_t>(i));
            if (ns.empty()) {
                std::copy(src.begin(), src.end(), dst.begin());
                return;
            }
            const double inv = 1.0 / static_cast<double>(ns.size());
            for (std::uint32_t d = 0; d < cur.dim; ++d) {
                double sum = 0;
                for (std::uint32_t n : ns) sum += static_cast<double>(cur.row(n)[d]);
                dst[d] = static_cast<float>(config.alpha * static_cast<double>(src[d]) +
                                            (1.0 - config.alpha) * (sum * inv));
            }
        });
        next.normalize_rows();
        std::swap(cur, next);
    }
    return cur;
}

}  // namespace normgraph
