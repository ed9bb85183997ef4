// Query-time pipeline: BM25 prefilter, dense re-ranking, reciprocal rank
// fusion, and graph expansion with a hub-penalized neighbor score.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "normgraph/common.hpp"
#include "normgraph/embeddings.hpp"
#include "normgraph/graph.hpp"
#include "normgraph/sparse.hpp"

namespace normgraph {

enum class Provenance { sparse, dense, fused, expanded };

inline const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::sparse: return "sparse";
        case Provenance::dense: return "dense";
        case Provenance::fused: return "fused";
        case Provenance::expanded: return "expanded";
    }
    return "?";
}

struct RankedEntry {
    std::uint32_t node;
    double score;
};

struct RankedList {
    std::vector<RankedEntry> entries;
    Provenance provenance = Provenance::sparse;
};

struct FusionConfig {
    double k = 60.0;

    void validate() const {
        if (!(k > 0)) throw Error("rrf: k must be > 0");
    }
};

struct ExpanderConfig {
    double alpha = 1.0;  // seed-connection weight
    double beta = 1.0;   // neighbor-query similarity weight
    double gamma = 0.5;  // hub penalty weight
    std::uint32_t max_neighbors = 20;
    bool include_seeds = true;  // seeds stay ahead; false interleaves by score

    void validate() const {
        if (!(alpha >= 0) || !(beta >= 0) || !(gamma >= 0) || !std::isfinite(alpha) ||
            !std::isfinite(beta) || !std::isfinite(gamma))
            throw Error("expander: weights must be finite and non-negative");
    }
};

struct PipelineConfig {
    std::uint32_t prefilter_n = 100;
    std::uint32_t dense_top_m = 50;
    bool use_rrf = false;
    bool use_expansion = false;
    FusionConfig fusion;
    ExpanderConfig expander;
    std::uint32_t k_final = 8;

    void validate() const {
        fusion.validate();
        expander.validate();
        if (k_final < 1) throw Error("pipeline: k_final must be >= 1");
        if (!(k_final <= dense_top_m && dense_top_m <= prefilter_n))
            throw Error("pipeline: require k_final <= dense_top_m <= prefilter_n");
    }

    static PipelineConfig from_json(const nlohmann::json& j) {
        PipelineConfig c;
        if (j.contains("prefilter_n")) c.prefilter_n = j["prefilter_n"].get<std::uint32_t>();
        if (j.contains("dense_top_m")) c.dense_top_m = j["dense_top_m"].get<std::uint32_t>();
        if (j.contains("use_rrf")) c.use_rrf = j["use_rrf"].get<bool>();
        if (j.contains("use_expansion")) c.use_expansion = j["use_expansion"].get<bool>();
        if (j.contains("k_final")) c.k_final = j["k_final"].get<std::uint32_t>();
        if (j.contains("fusion") && j["fusion"].contains("k"))
            c.fusion.k = j["fusion"]["k"].get<double>();
        if (j.contains("expander")) {
            const auto& e = j["expander"];
            if (e.contains("alpha")) c.expander.alpha = e["alpha"].get<double>();
            if (e.contains("beta")) c.expander.beta = e["beta"].get<double>();
            if (e.contains("gamma")) c.expander.gamma = e["gamma"].get<double>();
            if (e.contains("max_neighbors"))
                c.expander.max_neighbors = e["max_neighbors"].get<std::uint32_t>();
            if (e.contains("include_seeds")) c.expander.include_seeds = e["include_seeds"].get<bool>();
        }
        return c;
    }

    nlohmann::json to_json() const {
        return nlohmann::json{
            {"prefilter_n", prefilter_n},
            {"dense_top_m", dense_top_m},
            {"use_rrf", use_rrf},
            {"use_expansion", use_expansion},
            {"k_final", k_final},
            {"fusion", {{"k", fusion.k}}},
            {"expander",
             {{"alpha", expander.alpha},
              {"beta", expander.beta},
              {"gamma", expander.gamma},
              {"max_neighbors", expander.max_neighbors},
              {"include_seeds", expander.include_seeds}}},
        };
    }
};

// Cosine-scores the candidates against the query vector and keeps the
// top m; ties preserve the incoming candidate order.
inline RankedList dense_rerank(const RankedList& candidates, std::span<const float> query_vec,
                               const EmbeddingMatrix& matrix, std::uint32_t m) {
    if (query_vec.size() != matrix.dim) throw Error("dense_rerank: query dimension mismatch");
    RankedList out;
    out.provenance = Provenance::dense;
    out.entries.reserve(candidates.entries.size());
    for (const auto& e : candidates.entries) {
        if (e.node >= matrix.count) throw Error("dense_rerank: candidate out of range");
        out.entries.push_back({e.node, cosine_similarity(matrix.row(e.node), query_vec)});
    }
    std::stable_sort(out.entries.begin(), out.entries.end(),
                     [](const RankedEntry& a, const RankedEntry& b) { return a.score > b.score; });
    if (out.entries.size() > m) out.entries.resize(m);
    return out;
}

// Reciprocal rank fusion over two or more lists: RRF(d) = sum over lists
// containing d of 1 / (k + rank). Rank-only; the input scores never enter
// the sum. Ties break by best input rank, then canonical node order.
inline RankedList rrf_fuse(const std::vector<RankedList>& lists, const FusionConfig& config) {
    config.validate();
    if (lists.size() < 2) throw Error("rrf_fuse: need at least 2 lists");
    struct Acc {
        double score = 0;
        std::uint32_t best_rank = std::numeric_limits<std::uint32_t>::max();
    };
    std::unordered_map<std::uint32_t, Acc> acc;
    for (const auto& list : lists) {
        for (size_t r = 0; r < list.entries.size(); ++r) {
            auto& a = acc[list.entries[r].node];
            a.score += 1.0 / (config.k + static_cast<double>(r + 1));
            a.best_rank = std::min(a.best_rank, static_cast<std::uint32_t>(r + 1));
        }
    }
    RankedList out;
    out.provenance = Provenance::fused;
    out.entries.reserve(acc.size());
    std::vector<std::pair<std::uint32_t, Acc>> rows(acc.begin(), acc.end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.second.score != b.second.score) return a.second.score > b.second.score;
        if (a.second.best_rank != b.second.best_rank) return a.second.best_rank < b.second.best_rank;
        return a.first < b.first;
    });
    for (const auto& [node, a] : rows) out.entries.push_back({node, a.score});
    return out;
}

// Expands the seed list with graph neighbors scored by
//   alpha * sum over seeds s with n in N(s) of cosim(em_s, em_q)
// + beta * cosim(em_n, em_q)
// - gamma * ln(1 + degree(n)).
// With include_seeds the top max_neighbors neighbors are appended after
// the seeds (their scores are not commensurate with RRF scores);
// otherwise everything is merged into one score-sorted list.
inline RankedList expand_and_rerank(const RankedList& seeds, const InfoGraph& graph,
                                    const EmbeddingMatrix& matrix, std::span<const float> query_vec,
                                    const ExpanderConfig& config) {
    config.validate();
    if (seeds.entries.empty()) throw Error("expand_and_rerank: empty seed list");

    std::vector<std::uint32_t> seed_nodes;
    std::unordered_set<std::uint32_t> seed_set;
    for (const auto& e : seeds.entries) {
        seed_nodes.push_back(e.node);
        seed_set.insert(e.node);
    }
    std::vector<double> seed_query_sims;
    std::vector<std::vector<std::uint32_t>> seed_neighbors;
    seed_query_sims.reserve(seed_nodes.size());
    seed_neighbors.reserve(seed_nodes.size());
    for (auto s : seed_nodes) {
        seed_query_sims.push_back(cosine_similarity(matrix.row(s), query_vec));
        seed_neighbors.push_back(graph.neighbors(s));  // sorted by ordinal
    }

    std::vector<std::uint32_t> pool;
    {
        std::unordered_set<std::uint32_t> seen;
        for (const auto& ns : seed_neighbors)
            for (auto n : ns)
                if (!seed_set.count(n) && seen.insert(n).second) pool.push_back(n);
        std::sort(pool.begin(), pool.end());
    }

    std::vector<RankedEntry> scored;
    scored.reserve(pool.size());
    for (auto n : pool) {
        double connection = 0;
        for (size_t si = 0; si < seed_nodes.size(); ++si)
            if (std::binary_search(seed_neighbors[si].begin(), seed_neighbors[si].end(), n))
                connection += seed_query_sims[si];
        double own = cosine_similarity(matrix.row(n), query_vec);
        double penalty = std::log(1.0 + static_cast<double>(graph.degree(n)));
        scored.push_back(
            {n, config.alpha * connection + config.beta * own - config.gamma * penalty});
    }
    std::sort(scored.begin(), scored.end(), [](const RankedEntry& a, const RankedEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.node < b.node;
    });
    if (scored.size() > config.max_neighbors) scored.resize(config.max_neighbors);

    RankedList out;
    out.provenance = Provenance::expanded;
    out.entries = seeds.entries;
    out.entries.insert(out.entries.end(), scored.begin(), scored.end());
    if (!config.include_seeds)
        std::stable_sort(out.entries.begin(), out.entries.end(),
                         [](const RankedEntry& a, const RankedEntry& b) { return a.score > b.score; });
    return out;
}

struct PipelineTrace {
    RankedList sparse;
    RankedList dense;
    std::optional<RankedList> fused;
    std::optional<RankedList> expanded;
};

struct PipelineResult {
    RankedList final;
    PipelineTrace trace;
};

// Read-only view over one loaded index.
struct IndexView {
    const InfoGraph* graph = nullptr;
    const SparseIndex* sparse = nullptr;
    const EmbeddingMatrix* embeddings = nullptr;

    void check_consistent() const {
        if (!graph || !sparse || !embeddings) throw Error("index view: missing component");
        if (sparse->node_count() != graph->size())
            throw Error("index mismatch: bm25 has " + std::to_string(sparse->node_count()) +
                        " nodes, graph has " + std::to_string(graph->size()));
        if (embeddings->count != graph->size())
            throw Error("index mismatch: embeddings have " + std::to_string(embeddings->count) +
                        " rows, graph has " + std::to_string(graph->size()));
    }
};

// prefilter -> dense rerank -> optional RRF -> optional expansion ->
// truncate to k_final. The query is embedded with the same embedder the
// index used; smoothing never applies to queries.
inline PipelineResult run_pipeline(const std::string& query_text, const IndexView& index,
                                   Embedder& query_embedder, const PipelineConfig& config) {
    config.validate();
    index.check_consistent();
    if (query_embedder.dim() != index.embeddings->dim)
        throw Error("index mismatch: query embedder dim " + std::to_string(query_embedder.dim()) +
                    " vs index dim " + std::to_string(index.embeddings->dim));

    PipelineResult result;
    auto pre = index.sparse->prefilter(query_text, config.prefilter_n);
    result.trace.sparse.provenance = Provenance::sparse;
    for (const auto& [node, score] : pre) result.trace.sparse.entries.push_back({node, score});
    if (pre.empty()) {
        result.final.provenance = Provenance::sparse;
        return result;
    }

    auto query_vec = embed_text(query_embedder, query_text);
    result.trace.dense =
        dense_rerank(result.trace.sparse, query_vec, *index.embeddings, config.dense_top_m);

    RankedList current = result.trace.dense;
    if (config.use_rrf) {
        current = rrf_fuse({result.trace.sparse, result.trace.dense}, config.fusion);
        result.trace.fused = current;
    }
    if (config.use_expansion) {
        current = expand_and_rerank(current, *index.graph, *index.embeddings, query_vec,
                                    config.expander);
        result.trace.expanded = current;
    }
    if (current.entries.size() > config.k_final) current.entries.resize(config.k_final);
    result.final = std::move(current);
    return result;
}

}  // namespace normgraph
