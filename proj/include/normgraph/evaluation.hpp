// Retrieval evaluation: witness-to-chunk matching under the 75%
// containment rule, R@K / AP@K / MRR@K, and the multi-configuration
// sweep over (config, K) cells.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "normgraph/common.hpp"
#include "normgraph/qa.hpp"
#include "normgraph/retrieval.hpp"

namespace normgraph {

struct MatchRule {
    double threshold = 0.75;
    bool normalize_whitespace = true;

    void validate() const {
        if (!(threshold > 0.0 && threshold <= 1.0))
            throw Error("match rule: threshold must be in (0, 1]");
    }
};

// Longest common (contiguous) substring length in characters; O(n*m)
// dynamic program with two rolling rows.
inline size_t longest_common_substring(std::string_view a, std::string_view b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    size_t best = 0;
    for (size_t i = 1; i <= a.size(); ++i) {
        for (size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1]) {
                cur[j] = prev[j - 1] + 1;
                best = std::max(best, cur[j]);
            } else {
                cur[j] = 0;
            }
        }
        std::swap(prev, cur);
    }
    return best;
}

// A retrieved chunk matches a golden chunk when a contiguous span of at
// least ceil(threshold * |golden|) characters of the golden chunk appears
// in it.
inline bool chunk_matches(const std::string& golden, const std::string& retrieved,
                          const MatchRule& rule = {}) {
    rule.validate();
    if (golden.empty()) throw Error("chunk_matches: golden must be non-empty");
    std::string g = rule.normalize_whitespace ? normalize_ws(golden) : golden;
    std::string r = rule.normalize_whitespace ? normalize_ws(retrieved) : retrieved;
    if (g.empty()) throw Error("chunk_matches: golden is empty after normalization");
    size_t needed = static_cast<size_t>(std::ceil(rule.threshold * static_cast<double>(g.size())));
    return longest_common_substring(g, r) >= needed;
}

struct RelevanceVector {
    std::vector<bool> rel;            // relevant-at-rank, 1-based rank k = rel[k-1]
    std::vector<int> matched_witness; // witness index claimed at each rank, -1 if none
    std::uint32_t r = 0;              // number of golden chunks |C_G|
};

// Walks results in rank order; a rank is relevant iff the node's text
// matches any not-yet-claimed witness, and each witness can be claimed by
// at most one rank.
inline RelevanceVector relevance_vector(const QAPair& pair, const RankedList& results,
                                        const std::function<std::string(std::uint32_t)>& node_text,
                                        std::uint32_t K, const MatchRule& rule = {}) {
    if (K < 1) throw Error("relevance_vector: K must be >= 1");
    RelevanceVector rv;
    rv.r = static_cast<std::uint32_t>(pair.witnesses.size());
    const size_t depth = std::min<size_t>(K, results.entries.size());
    std::vector<bool> claimed(pair.witnesses.size(), false);
    for (size_t k = 0; k < depth; ++k) {
        std::string text = node_text(results.entries[k].node);
        int matched = -1;
        for (size_t w = 0; w < pair.witnesses.size(); ++w) {
            if (claimed[w]) continue;
            if (chunk_matches(pair.witnesses[w], text, rule)) {
                matched = static_cast<int>(w);
                claimed[w] = true;
                break;
            }
        }
        rv.rel.push_back(matched >= 0);
        rv.matched_witness.push_back(matched);
    }
    return rv;
}

// Fraction of golden chunks matched within the vector.
inline double recall_at_k(const RelevanceVector& rv) {
    if (rv.r == 0) throw Error("recall_at_k: r must be >= 1");
    size_t matched = 0;
    for (bool b : rv.rel)
        if (b) ++matched;
    return static_cast<double>(matched) / static_cast<double>(rv.r);
}

// AP@K = (1/min(r, K)) * sum over relevant ranks k of Precision@k.
inline double ap_at_k(const RelevanceVector& rv, std::uint32_t K) {
    if (rv.r == 0) throw Error("ap_at_k: r must be >= 1");
    double r_hat = static_cast<double>(std::min<std::uint32_t>(rv.r, K));
    double sum = 0;
    size_t hits = 0;
    for (size_t k = 0; k < rv.rel.size(); ++k) {
        if (!rv.rel[k]) continue;
        ++hits;
        sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
    return sum / r_hat;
}

inline std::optional<std::uint32_t> first_relevant_rank(const RelevanceVector& rv) {
    for (size_t k = 0; k < rv.rel.size(); ++k)
        if (rv.rel[k]) return static_cast<std::uint32_t>(k + 1);
    return std::nullopt;
}

// Mean of 1/rank over questions; a question with no relevant chunk in the
// top K contributes 0.
inline double mrr_at_k(const std::vector<std::optional<std::uint32_t>>& first_ranks) {
    if (first_ranks.empty()) throw Error("mrr_at_k: empty question set");
    double sum = 0;
    for (const auto& r : first_ranks)
        if (r) sum += 1.0 / static_cast<double>(*r);
    return sum / static_cast<double>(first_ranks.size());
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

struct QuestionRecord {
    std::string id;
    std::vector<bool> rel;
    std::vector<int> matched_witness;
    std::uint32_t r = 0;
    std::optional<std::uint32_t> first_rank;
    double recall = 0;
    double ap = 0;
    double query_ms = 0;
};

struct TimingStats {
    double mean_ms = 0, p50_ms = 0, p95_ms = 0, max_ms = 0;
};

struct EvalReport {
    std::string config_name;
    std::string index_name;
    std::uint32_t K = 0;
    size_t n_questions = 0;
    bool empty = false;  // zero questions: aggregates are NaN-guarded to 0
    double recall = 0;
    double map = 0;
    double mrr = 0;
    TimingStats timing;
    std::vector<QuestionRecord> per_question;
};

struct SweepConfigEntry {
    std::string name;
    std::string index_name;
    PipelineConfig pipeline;
};

struct CellError {
    std::string config_name;
    std::uint32_t K = 0;
    std::string message;
};

struct SweepResult {
    std::vector<EvalReport> reports;
    std::vector<CellError> errors;
    size_t n_pairs_input = 0;
    size_t n_pairs_valid = 0;
};

struct NamedIndex {
    const InfoGraph* graph = nullptr;
    const SparseIndex* sparse = nullptr;
    const EmbeddingMatrix* embeddings = nullptr;
    Embedder* embedder = nullptr;  // query embedder matching the index

    IndexView view() const { return IndexView{graph, sparse, embeddings}; }
};

inline TimingStats timing_stats(std::vector<double> ms) {
    TimingStats t;
    if (ms.empty()) return t;
    std::sort(ms.begin(), ms.end());
    double sum = 0;
    for (double v : ms) sum += v;
    t.mean_ms = sum / static_cast<double>(ms.size());
    t.p50_ms = ms[ms.size() / 2];
    size_t p95 = static_cast<size_t>(std::ceil(0.95 * static_cast<double>(ms.size())));
    t.p95_ms = ms[std::min(ms.size() - 1, p95 > 0 ? p95 - 1 : 0)];
    t.max_ms = ms.back();
    return t;
}

// Runs every (config, K) cell over all valid pairs. Pairs are first
// validity-filtered against the full texts of every loaded index so that
// no retrieval strategy is penalized by content missing from one of the
// indexes.
inline SweepResult run_sweep(const std::vector<QAPair>& dataset,
                             const std::map<std::string, NamedIndex>& indexes,
                             const std::vector<SweepConfigEntry>& configs,
                             const std::vector<std::uint32_t>& Ks, const MatchRule& rule = {},
                             unsigned threads = 0) {
    rule.validate();
    SweepResult result;
    result.n_pairs_input = dataset.size();

    std::vector<std::string> full_texts;
    for (const auto& [name, idx] : indexes) full_texts.push_back(full_text(*idx.graph));
    const std::vector<QAPair> valid = filter_valid_pairs(dataset, full_texts);
    result.n_pairs_valid = valid.size();

    for (const auto& cfg : configs) {
        auto it = indexes.find(cfg.index_name);
        for (std::uint32_t K : Ks) {
            if (it == indexes.end()) {
                result.errors.push_back({cfg.name, K, "missing index: " + cfg.index_name});
                continue;
            }
            const NamedIndex& idx = it->second;
            EvalReport report;
            report.config_name = cfg.name;
            report.index_name = cfg.index_name;
            report.K = K;
            report.n_questions = valid.size();
            if (valid.empty()) {
                report.empty = true;
                result.reports.push_back(std::move(report));
                continue;
            }
            PipelineConfig pipeline = cfg.pipeline;
            pipeline.k_final = K;
            try {
                pipeline.validate();
                idx.view().check_consistent();
            } catch (const std::exception& e) {
                result.errors.push_back({cfg.name, K, e.what()});
                continue;
            }
            report.per_question.resize(valid.size());
            const InfoGraph& graph = *idx.graph;
            auto node_text = [&graph](std::uint32_t n) { return unit_text(graph.node(n)); };
            parallel_for(valid.size(), threads, [&](size_t qi) {
                const QAPair& pair = valid[qi];
                auto t0 = std::chrono::steady_clock::now();
                auto pres = run_pipeline(pair.question, idx.view(), *idx.embedder, pipeline);
                auto t1 = std::chrono::steady_clock::now();
                auto rv = relevance_vector(pair, pres.final, node_text, K, rule);
                QuestionRecord rec;
                rec.id = pair.id;
                rec.rel = rv.rel;
                rec.matched_witness = rv.matched_witness;
                rec.r = rv.r;
                rec.first_rank = first_relevant_rank(rv);
                rec.recall = recall_at_k(rv);
                rec.ap = ap_at_k(rv, K);
                rec.query_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
                report.per_question[qi] = std::move(rec);
            });
            double recall_sum = 0, ap_sum = 0;
            std::vector<std::optional<std::uint32_t>> first_ranks;
            std::vector<double> times;
            for (const auto& rec : report.per_question) {
                recall_sum += rec.recall;
                ap_sum += rec.ap;
                first_ranks.push_back(rec.first_rank);
                times.push_back(rec.query_ms);
            }
            report.recall = recall_sum / static_cast<double>(valid.size());
            report.map = ap_sum / static_cast<double>(valid.size());
            report.mrr = mrr_at_k(first_ranks);
            report.timing = timing_stats(std::move(times));
            result.reports.push_back(std::move(report));
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json per = nlohmann::json::array();
    for (const auto& q : r.per_question) {
        nlohmann::json rel = nlohmann::json::array();
        for (bool b : q.rel) rel.push_back(b);
        per.push_back(nlohmann::json{
            {"id", q.id},
            {"relevance", rel},
            {"matched_witness", q.matched_witness},
            {"r", q.r},
            {"first_rank", q.first_rank ? nlohmann::json(*q.first_rank) : nlohmann::json()},
            {"recall", q.recall},
            {"ap", q.ap},
            {"query_ms", q.query_ms},
        });
    }
    return nlohmann::json{
        {"config", r.config_name},
        {"index", r.index_name},
        {"k", r.K},
        {"n_questions", r.n_questions},
        {"empty", r.empty},
        {"recall", r.recall},
        {"map", r.map},
        {"mrr", r.mrr},
        {"timing",
         {{"mean_ms", r.timing.mean_ms},
          {"p50_ms", r.timing.p50_ms},
          {"p95_ms", r.timing.p95_ms},
          {"max_ms", r.timing.max_ms}}},
        {"per_question", per},
    };
}

// summary.csv: one row per (config, K). Timing is wall clock and thus
// nondeterministic, so the column is zeroed unless with_timing is set;
// the per-cell JSON reports always carry the measured numbers.
inline std::string summary_csv(const std::vector<EvalReport>& reports, bool with_timing) {
    std::string out = "config,K,recall,map,mrr,n_questions,mean_query_ms\n";
    char buf[256];
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof(buf), "%s,%u,%.6f,%.6f,%.6f,%zu,%.3f\n", r.config_name.c_str(),
                      r.K, r.recall, r.map, r.mrr, r.n_questions,
                      with_timing ? r.timing.mean_ms : 0.0);
        out += buf;
    }
    return out;
}

}  // namespace normgraph
