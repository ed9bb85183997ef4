// Okapi BM25 inverted index over node text; the high-recall low-latency
// prefilter in front of the dense stages.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "normgraph/common.hpp"
#include "normgraph/graph.hpp"
#include "normgraph/tokenizer.hpp"

namespace normgraph {

struct Bm25Params {
    double k1 = 1.5;
    double b = 0.75;

    void validate() const {
        if (k1 < 0) throw Error("bm25: k1 must be >= 0");
        if (b < 0 || b > 1) throw Error("bm25: b must be in [0, 1]");
    }
};

struct Posting {
    std::uint32_t node;
    std::uint32_t tf;
};

class SparseIndex {
public:
    SparseIndex() = default;

    static SparseIndex build(const InfoGraph& graph, Bm25Params params = {}) {
        params.validate();
        SparseIndex idx;
        idx.params_ = params;
        idx.node_count_ = static_cast<std::uint32_t>(graph.size());
        idx.doc_lengths_.resize(graph.size(), 0);
        double total = 0;
        for (std::uint32_t i = 0; i < graph.size(); ++i) {
            auto tokens = tokenize(unit_text(graph.node(i)));
            idx.doc_lengths_[i] = static_cast<std::uint32_t>(tokens.size());
            total += static_cast<double>(tokens.size());
            std::unordered_map<std::string, std::uint32_t> tf;
            for (auto& t : tokens) ++tf[t];
            // Postings appended in node order stay sorted by ordinal; the
            // per-node term order is canonicalized for determinism.
            std::vector<const std::string*> terms;
            terms.reserve(tf.size());
            for (const auto& [t, unused] : tf) {
                (void)unused;
                terms.push_back(&t);
            }
            std::sort(terms.begin(), terms.end(),
                      [](const std::string* a, const std::string* b) { return *a < *b; });
            for (const auto* t : terms)
                idx.postings_for(*t).push_back({i, tf.at(*t)});
        }
        idx.avg_doc_length_ = graph.size() == 0 ? 0.0 : total / static_cast<double>(graph.size());
        return idx;
    }

    const Bm25Params& params() const { return params_; }
    double avg_doc_length() const { return avg_doc_length_; }
    std::uint32_t node_count() const { return node_count_; }
    const std::vector<std::uint32_t>& doc_lengths() const { return doc_lengths_; }

    const std::vector<std::string>& terms() const { return terms_; }
    const std::vector<Posting>* postings(const std::string& term) const {
        auto it = term_ids_.find(term);
        if (it == term_ids_.end()) return nullptr;
        return &postings_[it->second];
    }

    // Lucene-style floored IDF, always positive even when df == N.
    double idf(const std::string& term) const {
        auto* p = postings(term);
        if (!p) return 0.0;
        double n = static_cast<double>(node_count_);
        double df = static_cast<double>(p->size());
        return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
    }

    // BM25 score of one node for the given query terms; terms absent from
    // the vocabulary contribute 0.
    double bm25_score(const std::vector<std::string>& query_terms, std::uint32_t node) const {
        if (node >= node_count_) throw Error("bm25_score: node out of range");
        double score = 0.0;
        for (const auto& term : query_terms) {
            auto* plist = postings(term);
            if (!plist) continue;
            auto it = std::lower_bound(plist->begin(), plist->end(), node,
                                       [](const Posting& p, std::uint32_t n) { return p.node < n; });
            if (it == plist->end() || it->node != node) continue;
            score += term_node_score(term, it->tf, node);
        }
        return score;
    }

    // Scores every node with at least one matching posting; the result is
    // sorted by score descending, ties by canonical node order, truncated
    // to n.
    std::vector<std::pair<std::uint32_t, double>> prefilter(const std::string& query_text,
                                                            size_t n) const {
        if (n < 1) throw Error("prefilter: n must be >= 1");
        auto query_terms = tokenize(query_text);
        std::unordered_map<std::uint32_t, double> acc;
        for (const auto& term : query_terms) {
            auto* plist = postings(term);
            if (!plist) continue;
            for (const auto& p : *plist) acc[p.node] += term_node_score(term, p.tf, p.node);
        }
        std::vector<std::pair<std::uint32_t, double>> out(acc.begin(), acc.end());
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        if (out.size() > n) out.resize(n);
        return out;
    }

    // Serialization access (index_io).
    std::vector<std::pair<std::string, std::vector<Posting>>> sorted_postings() const {
        std::vector<std::pair<std::string, std::vector<Posting>>> out;
        out.reserve(terms_.size());
        for (size_t t = 0; t < terms_.size(); ++t) out.emplace_back(terms_[t], postings_[t]);
        std::sort(out.begin(), out.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        return out;
    }

    static SparseIndex from_parts(Bm25Params params, double avg_len,
                                  std::vector<std::uint32_t> doc_lengths,
                                  std::vector<std::pair<std::string, std::vector<Posting>>> postings) {
        SparseIndex idx;
        idx.params_ = params;
        idx.avg_doc_length_ = avg_len;
        idx.node_count_ = static_cast<std::uint32_t>(doc_lengths.size());
        idx.doc_lengths_ = std::move(doc_lengths);
        for (auto& [term, plist] : postings) {
            if (plist.empty()) throw Error("bm25: empty postings list for term " + term);
            idx.postings_for(term) = std::move(plist);
        }
        return idx;
    }

private:
    std::vector<Posting>& postings_for(const std::string& term) {
        auto it = term_ids_.find(term);
        if (it == term_ids_.end()) {
            it = term_ids_.emplace(term, static_cast<std::uint32_t>(terms_.size())).first;
            terms_.push_back(term);
            postings_.emplace_back();
        }
        return postings_[it->second];
    }

    double term_node_score(const std::string& term, std::uint32_t tf, std::uint32_t node) const {
        double len = static_cast<double>(doc_lengths_[node]);
        double norm = avg_doc_length_ > 0 ? len / avg_doc_length_ : 0.0;
        double d = static_cast<double>(tf) +
                   params_.k1 * (1.0 - params_.b + params_.b * norm);
        return idf(term) * (static_cast<double>(tf) * (params_.k1 + 1.0)) / d;
    }

    Bm25Params params_;
    double avg_doc_length_ = 0.0;
    std::uint32_t node_count_ = 0;
    std::vector<std::uint32_t> doc_lengths_;
    std::vector<std::string> terms_;
    std::unordered_map<std::string, std::uint32_t> term_ids_;
    std::vector<std::vector<Posting>> postings_;
};

}  // namespace normgraph
