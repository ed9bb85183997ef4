// Information graph over normative documents: homogeneous titled/bodied
// nodes (documents, sections, chunks), a single-parent parthood relation
// and directed many-to-many citations.
//
// The graph is mutable while it is being constructed (single writer),
// then frozen; after freeze() every operation is read-only and safe for
// any number of concurrent readers.
#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "normgraph/common.hpp"

namespace normgraph {

enum class NodeKind { document, section, chunk };

inline const char* node_kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::document: return "document";
        case NodeKind::section: return "section";
        case NodeKind::chunk: return "chunk";
    }
    return "?";
}

inline std::optional<NodeKind> node_kind_from(std::string_view s) {
    if (s == "document") return NodeKind::document;
    if (s == "section") return NodeKind::section;
    if (s == "chunk") return NodeKind::chunk;
    return std::nullopt;
}

struct InfoUnit {
    std::string id;        // "<doc>" | "<doc>#<code>" | "<parent-id>/<ordinal>"
    std::string doc_id;
    std::optional<std::string> section_code;
    std::string title;
    std::string body;
    NodeKind kind = NodeKind::section;
    bool is_tabular = false;
};

// Text a node contributes to indexing, embedding, full-text blobs and
// eval matching. Sections lead with their code so clause numbers are
// lexically matchable; chunks are body-only so a split section's text
// stays contiguous across its chunks.
inline std::string unit_text(const InfoUnit& u) {
    std::string out;
    if (u.section_code) {
        out += *u.section_code;
        out += ' ';
    }
    out += u.title;
    if (!u.body.empty()) {
        if (!out.empty()) out += '\n';
        out += u.body;
    }
    return out;
}

struct Violation {
    std::string kind;  // "missing-node" | "parthood-self-loop" | "parthood-cycle" | "dangling-edge"
    std::string detail;
};

class InfoGraph {
public:
    using Ord = std::uint32_t;

    // --- construction (single writer) ---

    Ord add_node(InfoUnit unit) {
        ensure_mutable();
        if (by_id_.count(unit.id))
            throw Error("duplicate node id: " + unit.id);
        Ord ord = static_cast<Ord>(nodes_.size());
        by_id_.emplace(unit.id, ord);
        nodes_.push_back(std::move(unit));
        return ord;
    }

    // Parthood is stored child -> parent, so the at-most-one-parent rule
    // is structural.
    void add_parthood(const std::string& child, const std::string& parent) {
        ensure_mutable();
        auto [it, inserted] = parthood_.emplace(child, parent);
        if (!inserted)
            throw Error("node already has a parthood parent: " + child);
    }

    // Self-citations are dropped with a warning; duplicates are merged at
    // freeze time.
    void add_citation(const std::string& from, const std::string& to) {
        ensure_mutable();
        if (from == to) {
            log_warn("dropping self-citation on " + from);
            return;
        }
        citations_.emplace_back(from, to);
    }

    void add_unresolved(const std::string& node, const std::string& raw) {
        ensure_mutable();
        unresolved_.emplace_back(node, raw);
    }

    // --- validation ---

    // Returns every violation instead of throwing: missing endpoints,
    // parthood self-loops and cycles, dangling citation edges.
    std::vector<Violation> validate() const {
        std::vector<Violation> out;
        for (const auto& [child, parent] : ordered_parthood()) {
            if (!by_id_.count(child))
                out.push_back({"missing-node", "parthood child does not exist: " + child});
            if (!by_id_.count(parent))
                out.push_back({"missing-node", "parthood parent does not exist: " + parent});
            if (child == parent)
                out.push_back({"parthood-self-loop", child});
        }
        for (const auto& [from, to] : citations_) {
            if (!by_id_.count(from))
                out.push_back({"dangling-edge", "citation source does not exist: " + from});
            if (!by_id_.count(to))
                out.push_back({"dangling-edge", "citation target does not exist: " + to});
        }
        // Cycle check by walking child -> parent chains; nodes on an
        // already-cleared chain are skipped.
        std::unordered_map<std::string, int> state;  // 0 unseen, 1 on path, 2 done
        for (const auto& [start, unused] : ordered_parthood()) {
            (void)unused;
            if (state[start] != 0) continue;
            std::vector<std::string> path;
            std::string cur = start;
            bool cycle = false;
            while (true) {
                int& st = state[cur];
                if (st == 1) {
                    cycle = true;
                    break;
                }
                if (st == 2) break;
                st = 1;
                path.push_back(cur);
                auto it = parthood_.find(cur);
                if (it == parthood_.end()) break;
                cur = it->second;
            }
            if (cycle)
                out.push_back({"parthood-cycle", "parthood cycle through " + cur});
            for (const auto& n : path) state[n] = 2;
        }
        return out;
    }

    // Validates, then builds the derived read-only indexes. Throws on the
    // first violation: ingestion must never freeze a malformed graph.
    void freeze() {
        if (frozen_) return;
        auto violations = validate();
        if (!violations.empty())
            throw Error("graph validation failed: " + violations.front().kind + ": " +
                        violations.front().detail);
        parent_.assign(nodes_.size(), std::nullopt);
        children_.assign(nodes_.size(), {});
        cites_out_.assign(nodes_.size(), {});
        cites_in_.assign(nodes_.size(), {});
        for (const auto& [child, parent] : parthood_) {
            Ord c = by_id_.at(child), p = by_id_.at(parent);
            parent_[c] = p;
            children_[p].push_back(c);
        }
        for (auto& kids : children_) std::sort(kids.begin(), kids.end());
        {
            std::set<std::pair<Ord, Ord>> dedup;
            for (const auto& [from, to] : citations_)
                dedup.emplace(by_id_.at(from), by_id_.at(to));
            citation_pairs_.assign(dedup.begin(), dedup.end());
            for (const auto& [f, t] : citation_pairs_) {
                cites_out_[f].push_back(t);
                cites_in_[t].push_back(f);
            }
        }
        frozen_ = true;
    }

    bool frozen() const { return frozen_; }

    // --- read-only queries (frozen) ---

    size_t size() const { return nodes_.size(); }
    const InfoUnit& node(Ord ord) const { return nodes_.at(ord); }
    const std::vector<InfoUnit>& nodes() const { return nodes_; }

    std::optional<Ord> ordinal_of(const std::string& id) const {
        auto it = by_id_.find(id);
        if (it == by_id_.end()) return std::nullopt;
        return it->second;
    }

    Ord require(const std::string& id) const {
        auto ord = ordinal_of(id);
        if (!ord) throw Error("unknown node id: " + id);
        return *ord;
    }

    std::optional<Ord> parent(Ord ord) const {
        ensure_frozen();
        return parent_.at(ord);
    }

    const std::vector<Ord>& children(Ord ord) const {
        ensure_frozen();
        return children_.at(ord);
    }

    // Chain child -> parent -> ... -> top-level node, excluding ord itself.
    std::vector<Ord> ancestors(Ord ord) const {
        ensure_frozen();
        std::vector<Ord> out;
        std::optional<Ord> cur = parent_.at(ord);
        while (cur) {
            out.push_back(*cur);
            cur = parent_[*cur];
        }
        return out;
    }

    // True iff the two ancestry chains (each including the node itself)
    // intersect.
    bool same_publication(Ord a, Ord b) const {
        ensure_frozen();
        std::unordered_set<Ord> chain;
        for (std::optional<Ord> cur = a; cur; cur = parent_[*cur]) chain.insert(*cur);
        for (std::optional<Ord> cur = b; cur; cur = parent_[*cur])
            if (chain.count(*cur)) return true;
        return false;
    }

    // Parent, children, siblings, and citations in both directions;
    // deduplicated, never contains ord, sorted by ordinal.
    std::vector<Ord> neighbors(Ord ord) const {
        ensure_frozen();
        std::set<Ord> out;
        if (parent_.at(ord)) {
            Ord p = *parent_[ord];
            out.insert(p);
            for (Ord sib : children_[p]) out.insert(sib);
        }
        for (Ord c : children_[ord]) out.insert(c);
        for (Ord t : cites_out_[ord]) out.insert(t);
        for (Ord f : cites_in_[ord]) out.insert(f);
        out.erase(ord);
        return std::vector<Ord>(out.begin(), out.end());
    }

    size_t degree(Ord ord) const { return neighbors(ord).size(); }

    const std::vector<std::pair<Ord, Ord>>& citation_pairs() const {
        ensure_frozen();
        return citation_pairs_;
    }

    // Parthood pairs (child, parent) in canonical child order.
    std::vector<std::pair<std::string, std::string>> ordered_parthood() const {
        std::vector<std::pair<std::string, std::string>> out(parthood_.begin(), parthood_.end());
        std::sort(out.begin(), out.end(), [this](const auto& a, const auto& b) {
            auto oa = by_id_.find(a.first), ob = by_id_.find(b.first);
            if (oa != by_id_.end() && ob != by_id_.end()) return oa->second < ob->second;
            return a.first < b.first;
        });
        return out;
    }

    const std::vector<std::pair<std::string, std::string>>& unresolved_mentions() const {
        return unresolved_;
    }

    // Top-level nodes (no parthood parent), canonical order.
    std::vector<Ord> roots() const {
        ensure_frozen();
        std::vector<Ord> out;
        for (Ord i = 0; i < nodes_.size(); ++i)
            if (!parent_[i]) out.push_back(i);
        return out;
    }

private:
    void ensure_mutable() const {
        if (frozen_) throw Error("graph is frozen");
    }
    void ensure_frozen() const {
        if (!frozen_) throw Error("graph is not frozen yet");
    }

    std::vector<InfoUnit> nodes_;
    std::unordered_map<std::string, Ord> by_id_;
    std::unordered_map<std::string, std::string> parthood_;  // child -> parent
    std::vector<std::pair<std::string, std::string>> citations_;
    std::vector<std::pair<std::string, std::string>> unresolved_;
    bool frozen_ = false;

    // derived, built by freeze()
    std::vector<std::optional<Ord>> parent_;
    std::vector<std::vector<Ord>> children_;
    std::vector<std::vector<Ord>> cites_out_, cites_in_;
    std::vector<std::pair<Ord, Ord>> citation_pairs_;
};

// Concatenation of unit_text over canonical node order; the blob the QA
// validity filter checks witnesses against.
inline std::string full_text(const InfoGraph& graph) {
    std::string out;
    for (const auto& u : graph.nodes()) {
        out += unit_text(u);
        out += '\n';
    }
    return out;
}

}  // namespace normgraph
