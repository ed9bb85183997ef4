// Builds an InfoGraph from pre-extracted document text: section
// segmentation (ToC driven or heading detection), parthood via
// section-code extension, oversized-section chunking, and citation
// mention extraction/resolution.
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "normgraph/common.hpp"
#include "normgraph/graph.hpp"
#include "normgraph/manifest.hpp"
#include "normgraph/section_code.hpp"

namespace normgraph {

enum class IngestMode { vanilla, structured, structured_chunks };

inline const char* ingest_mode_name(IngestMode m) {
    switch (m) {
        case IngestMode::vanilla: return "vanilla";
        case IngestMode::structured: return "structured";
        case IngestMode::structured_chunks: return "structured-chunks";
    }
    return "?";
}

inline std::optional<IngestMode> ingest_mode_from(std::string_view s) {
    if (s == "vanilla") return IngestMode::vanilla;
    if (s == "structured") return IngestMode::structured;
    if (s == "structured-chunks") return IngestMode::structured_chunks;
    return std::nullopt;
}

struct ChunkingPolicy {
    size_t max_words = 300;
    bool respect_structure = true;

    void validate() const {
        if (max_words < 20) throw Error("chunking policy: max_words must be >= 20");
    }
};

struct Mention {
    std::string raw;                       // the matched span, as written
    std::optional<std::string> doc_part;   // normalized alias/title key
    std::optional<std::string> section_part;  // canonical dotted code
    std::string source;                    // node id the mention came from
    size_t pos = 0;                        // position in the normalized body
};

// ---------------------------------------------------------------------------
// Heading detection
// ---------------------------------------------------------------------------

namespace detail {

// Heading code grammar: first segment [A-Z]?[0-9]+ or a single [A-Z];
// later segments digits only.
inline bool is_heading_code(const SectionCode& code) {
    const auto& segs = code.segments;
    const std::string& first = segs.front();
    bool first_ok = false;
    if (first.size() == 1 && std::isupper(static_cast<unsigned char>(first[0]))) {
        first_ok = true;
    } else {
        size_t i = 0;
        if (!first.empty() && std::isupper(static_cast<unsigned char>(first[0]))) i = 1;
        first_ok = i < first.size();
        for (; i < first.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(first[i]))) first_ok = false;
    }
    if (!first_ok) return false;
    for (size_t s = 1; s < segs.size(); ++s) {
        if (segs[s].empty()) return false;
        for (char c : segs[s])
            if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

struct HeadingLine {
    SectionCode code;
    std::string title;
};

// A line is heading-shaped iff it matches ^<CODE>[ \t]+<TITLE>$. For a
// bare single-letter code the title must start uppercase, otherwise every
// sentence beginning "A ..." at a line start would read as an annex.
inline std::optional<HeadingLine> parse_heading_line(std::string_view line) {
    size_t i = 0;
    while (i < line.size() && (is_alnum(line[i]) || line[i] == '.')) ++i;
    if (i == 0 || i >= line.size()) return std::nullopt;
    if (line[i] != ' ' && line[i] != '\t') return std::nullopt;
    auto code = SectionCode::parse(line.substr(0, i));
    if (!code || !is_heading_code(*code)) return std::nullopt;
    size_t t = i;
    while (t < line.size() && (line[t] == ' ' || line[t] == '\t')) ++t;
    std::string title = trim(line.substr(t));
    if (title.empty()) return std::nullopt;
    if (code->segments.size() == 1 && code->segments.front().size() == 1 &&
        std::isalpha(static_cast<unsigned char>(code->segments.front()[0])) &&
        std::islower(static_cast<unsigned char>(title[0])))
        return std::nullopt;
    return HeadingLine{std::move(*code), std::move(title)};
}

struct LineView {
    size_t begin, end;  // [begin, end) excludes the terminator
};

inline std::vector<LineView> split_lines(std::string_view text) {
    std::vector<LineView> out;
    size_t b = 0;
    for (size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == '\n') {
            out.push_back({b, i});
            b = i + 1;
        }
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// parse_sections
// ---------------------------------------------------------------------------

// Segments one document into a document node followed by its sections in
// original order. With a manifest ToC the headings are located in the
// text; otherwise heading-shaped lines are detected, accepting a line
// only when its code plausibly continues the running code sequence.
inline std::vector<InfoUnit> parse_sections(const DocEntry& doc, const std::string& text) {
    struct Located {
        detail::HeadingLine heading;
        size_t body_begin;  // first byte after the heading line
        size_t heading_begin;
    };
    std::vector<Located> headings;
    const auto lines = detail::split_lines(text);

    if (doc.toc) {
        size_t cursor = 0;
        for (const auto& entry : *doc.toc) {
            auto code = SectionCode::parse(entry.code);
            if (!code)
                throw Error("doc " + doc.doc_id + ": bad toc code: " + entry.code);
            std::string want = normalize_ws(entry.code + " " + entry.title);
            bool found = false;
            for (size_t li = cursor; li < lines.size(); ++li) {
                std::string_view line = std::string_view(text).substr(lines[li].begin,
                                                                      lines[li].end - lines[li].begin);
                if (normalize_ws(line) == want) {
                    headings.push_back({{*code, trim(entry.title)}, lines[li].end + 1 > text.size()
                                                                        ? text.size()
                                                                        : lines[li].end + 1,
                                        lines[li].begin});
                    cursor = li + 1;
                    found = true;
                    break;
                }
            }
            if (!found)
                throw Error("doc " + doc.doc_id + ": toc heading not found in text: " + want);
        }
    } else {
        std::optional<SectionCode> prev;
        for (const auto& lv : lines) {
            std::string_view line = std::string_view(text).substr(lv.begin, lv.end - lv.begin);
            auto h = detail::parse_heading_line(line);
            if (!h) continue;
            if (prev && !is_plausible_successor(*prev, h->code)) continue;
            prev = h->code;
            headings.push_back({std::move(*h), std::min(lv.end + 1, text.size()), lv.begin});
        }
    }

    if (headings.empty())
        throw Error("doc " + doc.doc_id + ": no headings found (empty document)");

    std::vector<InfoUnit> units;
    InfoUnit root;
    root.id = doc.doc_id;
    root.doc_id = doc.doc_id;
    root.title = doc.title;
    root.kind = NodeKind::document;
    units.push_back(std::move(root));

    std::unordered_set<std::string> seen_codes;
    for (size_t i = 0; i < headings.size(); ++i) {
        const auto& h = headings[i];
        std::string code_str = h.heading.code.str();
        if (!seen_codes.insert(code_str).second)
            throw Error("doc " + doc.doc_id + ": duplicate section code: " + code_str);
        size_t body_end = (i + 1 < headings.size()) ? headings[i + 1].heading_begin : text.size();
        size_t body_begin = std::min(h.body_begin, body_end);
        InfoUnit u;
        u.id = doc.doc_id + "#" + code_str;
        u.doc_id = doc.doc_id;
        u.section_code = code_str;
        u.title = h.heading.title;
        u.body = trim(std::string_view(text).substr(body_begin, body_end - body_begin));
        u.kind = NodeKind::section;
        units.push_back(std::move(u));
    }
    return units;
}

// ---------------------------------------------------------------------------
// Parthood linking
// ---------------------------------------------------------------------------

// Links each section to the nearest preceding unit whose code is its
// parent code; sections with no code parent attach to the document node.
// Returns (child id, parent id) pairs.
inline std::vector<std::pair<std::string, std::string>> link_parthood(
    const std::vector<InfoUnit>& units) {
    std::vector<std::pair<std::string, std::string>> out;
    if (units.empty()) return out;
    const std::string& doc_node = units.front().id;
    for (size_t i = 1; i < units.size(); ++i) {
        if (units[i].kind != NodeKind::section || !units[i].section_code) continue;
        auto child = SectionCode::parse(*units[i].section_code);
        std::string parent = doc_node;
        for (size_t j = i; j-- > 1;) {
            if (!units[j].section_code) continue;
            auto cand = SectionCode::parse(*units[j].section_code);
            if (cand && child && is_parent_code(*cand, *child)) {
                parent = units[j].id;
                break;
            }
        }
        out.emplace_back(units[i].id, parent);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Chunk splitting
// ---------------------------------------------------------------------------

// Tabular heuristic: at least half of the non-empty lines contain two or
// more cell separators (tab, '|', or a run of 2+ spaces).
inline bool detect_tabular(std::string_view body) {
    size_t lines = 0, tabular = 0;
    for (const auto& lv : detail::split_lines(body)) {
        std::string_view line = body.substr(lv.begin, lv.end - lv.begin);
        if (trim(line).empty()) continue;
        ++lines;
        size_t seps = 0;
        for (size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '\t' || line[i] == '|') {
                ++seps;
            } else if (line[i] == ' ' && i + 1 < line.size() && line[i + 1] == ' ') {
                ++seps;
                while (i + 1 < line.size() && line[i + 1] == ' ') ++i;
            }
        }
        if (seps >= 2) ++tabular;
    }
    return lines > 0 && 2 * tabular >= lines;
}

// Greedy partition of `text` into consecutive word spans of at most
// max_words words each, preserving the original bytes between the first
// and last word of every piece.
inline std::vector<std::string> greedy_word_split(std::string_view text, size_t max_words) {
    std::vector<std::string> out;
    const auto words = word_spans(text);
    for (size_t i = 0; i < words.size(); i += max_words) {
        size_t last = std::min(i + max_words, words.size()) - 1;
        out.emplace_back(text.substr(words[i].first, words[last].second - words[i].first));
    }
    return out;
}

// Splits an oversized section into chunk units parented to it. Returns
// an empty list when no split applies (small or tabular sections); on a
// split the caller must empty the section's body — the chunks carry the
// content.
inline std::vector<InfoUnit> split_oversized(const InfoUnit& unit, const ChunkingPolicy& policy) {
    if (unit.kind != NodeKind::section || unit.is_tabular) return {};
    const auto words = word_spans(unit.body);
    if (words.size() <= policy.max_words) return {};
    std::vector<InfoUnit> chunks;
    auto pieces = greedy_word_split(unit.body, policy.max_words);
    for (size_t k = 0; k < pieces.size(); ++k) {
        InfoUnit c;
        c.id = unit.id + "/" + std::to_string(k + 1);
        c.doc_id = unit.doc_id;
        c.title = "";
        c.body = std::move(pieces[k]);
        c.kind = NodeKind::chunk;
        chunks.push_back(std::move(c));
    }
    return chunks;
}

// ---------------------------------------------------------------------------
// Mention extraction
// ---------------------------------------------------------------------------

// Lookup table from normalized lowercase alias/title to candidate doc ids.
struct AliasTable {
    // Keys are normalized lowercase; values are doc ids (more than one on
    // a title/alias collision, which resolution reports as ambiguous).
    std::map<std::string, std::vector<std::string>> by_name;

    static AliasTable build(const CorpusManifest& manifest) {
        AliasTable t;
        for (const auto& d : manifest.documents) {
            auto add = [&](const std::string& name) {
                std::string key = to_lower(normalize_ws(name));
                if (key.empty()) return;
                auto& ids = t.by_name[key];
                if (std::find(ids.begin(), ids.end(), d.doc_id) == ids.end())
                    ids.push_back(d.doc_id);
            };
            add(d.title);
            for (const auto& a : d.aliases) add(a);
        }
        return t;
    }
};

struct MentionOptions {
    size_t window = 80;       // max chars between doc and section parts
    bool sections = true;     // extract clause/section/annex mentions
};

namespace detail {

struct Span {
    size_t begin, end;  // on the normalized body
    std::string key;    // alias key (doc) or canonical code (section)
};

// Canonical mention code: uppercase letter segments, e.g. "a.1" -> "A.1".
inline std::string canonical_code(std::string_view raw) {
    std::string out(raw);
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

// Matches a clause code at `pos`: [0-9]+(\.[0-9]+)* or [A-Za-z](\.[0-9]+)*.
// Single-segment codes are allowed ("clause 5", "annex A").
inline size_t match_mention_code(std::string_view s, size_t pos) {
    size_t i = pos;
    if (i >= s.size()) return 0;
    if (std::isdigit(static_cast<unsigned char>(s[i]))) {
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    } else if (std::isalpha(static_cast<unsigned char>(s[i]))) {
        ++i;
        if (i < s.size() && is_alnum(s[i])) return 0;  // single letter only
    } else {
        return 0;
    }
    while (i < s.size() && s[i] == '.') {
        size_t j = i + 1;
        size_t digits = 0;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
            ++j;
            ++digits;
        }
        if (digits == 0) break;
        i = j;
    }
    return i - pos;
}

}  // namespace detail

// Finds document-name mentions (manifest titles/aliases), clause/section/
// annex mentions, and combines a doc and a section mention into one when
// they fall within `window` characters of each other.
inline std::vector<Mention> extract_mentions(const InfoUnit& unit, const AliasTable& aliases,
                                             const MentionOptions& opts = {}) {
    std::vector<Mention> out;
    if (unit.body.empty()) return out;
    const std::string norm = normalize_ws(unit.body);
    const std::string lower = to_lower(norm);

    // Document-name spans, longest alias first so that a short alias never
    // shadows a longer one at the same position.
    std::vector<detail::Span> doc_spans;
    {
        std::vector<const std::string*> keys;
        keys.reserve(aliases.by_name.size());
        for (const auto& [k, v] : aliases.by_name) keys.push_back(&k);
        std::sort(keys.begin(), keys.end(), [](const std::string* a, const std::string* b) {
            if (a->size() != b->size()) return a->size() > b->size();
            return *a < *b;
        });
        std::vector<bool> taken(lower.size(), false);
        for (const auto* key : keys) {
            size_t from = 0;
            while (true) {
                size_t at = lower.find(*key, from);
                if (at == std::string::npos) break;
                from = at + 1;
                size_t end = at + key->size();
                bool lb = at == 0 || !is_alnum(lower[at - 1]);
                bool rb = end == lower.size() || !is_alnum(lower[end]);
                if (!lb || !rb) continue;
                bool overlap = false;
                for (size_t i = at; i < end && !overlap; ++i) overlap = taken[i];
                if (overlap) continue;
                for (size_t i = at; i < end; ++i) taken[i] = true;
                doc_spans.push_back({at, end, *key});
            }
        }
        std::sort(doc_spans.begin(), doc_spans.end(),
                  [](const detail::Span& a, const detail::Span& b) { return a.begin < b.begin; });
    }

    // Clause/section/annex spans.
    std::vector<detail::Span> sec_spans;
    if (opts.sections) {
        static const std::string_view kKeywords[] = {"clause", "section", "annex"};
        for (std::string_view kw : kKeywords) {
            size_t from = 0;
            while (true) {
                size_t at = lower.find(kw, from);
                if (at == std::string::npos) break;
                from = at + 1;
                size_t end = at + kw.size();
                bool lb = at == 0 || !is_alnum(lower[at - 1]);
                if (!lb || end >= norm.size() || norm[end] != ' ') continue;
                size_t code_at = end + 1;
                size_t len = detail::match_mention_code(norm, code_at);
                if (len == 0) continue;
                sec_spans.push_back({at, code_at + len,
                                     detail::canonical_code(std::string_view(norm).substr(code_at, len))});
            }
        }
        std::sort(sec_spans.begin(), sec_spans.end(),
                  [](const detail::Span& a, const detail::Span& b) { return a.begin < b.begin; });
    }

    // Pair doc and section spans within the window, either order.
    std::vector<bool> sec_used(sec_spans.size(), false);
    for (const auto& d : doc_spans) {
        Mention m;
        m.source = unit.id;
        m.doc_part = d.key;
        m.pos = d.begin;
        size_t best = sec_spans.size();
        for (size_t s = 0; s < sec_spans.size(); ++s) {
            if (sec_used[s]) continue;
            if (sec_spans[s].begin >= d.end && sec_spans[s].begin - d.end <= opts.window) {
                best = s;
                break;
            }
        }
        if (best == sec_spans.size()) {
            for (size_t s = 0; s < sec_spans.size(); ++s) {
                if (sec_used[s]) continue;
                if (sec_spans[s].end <= d.begin && d.begin - sec_spans[s].end <= opts.window) best = s;
            }
        }
        if (best != sec_spans.size()) {
            sec_used[best] = true;
            m.section_part = sec_spans[best].key;
            size_t b = std::min(d.begin, sec_spans[best].begin);
            size_t e = std::max(d.end, sec_spans[best].end);
            m.pos = b;
            m.raw = norm.substr(b, e - b);
        } else {
            m.raw = norm.substr(d.begin, d.end - d.begin);
        }
        out.push_back(std::move(m));
    }
    for (size_t s = 0; s < sec_spans.size(); ++s) {
        if (sec_used[s]) continue;
        Mention m;
        m.source = unit.id;
        m.section_part = sec_spans[s].key;
        m.raw = norm.substr(sec_spans[s].begin, sec_spans[s].end - sec_spans[s].begin);
        m.pos = sec_spans[s].begin;
        out.push_back(std::move(m));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Mention& a, const Mention& b) { return a.pos < b.pos; });
    return out;
}

// ---------------------------------------------------------------------------
// Mention resolution
// ---------------------------------------------------------------------------

struct ResolveOutcome {
    std::optional<std::string> target;       // node id when resolved
    std::vector<std::string> ambiguous_docs; // populated on a doc-name tie
};

// Section-only mentions resolve within the source's own document
// (internal by default); doc-only against top-level nodes; combined
// mentions match the document first, then the code among its sections.
inline ResolveOutcome resolve_mention(const InfoGraph& graph, const Mention& mention,
                                      const AliasTable& aliases) {
    ResolveOutcome out;
    auto source = graph.ordinal_of(mention.source);
    if (!source) throw Error("mention source not in graph: " + mention.source);

    std::optional<std::string> doc_id;
    if (mention.doc_part) {
        auto it = aliases.by_name.find(*mention.doc_part);
        if (it == aliases.by_name.end()) return out;
        if (it->second.size() > 1) {
            out.ambiguous_docs = it->second;
            return out;
        }
        doc_id = it->second.front();
        if (!graph.ordinal_of(*doc_id)) return out;
    }

    if (!mention.section_part) {
        out.target = doc_id;  // doc-only
        return out;
    }
    const std::string owner = doc_id ? *doc_id : graph.node(*source).doc_id;
    std::string target = owner + "#" + *mention.section_part;
    if (graph.ordinal_of(target)) out.target = target;
    return out;
}

// ---------------------------------------------------------------------------
// build_graph
// ---------------------------------------------------------------------------

struct DocReport {
    std::string doc_id;
    size_t sections = 0;
    size_t chunks = 0;
    std::vector<std::string> errors;
};

struct IngestStats {
    size_t documents_ok = 0;
    size_t nodes = 0;
    size_t parthood_edges = 0;
    size_t citation_edges = 0;
    size_t chunks = 0;
    size_t mentions = 0;
    size_t resolved = 0;
    size_t unresolved = 0;
    std::vector<DocReport> per_document;
    std::vector<std::string> warnings;

    bool all_ok() const {
        for (const auto& d : per_document)
            if (!d.errors.empty()) return false;
        return true;
    }
};

struct BuildOptions {
    IngestMode mode = IngestMode::structured_chunks;
    size_t max_words = 300;
    MentionOptions mention;
    unsigned threads = 0;
};

struct BuildResult {
    InfoGraph graph;
    IngestStats stats;
};

// Full construction pipeline over all manifest documents:
// parse -> link parthood -> split oversized -> extract + resolve mentions.
// Per-document failures are collected; the build fails only when zero
// documents ingest.
inline BuildResult build_graph(const CorpusManifest& manifest, const BuildOptions& opts) {
    ChunkingPolicy policy{opts.max_words, opts.mode != IngestMode::vanilla};
    policy.validate();

    struct DocUnits {
        std::vector<InfoUnit> units;
        std::vector<std::pair<std::string, std::string>> parthood;
        DocReport report;
        size_t chunks = 0;
    };
    std::vector<DocUnits> parsed(manifest.documents.size());

    parallel_for(manifest.documents.size(), opts.threads, [&](size_t di) {
        const DocEntry& doc = manifest.documents[di];
        DocUnits& slot = parsed[di];
        slot.report.doc_id = doc.doc_id;
        try {
            std::string text = read_file(doc.path);
            if (opts.mode == IngestMode::vanilla) {
                InfoUnit root;
                root.id = doc.doc_id;
                root.doc_id = doc.doc_id;
                root.title = doc.title;
                root.kind = NodeKind::document;
                slot.units.push_back(std::move(root));
                auto pieces = greedy_word_split(text, policy.max_words);
                for (size_t k = 0; k < pieces.size(); ++k) {
                    InfoUnit c;
                    c.id = doc.doc_id + "/" + std::to_string(k + 1);
                    c.doc_id = doc.doc_id;
                    c.body = std::move(pieces[k]);
                    c.kind = NodeKind::chunk;
                    slot.parthood.emplace_back(c.id, doc.doc_id);
                    slot.units.push_back(std::move(c));
                    ++slot.chunks;
                }
                if (slot.units.size() == 1)
                    log_warn("doc " + doc.doc_id + ": no content words, document node only");
            } else {
                auto units = parse_sections(doc, text);
                for (auto& u : units)
                    if (u.kind == NodeKind::section) u.is_tabular = detect_tabular(u.body);
                slot.parthood = link_parthood(units);
                if (opts.mode == IngestMode::structured_chunks) {
                    std::vector<InfoUnit> with_chunks;
                    for (auto& u : units) {
                        auto chunks = split_oversized(u, policy);
                        if (chunks.empty()) {
                            with_chunks.push_back(std::move(u));
                            continue;
                        }
                        u.body.clear();
                        std::string parent_id = u.id;
                        with_chunks.push_back(std::move(u));
                        for (auto& c : chunks) {
                            slot.parthood.emplace_back(c.id, parent_id);
                            with_chunks.push_back(std::move(c));
                            ++slot.chunks;
                        }
                    }
                    units = std::move(with_chunks);
                }
                slot.units = std::move(units);
                slot.report.sections = slot.units.empty() ? 0 : slot.units.size() - 1 - slot.chunks;
            }
            slot.report.chunks = slot.chunks;
        } catch (const std::exception& e) {
            slot.units.clear();
            slot.parthood.clear();
            slot.report.errors.push_back(e.what());
        }
    });

    BuildResult result;
    IngestStats& stats = result.stats;
    InfoGraph& graph = result.graph;
    for (auto& slot : parsed) {
        stats.per_document.push_back(slot.report);
        if (!slot.report.errors.empty()) continue;
        ++stats.documents_ok;
        stats.chunks += slot.chunks;
        for (auto& u : slot.units) graph.add_node(std::move(u));
        for (const auto& [child, parent] : slot.parthood) graph.add_parthood(child, parent);
        stats.parthood_edges += slot.parthood.size();
    }
    if (stats.documents_ok == 0)
        throw Error("ingestion failed: zero documents ingested");

    // Mentions run over the assembled node table so cross-document
    // references resolve.
    AliasTable aliases = AliasTable::build(manifest);
    MentionOptions mopts = opts.mention;
    mopts.sections = opts.mode != IngestMode::vanilla;
    std::vector<std::vector<Mention>> mentions(graph.size());
    parallel_for(graph.size(), opts.threads, [&](size_t i) {
        mentions[i] = extract_mentions(graph.node(static_cast<InfoGraph::Ord>(i)), aliases, mopts);
    });
    for (size_t i = 0; i < graph.size(); ++i) {
        for (const auto& m : mentions[i]) {
            ++stats.mentions;
            auto res = resolve_mention(graph, m, aliases);
            if (res.target) {
                if (*res.target == m.source) {
                    stats.warnings.push_back("self-citation dropped: " + m.source + " (" + m.raw + ")");
                    ++stats.resolved;
                    continue;
                }
                graph.add_citation(m.source, *res.target);
                ++stats.resolved;
            } else {
                if (!res.ambiguous_docs.empty())
                    stats.warnings.push_back("ambiguous document mention \"" + m.raw + "\" in " +
                                             m.source + ": " + join(res.ambiguous_docs, ", "));
                graph.add_unresolved(m.source, m.raw);
                ++stats.unresolved;
            }
        }
    }

    graph.freeze();
    stats.nodes = graph.size();
    stats.citation_edges = graph.citation_pairs().size();
    return result;
}

}  // namespace normgraph
