// Index directory serialization: graph.json, bm25.json, embeddings.bin,
// embeddings_meta.json and ingest_report.json, plus atomic directory
// replacement and corpus staleness hashing.
#pragma once

#include <cstdint>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "normgraph/common.hpp"
#include "normgraph/embeddings.hpp"
#include "normgraph/graph.hpp"
#include "normgraph/manifest.hpp"
#include "normgraph/parser.hpp"
#include "normgraph/retrieval.hpp"
#include "normgraph/sparse.hpp"

namespace normgraph {

inline constexpr int kIndexFormatVersion = 1;

inline const std::vector<std::string>& index_files() {
    static const std::vector<std::string> kFiles = {"graph.json", "bm25.json", "embeddings.bin",
                                                    "embeddings_meta.json", "ingest_report.json"};
    return kFiles;
}

// ---------------------------------------------------------------------------
// graph.json
// ---------------------------------------------------------------------------

inline nlohmann::json graph_to_json(const InfoGraph& graph) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& u : graph.nodes()) {
        nlohmann::json n{{"id", u.id},         {"doc_id", u.doc_id},
                         {"title", u.title},   {"body", u.body},
                         {"kind", node_kind_name(u.kind)}, {"is_tabular", u.is_tabular}};
        if (u.section_code) n["section_code"] = *u.section_code;
        nodes.push_back(std::move(n));
    }
    nlohmann::json parthood = nlohmann::json::array();
    for (const auto& [child, parent] : graph.ordered_parthood())
        parthood.push_back(nlohmann::json::array({child, parent}));
    nlohmann::json citations = nlohmann::json::array();
    for (const auto& [f, t] : graph.citation_pairs())
        citations.push_back(nlohmann::json::array({graph.node(f).id, graph.node(t).id}));
    nlohmann::json unresolved = nlohmann::json::array();
    for (const auto& [node, raw] : graph.unresolved_mentions())
        unresolved.push_back(nlohmann::json::array({node, raw}));
    return nlohmann::json{{"nodes", nodes},
                          {"parthood", parthood},
                          {"citations", citations},
                          {"unresolved", unresolved}};
}

inline InfoGraph graph_from_json(const nlohmann::json& j) {
    InfoGraph g;
    for (const auto& n : j.at("nodes")) {
        InfoUnit u;
        u.id = n.at("id").get<std::string>();
        u.doc_id = n.at("doc_id").get<std::string>();
        u.title = n.at("title").get<std::string>();
        u.body = n.at("body").get<std::string>();
        auto kind = node_kind_from(n.at("kind").get<std::string>());
        if (!kind) throw Error("graph.json: bad node kind");
        u.kind = *kind;
        u.is_tabular = n.at("is_tabular").get<bool>();
        if (n.contains("section_code")) u.section_code = n["section_code"].get<std::string>();
        g.add_node(std::move(u));
    }
    for (const auto& p : j.at("parthood"))
        g.add_parthood(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    for (const auto& c : j.at("citations"))
        g.add_citation(c.at(0).get<std::string>(), c.at(1).get<std::string>());
    for (const auto& u : j.at("unresolved"))
        g.add_unresolved(u.at(0).get<std::string>(), u.at(1).get<std::string>());
    g.freeze();
    return g;
}

inline std::string graph_to_string(const InfoGraph& graph) { return graph_to_json(graph).dump(2) + "\n"; }

inline InfoGraph load_graph(const std::filesystem::path& path) {
    try {
        return graph_from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw Error("graph.json parse error: " + std::string(e.what()));
    }
}

// ---------------------------------------------------------------------------
// bm25.json
// ---------------------------------------------------------------------------

inline nlohmann::json sparse_to_json(const SparseIndex& index) {
    nlohmann::json postings = nlohmann::json::object();
    for (const auto& [term, plist] : index.sorted_postings()) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& p : plist) arr.push_back(nlohmann::json::array({p.node, p.tf}));
        postings[term] = std::move(arr);
    }
    return nlohmann::json{{"params", {{"k1", index.params().k1}, {"b", index.params().b}}},
                          {"avg_doc_length", index.avg_doc_length()},
                          {"doc_lengths", index.doc_lengths()},
                          {"postings", postings}};
}

inline SparseIndex sparse_from_json(const nlohmann::json& j) {
    Bm25Params params;
    params.k1 = j.at("params").at("k1").get<double>();
    params.b = j.at("params").at("b").get<double>();
    auto doc_lengths = j.at("doc_lengths").get<std::vector<std::uint32_t>>();
    std::vector<std::pair<std::string, std::vector<Posting>>> postings;
    for (const auto& [term, arr] : j.at("postings").items()) {
        std::vector<Posting> plist;
        for (const auto& p : arr)
            plist.push_back({p.at(0).get<std::uint32_t>(), p.at(1).get<std::uint32_t>()});
        postings.emplace_back(term, std::move(plist));
    }
    return SparseIndex::from_parts(params, j.at("avg_doc_length").get<double>(),
                                   std::move(doc_lengths), std::move(postings));
}

inline SparseIndex load_sparse(const std::filesystem::path& path) {
    try {
        return sparse_from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw Error("bm25.json parse error: " + std::string(e.what()));
    }
}

// ---------------------------------------------------------------------------
// embeddings.bin: "NGEM", u32 dim, u32 count, count*dim f32, little endian
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline std::uint32_t get_u32(const std::string& s, size_t at) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(s[at])) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 1])) << 8) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 2])) << 16) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 3])) << 24);
}

}  // namespace detail

inline std::string embeddings_to_bytes(const EmbeddingMatrix& m) {
    std::string out;
    out.reserve(12 + m.data.size() * 4);
    out += "NGEM";
    detail::put_u32(out, m.dim);
    detail::put_u32(out, m.count);
    static_assert(sizeof(float) == 4);
    for (float v : m.data) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        detail::put_u32(out, bits);
    }
    return out;
}

inline EmbeddingMatrix embeddings_from_bytes(const std::string& bytes) {
    if (bytes.size() < 12 || bytes.compare(0, 4, "NGEM") != 0)
        throw Error("embeddings.bin: bad magic");
    EmbeddingMatrix m;
    m.dim = detail::get_u32(bytes, 4);
    m.count = detail::get_u32(bytes, 8);
    size_t expect = 12 + static_cast<size_t>(m.dim) * m.count * 4;
    if (bytes.size() != expect)
        throw Error("embeddings.bin: size mismatch (" + std::to_string(bytes.size()) + " vs " +
                    std::to_string(expect) + ")");
    m.data.resize(static_cast<size_t>(m.dim) * m.count);
    for (size_t i = 0; i < m.data.size(); ++i) {
        std::uint32_t bits = detail::get_u32(bytes, 12 + i * 4);
        std::memcpy(&m.data[i], &bits, 4);
    }
    m.recompute_norms();
    return m;
}

struct EmbeddingsMeta {
    std::string model_name;
    std::string backend = "deterministic_local";
    std::uint32_t dim = 256;
    double alpha = 1.0;
    std::uint32_t passes = 0;
    bool smoothed = false;

    nlohmann::json to_json() const {
        return nlohmann::json{{"model_name", model_name}, {"backend", backend}, {"dim", dim},
                              {"alpha", alpha},           {"passes", passes},   {"smoothed", smoothed}};
    }

    static EmbeddingsMeta from_json(const nlohmann::json& j) {
        EmbeddingsMeta m;
        m.model_name = j.at("model_name").get<std::string>();
        m.backend = j.at("backend").get<std::string>();
        m.dim = j.at("dim").get<std::uint32_t>();
        m.alpha = j.at("alpha").get<double>();
        m.passes = j.at("passes").get<std::uint32_t>();
        m.smoothed = j.at("smoothed").get<bool>();
        return m;
    }
};

// ---------------------------------------------------------------------------
// Corpus staleness hash
// ---------------------------------------------------------------------------

// FNV-1a over the manifest bytes followed by every document's bytes in
// manifest order; detects source-corpus changes behind an index.
inline std::string corpus_hash(const CorpusManifest& manifest) {
    std::uint64_t h = kFnvOffset;
    h = fnv1a64(read_file(manifest.source_path), h);
    for (const auto& d : manifest.documents) h = fnv1a64(read_file(d.path), h);
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// ingest_report.json (embeds the index manifest descriptor)
// ---------------------------------------------------------------------------

struct IndexInfo {
    int version = kIndexFormatVersion;
    IngestMode mode = IngestMode::structured_chunks;
    std::string created_at;            // RFC3339; informational only
    std::string corpus_manifest_path;  // absolute path at build time
    std::string corpus_manifest_hash;
};

inline nlohmann::json ingest_report_to_json(const IndexInfo& info, const IngestStats& stats) {
    nlohmann::json per_doc = nlohmann::json::array();
    for (const auto& d : stats.per_document)
        per_doc.push_back(nlohmann::json{{"doc_id", d.doc_id},
                                         {"sections", d.sections},
                                         {"chunks", d.chunks},
                                         {"errors", d.errors}});
    return nlohmann::json{
        {"index",
         {{"version", info.version},
          {"mode", ingest_mode_name(info.mode)},
          {"files", index_files()},
          {"created_at", info.created_at},
          {"corpus_manifest_path", info.corpus_manifest_path},
          {"corpus_manifest_hash", info.corpus_manifest_hash}}},
        {"counts",
         {{"documents_ok", stats.documents_ok},
          {"nodes", stats.nodes},
          {"parthood_edges", stats.parthood_edges},
          {"citation_edges", stats.citation_edges},
          {"chunks", stats.chunks},
          {"mentions", stats.mentions},
          {"resolved_mentions", stats.resolved},
          {"unresolved_mentions", stats.unresolved}}},
        {"per_document", per_doc},
        {"warnings", stats.warnings},
    };
}

inline IndexInfo index_info_from_report(const nlohmann::json& j) {
    IndexInfo info;
    const auto& idx = j.at("index");
    info.version = idx.at("version").get<int>();
    auto mode = ingest_mode_from(idx.at("mode").get<std::string>());
    if (!mode) throw Error("ingest_report.json: bad mode");
    info.mode = *mode;
    info.created_at = idx.value("created_at", "");
    info.corpus_manifest_path = idx.value("corpus_manifest_path", "");
    info.corpus_manifest_hash = idx.value("corpus_manifest_hash", "");
    return info;
}

inline std::string now_rfc3339() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// ---------------------------------------------------------------------------
// Index directory lifecycle
// ---------------------------------------------------------------------------

struct IndexPayload {
    const InfoGraph* graph = nullptr;
    const SparseIndex* sparse = nullptr;
    const EmbeddingMatrix* embeddings = nullptr;
    EmbeddingsMeta embeddings_meta;
    IndexInfo info;
    const IngestStats* stats = nullptr;
};

// Writes the given files into a temp sibling directory and atomically
// renames it over the target; a partial index is never left in place.
inline void write_index_dir_files(const std::filesystem::path& dir,
                                  const std::vector<std::pair<std::string, std::string>>& files) {
    namespace fs = std::filesystem;
    fs::path parent = dir.parent_path().empty() ? fs::path(".") : dir.parent_path();
    fs::create_directories(parent);
    fs::path tmp = parent / (dir.filename().string() + ".tmp-" +
                             std::to_string(static_cast<unsigned long>(::getpid())));
    std::error_code ec;
    fs::remove_all(tmp, ec);
    fs::create_directories(tmp);
    try {
        for (const auto& [name, content] : files) write_file(tmp / name, content);
        if (fs::exists(dir)) {
            fs::path old = parent / (dir.filename().string() + ".old-" +
                                     std::to_string(static_cast<unsigned long>(::getpid())));
            fs::remove_all(old, ec);
            fs::rename(dir, old);
            fs::rename(tmp, dir);
            fs::remove_all(old, ec);
        } else {
            fs::rename(tmp, dir);
        }
    } catch (...) {
        fs::remove_all(tmp, ec);
        throw;
    }
}

inline void write_index_dir(const std::filesystem::path& dir, const IndexPayload& payload) {
    if (!payload.graph || !payload.sparse || !payload.embeddings || !payload.stats)
        throw Error("write_index_dir: incomplete payload");
    write_index_dir_files(
        dir, {{"graph.json", graph_to_string(*payload.graph)},
              {"bm25.json", sparse_to_json(*payload.sparse).dump(2) + "\n"},
              {"embeddings.bin", embeddings_to_bytes(*payload.embeddings)},
              {"embeddings_meta.json", payload.embeddings_meta.to_json().dump(2) + "\n"},
              {"ingest_report.json",
               ingest_report_to_json(payload.info, *payload.stats).dump(2) + "\n"}});
}

struct LoadedIndex {
    InfoGraph graph;
    SparseIndex sparse;
    EmbeddingMatrix embeddings;
    EmbeddingsMeta embeddings_meta;
    IndexInfo info;
    nlohmann::json report;

    IndexView view() const { return IndexView{&graph, &sparse, &embeddings}; }
};

// Loads and cross-checks an index directory: all files present, supported
// format version, consistent node counts.
inline LoadedIndex load_index_dir(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    for (const auto& f : index_files())
        if (!fs::exists(dir / f))
            throw Error("index " + dir.string() + ": missing file " + f);
    LoadedIndex idx;
    try {
        idx.report = nlohmann::json::parse(read_file(dir / "ingest_report.json"));
    } catch (const nlohmann::json::exception& e) {
        throw Error("ingest_report.json parse error: " + std::string(e.what()));
    }
    idx.info = index_info_from_report(idx.report);
    if (idx.info.version != kIndexFormatVersion)
        throw VersionMismatchError("index " + dir.string() + ": format version " +
                                   std::to_string(idx.info.version) + " unsupported (want " +
                                   std::to_string(kIndexFormatVersion) + ")");
    idx.graph = load_graph(dir / "graph.json");
    idx.sparse = load_sparse(dir / "bm25.json");
    idx.embeddings = embeddings_from_bytes(read_file(dir / "embeddings.bin"));
    try {
        idx.embeddings_meta =
            EmbeddingsMeta::from_json(nlohmann::json::parse(read_file(dir / "embeddings_meta.json")));
    } catch (const nlohmann::json::exception& e) {
        throw Error("embeddings_meta.json parse error: " + std::string(e.what()));
    }
    idx.view().check_consistent();
    if (idx.embeddings.dim != idx.embeddings_meta.dim)
        throw Error("index " + dir.string() + ": embeddings dim mismatch between bin and meta");
    return idx;
}

// Staleness: recomputes the corpus hash when the recorded manifest is
// still readable. Returns true when verification was possible and the
// index is stale.
inline bool index_is_stale(const LoadedIndex& idx) {
    if (idx.info.corpus_manifest_path.empty()) return false;
    std::filesystem::path mpath(idx.info.corpus_manifest_path);
    if (!std::filesystem::exists(mpath)) {
        log_warn("corpus manifest not found, skipping staleness check: " +
                 idx.info.corpus_manifest_path);
        return false;
    }
    try {
        CorpusManifest m = CorpusManifest::load(mpath);
        return corpus_hash(m) != idx.info.corpus_manifest_hash;
    } catch (const std::exception& e) {
        log_warn(std::string("staleness check failed, treating index as stale: ") + e.what());
        return true;
    }
}

}  // namespace normgraph
