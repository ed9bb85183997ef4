// Single-binary CLI: ingest / embed / query / synth-qa / evaluate.
// Logging goes to stderr; data to stdout and files. Exit codes:
//   0 ok, 1 usage/unexpected, 2 operation failed, 3 format version
//   mismatch, 4 stale index, 5 malformed config, 6 partial failure.
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "normgraph/common.hpp"
#include "normgraph/evaluation.hpp"
#include "normgraph/index_io.hpp"
#include "normgraph/manifest.hpp"
#include "normgraph/parser.hpp"
#include "normgraph/qa.hpp"
#include "normgraph/remote.hpp"
#include "normgraph/retrieval.hpp"

namespace normgraph::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kFailed = 2,
    kVersionMismatch = 3,
    kStaleIndex = 4,
    kBadConfig = 5,
    kPartial = 6,
};

struct CliState {
    // global
    unsigned threads = 0;
    std::string log_level = "warn";
    bool json_output = false;

    // ingest
    std::string ingest_manifest;
    std::string ingest_out;
    std::string ingest_mode = "structured-chunks";
    size_t max_words = 300;
    double k1 = 1.5;
    double b = 0.75;
    std::uint32_t dim = 256;
    std::string embed_backend = "deterministic";
    std::string embed_endpoint;
    std::string embed_model = "fnv1a-bow-v1";
    bool do_smooth = false;
    double smooth_alpha = 0.5;
    std::uint32_t smooth_passes = 1;
    size_t mention_window = 80;

    // embed
    std::string embed_index;
    std::string embed_out;

    // query
    std::string query_index;
    std::string query_config;
    std::uint32_t query_k = 8;
    std::string query_text;
    std::uint32_t query_prefilter_n = 100;
    std::uint32_t query_dense_top_m = 50;
    bool flag_rrf = false, flag_no_rrf = false;
    bool flag_expand = false, flag_no_expand = false;
    // set after parse: which overrides were actually given
    bool given_prefilter_n = false, given_dense_top_m = false;
    bool given_dim = false, given_backend = false, given_model = false;

    // synth-qa
    std::string synth_manifest;
    std::uint32_t synth_n = 1000;
    std::uint64_t synth_seed = 0;
    std::string synth_backend = "offline";
    std::string synth_out = "qa.jsonl";
    std::string synth_endpoint;
    std::uint32_t chunk_max_tokens = 400;
    std::uint32_t min_words = 40;
    std::uint32_t min_word_chars = 2;
    std::uint32_t min_modals = 1;
    unsigned synth_concurrency = 4;

    // evaluate
    std::string eval_dataset;
    std::string eval_indexes;
    std::string eval_configs;
    std::string eval_ks = "4,8,16";
    std::string eval_out = "reports";
    bool eval_strict = false;
    bool eval_timing = false;
    double match_threshold = 0.75;
};

inline std::unique_ptr<CLI::App> make_app(CliState& st) {
    auto app = std::make_unique<CLI::App>(
        "normgraph: graph-indexed retrieval and evaluation for normative documents");
    app->require_subcommand(0, 1);
    app->add_option("--threads", st.threads, "Worker threads (0 = auto)");
    app->add_option("--log-level", st.log_level, "debug|info|warn|error|off")
        ->default_val("warn");
    app->add_flag("--json", st.json_output, "Emit a machine-readable summary to stdout");

    auto* ingest = app->add_subcommand("ingest", "Build an index directory from a corpus manifest");
    ingest->add_option("--manifest", st.ingest_manifest, "Corpus manifest JSON")->required();
    ingest->add_option("--out", st.ingest_out, "Index directory to create")->required();
    ingest->add_option("--mode", st.ingest_mode, "vanilla|structured|structured-chunks")
        ->default_val("structured-chunks");
    ingest->add_option("--max-words", st.max_words, "Chunk size limit in words")->default_val(300);
    ingest->add_option("--k1", st.k1, "BM25 k1")->default_val(1.5);
    ingest->add_option("--b", st.b, "BM25 b")->default_val(0.75);
    ingest->add_option("--dim", st.dim, "Embedding dimensionality")->default_val(256);
    ingest->add_option("--backend", st.embed_backend, "Embedder: deterministic|remote")
        ->default_val("deterministic");
    ingest->add_option("--endpoint", st.embed_endpoint, "Remote embedder endpoint URL");
    ingest->add_option("--model", st.embed_model, "Embedder model name");
    ingest->add_flag("--smooth", st.do_smooth, "Apply graph-neighbor smoothing to embeddings");
    ingest->add_option("--alpha", st.smooth_alpha, "Smoothing self-weight in (0,1]")->default_val(0.5);
    ingest->add_option("--passes", st.smooth_passes, "Smoothing passes")->default_val(1);
    ingest->add_option("--window", st.mention_window, "Combined-mention window in chars")
        ->default_val(80);

    auto* embed = app->add_subcommand("embed", "Recompute embeddings of an existing index");
    embed->add_option("--index", st.embed_index, "Index directory to read")->required();
    embed->add_option("--out", st.embed_out, "Output index directory (default: in place)");
    embed->add_option("--dim", st.dim, "Embedding dimensionality")->default_val(256);
    embed->add_option("--backend", st.embed_backend, "Embedder: deterministic|remote")
        ->default_val("deterministic");
    embed->add_option("--endpoint", st.embed_endpoint, "Remote embedder endpoint URL");
    embed->add_option("--model", st.embed_model, "Embedder model name");
    embed->add_flag("--smooth", st.do_smooth, "Apply graph-neighbor smoothing to embeddings");
    embed->add_option("--alpha", st.smooth_alpha, "Smoothing self-weight in (0,1]")->default_val(0.5);
    embed->add_option("--passes", st.smooth_passes, "Smoothing passes")->default_val(1);

    auto* query = app->add_subcommand("query", "Run the retrieval pipeline for one query");
    query->add_option("--index", st.query_index, "Index directory")->required();
    query->add_option("--config", st.query_config, "Pipeline config JSON file");
    query->add_option("--k", st.query_k, "Results to return (k_final)")->default_val(8);
    query->add_option("--text", st.query_text, "Query text")->required();
    query->add_option("--prefilter-n", st.query_prefilter_n, "BM25 prefilter candidate count");
    query->add_option("--dense-top-m", st.query_dense_top_m, "Dense re-ranker keep count");
    query->add_flag("--rrf", st.flag_rrf, "Fuse sparse and dense lists with RRF");
    query->add_flag("--no-rrf", st.flag_no_rrf, "Disable RRF even if the config enables it");
    query->add_flag("--expand", st.flag_expand, "Graph-expand the result seeds");
    query->add_flag("--no-expand", st.flag_no_expand, "Disable expansion even if the config enables it");
    query->add_option("--endpoint", st.embed_endpoint, "Remote embedder endpoint URL");

    auto* synth = app->add_subcommand("synth-qa", "Synthesize a Q&A dataset from a corpus");
    synth->add_option("--manifest", st.synth_manifest, "Corpus manifest JSON")->required();
    synth->add_option("--n", st.synth_n, "Number of chunks to sample")->default_val(1000);
    synth->add_option("--seed", st.synth_seed, "Sampling seed")->default_val(0);
    synth->add_option("--backend", st.synth_backend, "offline|remote")->default_val("offline");
    synth->add_option("--out", st.synth_out, "Output JSONL path")->default_val("qa.jsonl");
    synth->add_option("--endpoint", st.synth_endpoint, "Remote generation endpoint URL");
    synth->add_option("--chunk-max-tokens", st.chunk_max_tokens, "Tokens per eval chunk")
        ->default_val(400);
    synth->add_option("--min-words", st.min_words, "Minimum words per kept chunk")->default_val(40);
    synth->add_option("--min-word-chars", st.min_word_chars, "Minimum chars for a word")
        ->default_val(2);
    synth->add_option("--min-modals", st.min_modals, "Minimum modal verbs per kept chunk")
        ->default_val(1);
    synth->add_option("--concurrency", st.synth_concurrency,
                      "Concurrent in-flight generation requests")
        ->default_val(4);

    auto* eval = app->add_subcommand("evaluate", "Score retriever configurations on a dataset");
    eval->add_option("--dataset", st.eval_dataset, "Q&A dataset JSONL")->required();
    eval->add_option("--indexes", st.eval_indexes, "Comma list of [name=]index-dir")->required();
    eval->add_option("--configs", st.eval_configs, "Sweep config JSON (default: built-in matrix)");
    eval->add_option("--ks", st.eval_ks, "Comma list of K values")->default_val("4,8,16");
    eval->add_option("--out", st.eval_out, "Report output directory")->default_val("reports");
    eval->add_flag("--strict", st.eval_strict, "Non-zero exit when any cell fails");
    eval->add_flag("--timing", st.eval_timing,
                   "Write measured query timing into summary.csv (nondeterministic)");
    eval->add_option("--threshold", st.match_threshold, "Witness containment threshold")
        ->default_val(0.75);
    eval->add_option("--endpoint", st.embed_endpoint, "Remote embedder endpoint URL");

    return app;
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

namespace detail {

inline EmbedderSpec embedder_spec_from(const CliState& st) {
    EmbedderSpec spec;
    auto backend = backend_from(st.embed_backend);
    if (!backend) throw ConfigError("unknown embedder backend: " + st.embed_backend);
    spec.backend = *backend;
    spec.dim = st.dim;
    spec.model_name = st.embed_model;
    spec.endpoint = st.embed_endpoint;
    spec.validate();
    return spec;
}

inline std::string snippet_of(const InfoUnit& u) {
    std::string s = normalize_ws(u.body.empty() ? u.title : u.body);
    if (s.size() > 160) {
        s.resize(157);
        s += "...";
    }
    return s;
}

inline nlohmann::json ranked_list_json(const RankedList& list, const InfoGraph& graph) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : list.entries)
        arr.push_back(nlohmann::json::array({graph.node(e.node).id, e.score}));
    return arr;
}

inline std::vector<std::uint32_t> parse_ks(const std::string& s) {
    std::vector<std::uint32_t> ks;
    size_t b = 0;
    for (size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == ',') {
            std::string part = trim(std::string_view(s).substr(b, i - b));
            b = i + 1;
            if (part.empty()) continue;
            try {
                ks.push_back(static_cast<std::uint32_t>(std::stoul(part)));
            } catch (...) {
                throw ConfigError("bad K value: " + part);
            }
        }
    }
    if (ks.empty()) throw ConfigError("--ks: no K values given");
    return ks;
}

// "[name=]path" comma list; a bare path takes its directory name.
inline std::vector<std::pair<std::string, std::string>> parse_index_specs(const std::string& s) {
    std::vector<std::pair<std::string, std::string>> out;
    size_t b = 0;
    for (size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == ',') {
            std::string part = trim(std::string_view(s).substr(b, i - b));
            b = i + 1;
            if (part.empty()) continue;
            auto eq = part.find('=');
            if (eq != std::string::npos) {
                out.emplace_back(part.substr(0, eq), part.substr(eq + 1));
            } else {
                std::filesystem::path p(part);
                std::string name = p.filename().string();
                if (name.empty()) name = p.parent_path().filename().string();
                out.emplace_back(name, part);
            }
        }
    }
    if (out.empty()) throw ConfigError("--indexes: no index dirs given");
    return out;
}

inline std::vector<SweepConfigEntry> default_sweep_matrix() {
    auto entry = [](std::string name, std::string index, bool rrf, bool expand) {
        SweepConfigEntry e;
        e.name = std::move(name);
        e.index_name = std::move(index);
        e.pipeline.use_rrf = rrf;
        e.pipeline.use_expansion = expand;
        return e;
    };
    return {
        entry("vanilla-dense", "vanilla", false, false),
        entry("vanilla-rrf", "vanilla", true, false),
        entry("structured-dense", "structured", false, false),
        entry("structured-rrf", "structured", true, false),
        entry("structured-chunks-dense", "structured-chunks", false, false),
        entry("structured-chunks-rrf", "structured-chunks", true, false),
        entry("structured-chunks-smooth-dense", "structured-chunks-smooth", false, false),
        entry("structured-chunks-rrf-expand", "structured-chunks", true, true),
    };
}

inline std::vector<SweepConfigEntry> load_sweep_configs(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("configs file: " + std::string(e.what()));
    }
    if (!j.is_array() || j.empty()) throw ConfigError("configs file: expected a non-empty array");
    std::vector<SweepConfigEntry> out;
    try {
        for (const auto& c : j) {
            SweepConfigEntry e;
            e.name = c.at("name").get<std::string>();
            e.index_name = c.at("index").get<std::string>();
            if (c.contains("pipeline")) e.pipeline = PipelineConfig::from_json(c["pipeline"]);
            out.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("configs file: " + std::string(e.what()));
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

inline int cmd_ingest(const CliState& st) {
    auto mode = ingest_mode_from(st.ingest_mode);
    if (!mode) throw ConfigError("unknown ingest mode: " + st.ingest_mode);
    CorpusManifest manifest = CorpusManifest::load(st.ingest_manifest);
    manifest.validate();

    BuildOptions opts;
    opts.mode = *mode;
    opts.max_words = st.max_words;
    opts.mention.window = st.mention_window;
    opts.threads = st.threads;
    BuildResult built = build_graph(manifest, opts);

    Bm25Params params{st.k1, st.b};
    SparseIndex sparse = SparseIndex::build(built.graph, params);

    EmbedderSpec spec = detail::embedder_spec_from(st);
    auto embedder = make_embedder(spec);
    EmbeddingMatrix matrix = embed_graph(*embedder, built.graph, st.threads);
    EmbeddingsMeta emeta;
    emeta.model_name = spec.model_name;
    emeta.backend = backend_name(spec.backend);
    emeta.dim = spec.dim;
    if (st.do_smooth) {
        SmoothingConfig sc{st.smooth_alpha, st.smooth_passes};
        matrix = smooth(matrix, built.graph, sc, st.threads);
        emeta.smoothed = true;
        emeta.alpha = sc.alpha;
        emeta.passes = sc.passes;
    }

    IndexInfo info;
    info.mode = *mode;
    info.created_at = now_rfc3339();
    info.corpus_manifest_path = std::filesystem::absolute(manifest.source_path).string();
    info.corpus_manifest_hash = corpus_hash(manifest);

    IndexPayload payload;
    payload.graph = &built.graph;
    payload.sparse = &sparse;
    payload.embeddings = &matrix;
    payload.embeddings_meta = emeta;
    payload.info = info;
    payload.stats = &built.stats;
    write_index_dir(st.ingest_out, payload);

    for (const auto& d : built.stats.per_document)
        for (const auto& e : d.errors) log_error("doc " + d.doc_id + ": " + e);
    if (st.json_output) {
        nlohmann::json summary{{"index", st.ingest_out},
                               {"mode", ingest_mode_name(*mode)},
                               {"nodes", built.stats.nodes},
                               {"citation_edges", built.stats.citation_edges},
                               {"unresolved_mentions", built.stats.unresolved},
                               {"documents_ok", built.stats.documents_ok},
                               {"documents_failed",
                                built.stats.per_document.size() - built.stats.documents_ok}};
        std::printf("%s\n", summary.dump().c_str());
    }
    log_info("ingested " + std::to_string(built.stats.documents_ok) + " documents into " +
             st.ingest_out);
    return built.stats.all_ok() ? kOk : kPartial;
}

inline int cmd_embed(const CliState& st) {
    std::filesystem::path in_dir = st.embed_index;
    std::filesystem::path out_dir = st.embed_out.empty() ? in_dir : std::filesystem::path(st.embed_out);
    LoadedIndex idx = load_index_dir(in_dir);

    // Unset embedder knobs inherit the index's existing meta.
    CliState effective = st;
    if (!st.given_dim) effective.dim = idx.embeddings_meta.dim;
    if (!st.given_backend) effective.embed_backend = idx.embeddings_meta.backend;
    if (!st.given_model) effective.embed_model = idx.embeddings_meta.model_name;
    EmbedderSpec spec = detail::embedder_spec_from(effective);
    auto embedder = make_embedder(spec);
    EmbeddingMatrix matrix = embed_graph(*embedder, idx.graph, st.threads);
    EmbeddingsMeta emeta;
    emeta.model_name = spec.model_name;
    emeta.backend = backend_name(spec.backend);
    emeta.dim = spec.dim;
    if (st.do_smooth) {
        SmoothingConfig sc{st.smooth_alpha, st.smooth_passes};
        matrix = smooth(matrix, idx.graph, sc, st.threads);
        emeta.smoothed = true;
        emeta.alpha = sc.alpha;
        emeta.passes = sc.passes;
    }

    write_index_dir_files(out_dir,
                          {{"graph.json", read_file(in_dir / "graph.json")},
                           {"bm25.json", read_file(in_dir / "bm25.json")},
                           {"embeddings.bin", embeddings_to_bytes(matrix)},
                           {"embeddings_meta.json", emeta.to_json().dump(2) + "\n"},
                           {"ingest_report.json", read_file(in_dir / "ingest_report.json")}});
    if (st.json_output) {
        nlohmann::json summary{{"index", out_dir.string()},
                               {"smoothed", emeta.smoothed},
                               {"alpha", emeta.alpha},
                               {"passes", emeta.passes},
                               {"dim", emeta.dim}};
        std::printf("%s\n", summary.dump().c_str());
    }
    return kOk;
}

namespace detail {

inline std::unique_ptr<Embedder> query_embedder_for(const LoadedIndex& idx, const CliState& st) {
    auto backend = backend_from(idx.embeddings_meta.backend);
    if (!backend) throw ConfigError("index has unknown embedder backend: " + idx.embeddings_meta.backend);
    EmbedderSpec spec;
    spec.backend = *backend;
    spec.dim = idx.embeddings_meta.dim;
    spec.model_name = idx.embeddings_meta.model_name;
    spec.endpoint = st.embed_endpoint;
    return make_embedder(spec);
}

inline PipelineConfig pipeline_config_from(const CliState& st) {
    PipelineConfig config;
    if (!st.query_config.empty()) {
        try {
            config = PipelineConfig::from_json(nlohmann::json::parse(read_file(st.query_config)));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("pipeline config: " + std::string(e.what()));
        }
    }
    config.k_final = st.query_k;
    if (st.given_prefilter_n) config.prefilter_n = st.query_prefilter_n;
    if (st.given_dense_top_m) config.dense_top_m = st.query_dense_top_m;
    if (st.flag_rrf) config.use_rrf = true;
    if (st.flag_no_rrf) config.use_rrf = false;
    if (st.flag_expand) config.use_expansion = true;
    if (st.flag_no_expand) config.use_expansion = false;
    try {
        config.validate();
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return config;
}

}  // namespace detail

inline int cmd_query(const CliState& st) {
    LoadedIndex idx = load_index_dir(st.query_index);
    if (index_is_stale(idx))
        throw StaleIndexError("index " + st.query_index + " is stale: corpus changed since ingest");
    PipelineConfig config = detail::pipeline_config_from(st);
    auto embedder = detail::query_embedder_for(idx, st);

    PipelineResult res = run_pipeline(st.query_text, idx.view(), *embedder, config);

    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : res.final.entries) {
        const InfoUnit& u = idx.graph.node(e.node);
        entries.push_back(nlohmann::json{{"node_id", u.id},
                                         {"score", e.score},
                                         {"doc_id", u.doc_id},
                                         {"section_code", u.section_code
                                                              ? nlohmann::json(*u.section_code)
                                                              : nlohmann::json()},
                                         {"title", u.title},
                                         {"snippet", detail::snippet_of(u)}});
    }
    nlohmann::json trace{{"sparse", detail::ranked_list_json(res.trace.sparse, idx.graph)},
                         {"dense", detail::ranked_list_json(res.trace.dense, idx.graph)}};
    if (res.trace.fused) trace["fused"] = detail::ranked_list_json(*res.trace.fused, idx.graph);
    if (res.trace.expanded)
        trace["expanded"] = detail::ranked_list_json(*res.trace.expanded, idx.graph);
    nlohmann::json out{{"query", st.query_text}, {"entries", entries}, {"trace", trace}};
    std::printf("%s\n", out.dump(2).c_str());
    return kOk;
}

inline int cmd_synth(const CliState& st) {
    CorpusManifest manifest = CorpusManifest::load(st.synth_manifest);
    manifest.validate();
    SynthesisConfig config;
    config.chunk_max_tokens = st.chunk_max_tokens;
    config.min_words = st.min_words;
    config.min_word_chars = st.min_word_chars;
    config.min_modals = st.min_modals;
    config.sample_n = st.synth_n;
    config.seed = st.synth_seed;
    config.concurrency = st.synth_concurrency;

    std::unique_ptr<QaBackend> backend;
    if (st.synth_backend == "offline") {
        backend = std::make_unique<OfflineTemplateBackend>();
    } else if (st.synth_backend == "remote") {
        if (st.synth_endpoint.empty())
            throw ConfigError("synth-qa --backend remote requires --endpoint");
        backend = std::make_unique<RemoteQaBackend>(st.synth_endpoint);
    } else {
        throw ConfigError("unknown synth backend: " + st.synth_backend);
    }

    SynthesisResult result = synthesize_dataset(manifest, config, *backend);
    write_file(st.synth_out, qa_to_jsonl(result.pairs));
    if (st.json_output) {
        nlohmann::json summary{{"out", st.synth_out},
                               {"pairs", result.pairs.size()},
                               {"chunks_total", result.chunks_total},
                               {"chunks_eligible", result.chunks_eligible},
                               {"generation_failures", result.generation_failures}};
        std::printf("%s\n", summary.dump().c_str());
    }
    log_info("wrote " + std::to_string(result.pairs.size()) + " pairs to " + st.synth_out);
    return kOk;
}

inline int cmd_evaluate(const CliState& st) {
    namespace fs = std::filesystem;
    auto pairs = qa_from_jsonl(read_file(st.eval_dataset));
    auto specs = detail::parse_index_specs(st.eval_indexes);
    auto Ks = detail::parse_ks(st.eval_ks);
    std::vector<SweepConfigEntry> configs = st.eval_configs.empty()
                                                ? detail::default_sweep_matrix()
                                                : detail::load_sweep_configs(st.eval_configs);
    MatchRule rule;
    rule.threshold = st.match_threshold;
    try {
        rule.validate();
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }

    std::map<std::string, LoadedIndex> loaded;
    std::map<std::string, std::unique_ptr<Embedder>> embedders;
    std::vector<CellError> load_errors;
    for (const auto& [name, dir] : specs) {
        try {
            LoadedIndex idx = load_index_dir(dir);
            if (index_is_stale(idx))
                throw StaleIndexError("index " + dir + " is stale: corpus changed since ingest");
            embedders[name] = detail::query_embedder_for(idx, st);
            loaded.emplace(name, std::move(idx));
        } catch (const VersionMismatchError&) {
            throw;
        } catch (const StaleIndexError&) {
            throw;
        } catch (const std::exception& e) {
            log_error(std::string("index ") + name + ": " + e.what());
            for (const auto& cfg : configs)
                if (cfg.index_name == name)
                    for (auto K : Ks) load_errors.push_back({cfg.name, K, e.what()});
        }
    }

    std::map<std::string, NamedIndex> views;
    for (auto& [name, idx] : loaded) {
        NamedIndex v;
        v.graph = &idx.graph;
        v.sparse = &idx.sparse;
        v.embeddings = &idx.embeddings;
        v.embedder = embedders.at(name).get();
        views.emplace(name, v);
    }

    SweepResult sweep = run_sweep(pairs, views, configs, Ks, rule, st.threads);
    // Cells that failed at load time are already covered by run_sweep's
    // missing-index records; keep the more specific load message.
    for (auto& err : load_errors) {
        auto it = std::find_if(sweep.errors.begin(), sweep.errors.end(), [&](const CellError& c) {
            return c.config_name == err.config_name && c.K == err.K;
        });
        if (it != sweep.errors.end()) it->message = err.message;
    }

    fs::create_directories(st.eval_out);
    for (const auto& report : sweep.reports) {
        fs::path p = fs::path(st.eval_out) /
                     ("report_" + report.config_name + "_" + std::to_string(report.K) + ".json");
        write_file(p, report_to_json(report).dump(2) + "\n");
    }
    write_file(fs::path(st.eval_out) / "summary.csv", summary_csv(sweep.reports, st.eval_timing));
    if (!sweep.errors.empty()) {
        nlohmann::json errs = nlohmann::json::array();
        for (const auto& e : sweep.errors)
            errs.push_back(nlohmann::json{{"config", e.config_name}, {"k", e.K}, {"error", e.message}});
        write_file(fs::path(st.eval_out) / "errors.json", errs.dump(2) + "\n");
        for (const auto& e : sweep.errors)
            log_error("cell " + e.config_name + "@" + std::to_string(e.K) + ": " + e.message);
    }
    if (st.json_output) {
        nlohmann::json summary{{"out", st.eval_out},
                               {"cells_ok", sweep.reports.size()},
                               {"cells_failed", sweep.errors.size()},
                               {"pairs_input", sweep.n_pairs_input},
                               {"pairs_valid", sweep.n_pairs_valid}};
        std::printf("%s\n", summary.dump().c_str());
    }
    if (st.eval_strict && !sweep.errors.empty()) return kPartial;
    return kOk;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int run(std::vector<std::string> args) {
    CliState st;
    auto app = make_app(st);
    try {
        // CLI11 parses reversed vectors.
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app->parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app->exit(e);
    }
    if (auto* q = app->get_subcommand("query"); q->parsed()) {
        st.given_prefilter_n = q->count("--prefilter-n") > 0;
        st.given_dense_top_m = q->count("--dense-top-m") > 0;
    }
    if (auto* em = app->get_subcommand("embed"); em->parsed()) {
        st.given_dim = em->count("--dim") > 0;
        st.given_backend = em->count("--backend") > 0;
        st.given_model = em->count("--model") > 0;
    }
    try {
        log_level() = parse_log_level(st.log_level);
        if (app->got_subcommand("ingest")) return cmd_ingest(st);
        if (app->got_subcommand("embed")) return cmd_embed(st);
        if (app->got_subcommand("query")) return cmd_query(st);
        if (app->got_subcommand("synth-qa")) return cmd_synth(st);
        if (app->got_subcommand("evaluate")) return cmd_evaluate(st);
        std::fprintf(stderr, "%s", app->help().c_str());
        return kUsage;
    } catch (const VersionMismatchError& e) {
        log_error(e.what());
        return kVersionMismatch;
    } catch (const StaleIndexError& e) {
        log_error(e.what());
        return kStaleIndex;
    } catch (const ConfigError& e) {
        log_error(e.what());
        return kBadConfig;
    } catch (const Error& e) {
        log_error(e.what());
        return kFailed;
    } catch (const std::exception& e) {
        log_error(std::string("unexpected: ") + e.what());
        return kUsage;
    }
}

inline int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(std::move(args));
}

}  // namespace normgraph::cli
