// Corpus manifest: the list of pre-extracted plain-text documents to
// ingest, with titles, aliases and optional tables of contents.
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "normgraph/common.hpp"

namespace normgraph {

struct TocEntry {
    std::string code;
    std::string title;
};

struct DocEntry {
    std::string doc_id;
    std::string title;
    std::vector<std::string> aliases;
    std::filesystem::path path;  // resolved against the manifest directory
    std::optional<std::vector<TocEntry>> toc;
};

struct CorpusManifest {
    std::vector<DocEntry> documents;
    std::filesystem::path source_path;  // where the manifest was loaded from

    static CorpusManifest from_json(const nlohmann::json& j,
                                    const std::filesystem::path& base_dir) {
        CorpusManifest m;
        if (!j.contains("documents") || !j["documents"].is_array())
            throw Error("manifest: missing \"documents\" array");
        for (const auto& d : j["documents"]) {
            DocEntry e;
            e.doc_id = d.at("doc_id").get<std::string>();
            e.title = d.at("title").get<std::string>();
            if (d.contains("aliases"))
                e.aliases = d["aliases"].get<std::vector<std::string>>();
            std::filesystem::path p = d.at("path").get<std::string>();
            e.path = p.is_absolute() ? p : base_dir / p;
            if (d.contains("toc") && !d["toc"].is_null()) {
                std::vector<TocEntry> toc;
                for (const auto& t : d["toc"])
                    toc.push_back({t.at("code").get<std::string>(), t.at("title").get<std::string>()});
                e.toc = std::move(toc);
            }
            m.documents.push_back(std::move(e));
        }
        return m;
    }

    static CorpusManifest load(const std::filesystem::path& path) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(path));
        } catch (const nlohmann::json::exception& e) {
            throw Error("manifest " + path.string() + ": " + e.what());
        }
        CorpusManifest m = from_json(j, path.parent_path());
        m.source_path = path;
        return m;
    }

    // doc_ids unique, aliases unique across the corpus, every path readable.
    void validate() const {
        std::unordered_set<std::string> ids;
        std::unordered_set<std::string> aliases;
        for (const auto& d : documents) {
            if (d.doc_id.empty()) throw Error("manifest: empty doc_id");
            if (!ids.insert(d.doc_id).second)
                throw Error("manifest: duplicate doc_id: " + d.doc_id);
            for (const auto& a : d.aliases) {
                std::string key = to_lower(normalize_ws(a));
                if (!aliases.insert(key).second)
                    throw Error("manifest: alias collision across corpus: " + a);
            }
            std::ifstream in(d.path);
            if (!in)
                throw Error("manifest: unreadable document file: " + d.path.string() +
                            " (doc " + d.doc_id + ")");
        }
        if (documents.empty()) throw Error("manifest: no documents");
    }
};

}  // namespace normgraph
