// HTTP-backed embedder and Q&A generation backends. Both speak a small
// JSON contract to a configurable endpoint; auth comes from an
// environment variable so secrets never land in config files.
#pragma once

#include <cstdlib>
#include <memory>
#include <optional>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "normgraph/common.hpp"
#include "normgraph/embeddings.hpp"
#include "normgraph/qa.hpp"

namespace normgraph {

struct EndpointParts {
    std::string base;  // scheme://host[:port]
    std::string path;  // /path, defaults to "/"
};

inline EndpointParts parse_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) throw Error("endpoint must include a scheme: " + endpoint);
    auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

inline httplib::Headers auth_headers(const std::string& auth_env) {
    httplib::Headers headers;
    if (!auth_env.empty()) {
        if (const char* token = std::getenv(auth_env.c_str()); token && *token)
            headers.emplace("Authorization", std::string("Bearer ") + token);
    }
    return headers;
}

// POSTs {"model", "text"} and expects {"embedding": [dim floats]}; the
// vector is L2-normalized on this side. A fresh connection per request
// keeps embed() safe to call from parallel workers.
class RemoteEmbedder : public Embedder {
public:
    explicit RemoteEmbedder(EmbedderSpec spec) : spec_(std::move(spec)) {
        spec_.validate();
        auto parts = parse_endpoint(spec_.endpoint);
        base_ = parts.base;
        path_ = parts.path;
    }

    std::uint32_t dim() const override { return spec_.dim; }

    std::vector<float> embed(const std::string& text) override {
        httplib::Client client(base_);
        client.set_connection_timeout(10);
        client.set_read_timeout(60);
        nlohmann::json body{{"model", spec_.model_name}, {"text", text}};
        auto res = client.Post(path_, auth_headers(spec_.auth_env), body.dump(),
                               "application/json");
        if (!res)
            throw Error("remote embedder: transport error against " + spec_.endpoint + ": " +
                        httplib::to_string(res.error()));
        if (res->status != 200)
            throw Error("remote embedder: HTTP " + std::to_string(res->status));
        std::vector<float> v;
        try {
            v = nlohmann::json::parse(res->body).at("embedding").get<std::vector<float>>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(std::string("remote embedder: bad response: ") + e.what());
        }
        if (v.size() != spec_.dim)
            throw Error("remote embedder: expected dim " + std::to_string(spec_.dim) + ", got " +
                        std::to_string(v.size()));
        double s = 0;
        for (float x : v) s += static_cast<double>(x) * x;
        double norm = std::sqrt(s);
        if (norm > 0)
            for (float& x : v) x = static_cast<float>(x / norm);
        return v;
    }

private:
    EmbedderSpec spec_;
    std::string base_;
    std::string path_;
};

// POSTs {"prompt"} and expects {"question", "answer", "witnesses"}.
// Witness enforcement happens in generate_pair, not here. Thread-safe:
// synthesis runs bounded concurrent requests against it.
class RemoteQaBackend : public QaBackend {
public:
    RemoteQaBackend(std::string endpoint, std::string auth_env = "NORMGRAPH_API_TOKEN")
        : endpoint_(std::move(endpoint)), auth_env_(std::move(auth_env)) {
        auto parts = parse_endpoint(endpoint_);
        base_ = parts.base;
        path_ = parts.path;
    }

    const char* name() const override { return "remote_llm"; }

    std::optional<RawGeneration> generate(const EvalChunk& chunk) override {
        httplib::Client client(base_);
        client.set_connection_timeout(10);
        client.set_read_timeout(120);
        std::string prompt = std::string(kQaPromptTemplate) + chunk.text;
        nlohmann::json body{{"prompt", prompt}};
        auto res = client.Post(path_, auth_headers(auth_env_), body.dump(), "application/json");
        if (!res)
            throw Error("remote qa: transport error against " + endpoint_ + ": " +
                        httplib::to_string(res.error()));
        if (res->status != 200) throw Error("remote qa: HTTP " + std::to_string(res->status));
        try {
            auto j = nlohmann::json::parse(res->body);
            RawGeneration g;
            g.question = j.at("question").get<std::string>();
            g.answer = j.at("answer").get<std::string>();
            g.witnesses = j.at("witnesses").get<std::vector<std::string>>();
            return g;
        } catch (const nlohmann::json::exception& e) {
            throw Error(std::string("remote qa: bad response: ") + e.what());
        }
    }

private:
    std::string endpoint_;
    std::string auth_env_;
    std::string base_;
    std::string path_;
};

inline std::unique_ptr<Embedder> make_embedder(const EmbedderSpec& spec) {
    spec.validate();
    if (spec.backend == EmbedderSpec::Backend::deterministic_local)
        return std::make_unique<DeterministicEmbedder>(spec.dim);
    return std::make_unique<RemoteEmbedder>(spec);
}

}  // namespace normgraph
