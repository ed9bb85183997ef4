#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "normgraph/remote.hpp"

using namespace normgraph;

namespace {

// In-process HTTP server for exercising the remote backends hermetically.
struct LocalServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;

    explicit LocalServer() = default;

    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~LocalServer() {
        server.stop();
        if (thread.joinable()) thread.join();
    }

    std::string endpoint(const std::string& path) const {
        return "http://127.0.0.1:" + std::to_string(port) + path;
    }
};

}  // namespace

TEST_CASE("parse_endpoint") {
    auto p = parse_endpoint("http://host:8080/embed");
    CHECK(p.base == "http://host:8080");
    CHECK(p.path == "/embed");
    auto q = parse_endpoint("http://host");
    CHECK(q.base == "http://host");
    CHECK(q.path == "/");
    CHECK_THROWS_AS(parse_endpoint("host/embed"), Error);
}

TEST_CASE("remote embedder") {
    LocalServer srv;
    std::atomic<int> calls{0};
    srv.server.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
        ++calls;
        auto body = nlohmann::json::parse(req.body);
        REQUIRE(body.contains("text"));
        // fixed 4-dim vector, unnormalized on purpose
        res.set_content(nlohmann::json{{"embedding", {3.0, 0.0, 4.0, 0.0}}}.dump(),
                        "application/json");
    });
    srv.server.Post("/short", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(nlohmann::json{{"embedding", {1.0, 2.0}}}.dump(), "application/json");
    });
    srv.start();

    SECTION("vector is normalized client-side") {
        EmbedderSpec spec;
        spec.backend = EmbedderSpec::Backend::remote_http;
        spec.dim = 4;
        spec.endpoint = srv.endpoint("/embed");
        RemoteEmbedder emb(spec);
        auto v = emb.embed("anything");
        REQUIRE(v.size() == 4);
        CHECK_THAT(v[0], Catch::Matchers::WithinAbs(0.6, 1e-6));
        CHECK_THAT(v[2], Catch::Matchers::WithinAbs(0.8, 1e-6));
        CHECK(calls.load() == 1);
    }

    SECTION("wrong dimensionality surfaces as an error") {
        EmbedderSpec spec;
        spec.backend = EmbedderSpec::Backend::remote_http;
        spec.dim = 4;
        spec.endpoint = srv.endpoint("/short");
        RemoteEmbedder emb(spec);
        CHECK_THROWS_WITH(emb.embed("x"), Catch::Matchers::ContainsSubstring("dim"));
    }

    SECTION("transport failure names the endpoint") {
        EmbedderSpec spec;
        spec.backend = EmbedderSpec::Backend::remote_http;
        spec.dim = 4;
        spec.endpoint = "http://127.0.0.1:1/void";  // nothing listens here
        RemoteEmbedder emb(spec);
        CHECK_THROWS_AS(emb.embed("x"), Error);
    }
}

TEST_CASE("remote qa backend") {
    LocalServer srv;
    srv.server.Post("/gen", [&](const httplib::Request& req, httplib::Response& res) {
        auto body = nlohmann::json::parse(req.body);
        std::string prompt = body.at("prompt").get<std::string>();
        REQUIRE(prompt.find("Passage:") != std::string::npos);
        // echo a witness quoted verbatim from the passage tail
        res.set_content(nlohmann::json{{"question", "What shall the device do?"},
                                       {"answer", "The device shall comply."},
                                       {"witnesses", {"The device shall comply."}}}
                            .dump(),
                        "application/json");
    });
    srv.server.Post("/bad", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(nlohmann::json{{"question", "Q"},
                                       {"answer", "A"},
                                       {"witnesses", {"not from the passage"}}}
                            .dump(),
                        "application/json");
    });
    srv.start();

    EvalChunk chunk;
    chunk.doc_id = "d";
    chunk.ordinal = 1;
    chunk.text = "The device shall comply. More context sentences here.";

    SECTION("pair built from a faithful response") {
        RemoteQaBackend backend(srv.endpoint("/gen"));
        auto pair = generate_pair(chunk, backend);
        REQUIRE(pair.has_value());
        CHECK(pair->question == "What shall the device do?");
        CHECK(pair->witnesses == std::vector<std::string>{"The device shall comply."});
    }

    SECTION("misquoted witness discards the pair") {
        RemoteQaBackend backend(srv.endpoint("/bad"));
        CHECK_FALSE(generate_pair(chunk, backend).has_value());
    }

    SECTION("transport errors are swallowed into nullopt by generate_pair") {
        RemoteQaBackend backend("http://127.0.0.1:1/void");
        CHECK_FALSE(generate_pair(chunk, backend).has_value());
    }
}
