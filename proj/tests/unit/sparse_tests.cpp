#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "normgraph/sparse.hpp"
#include "normgraph/tokenizer.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace normgraph;

namespace {

InfoGraph one_node_graph(const std::string& title, const std::string& body) {
    InfoGraph g;
    InfoUnit u;
    u.id = "d";
    u.doc_id = "d";
    u.title = title;
    u.body = body;
    u.kind = NodeKind::document;
    g.add_node(u);
    g.freeze();
    return g;
}

// Graph whose node texts are exactly the given token strings (single
// lowercase words, so tokenize() is the identity on them).
InfoGraph graph_from_token_lists(const std::vector<std::vector<std::string>>& nodes) {
    InfoGraph g;
    for (size_t i = 0; i < nodes.size(); ++i) {
        InfoUnit u;
        u.id = "n" + std::to_string(i);
        u.doc_id = u.id;
        u.title = "";
        u.body = join(nodes[i], " ");
        u.kind = NodeKind::document;
        g.add_node(u);
    }
    g.freeze();
    return g;
}

}  // namespace

TEST_CASE("build_sparse counts terms and lengths") {
    auto g = one_node_graph("", "alpha alpha beta");
    auto idx = SparseIndex::build(g);
    REQUIRE(idx.node_count() == 1);
    CHECK(idx.doc_lengths()[0] == 3);
    REQUIRE(idx.postings("alpha"));
    CHECK(idx.postings("alpha")->at(0).tf == 2);
    CHECK(idx.postings("beta")->at(0).tf == 1);
    CHECK(idx.postings("gamma") == nullptr);
    CHECK(idx.avg_doc_length() == 3.0);
}

TEST_CASE("empty-body document indexes its title tokens only") {
    auto g = one_node_graph("Radio Equipment", "");
    auto idx = SparseIndex::build(g);
    CHECK(idx.doc_lengths()[0] == 2);
    CHECK(idx.postings("radio"));
    CHECK(idx.postings("equipment"));
}

TEST_CASE("IDF stays positive even when a term is everywhere") {
    auto g = graph_from_token_lists({{"common", "x"}, {"common", "y"}, {"common", "z"}});
    auto idx = SparseIndex::build(g);
    CHECK(idx.idf("common") > 0.0);
    // df == N: ln(0.5/3.5 + 1)
    CHECK_THAT(idx.idf("common"), Catch::Matchers::WithinAbs(std::log(1.0 + 0.5 / 3.5), 1e-12));
}

TEST_CASE("bm25_score hand-checked single-document case") {
    // Corpus "alpha beta", query "alpha": N=1, df=1, tf=1, len=avglen
    // -> IDF = ln(4/3), tf term = 2.5/2.5 = 1.
    auto g = one_node_graph("", "alpha beta");
    auto idx = SparseIndex::build(g);
    double score = idx.bm25_score({"alpha"}, 0);
    CHECK_THAT(score, Catch::Matchers::WithinAbs(std::log(4.0 / 3.0), 1e-12));
    CHECK_THAT(score, Catch::Matchers::WithinAbs(0.2877, 2e-4));

    SECTION("query with no indexed terms scores 0") {
        CHECK(idx.bm25_score({"missing", "terms"}, 0) == 0.0);
    }

    SECTION("doubling k1 leaves the score unchanged when tf=1 and len=avglen") {
        auto idx2 = SparseIndex::build(g, Bm25Params{3.0, 0.75});
        CHECK_THAT(idx2.bm25_score({"alpha"}, 0), Catch::Matchers::WithinAbs(score, 1e-12));
    }
}

TEST_CASE("property: bm25_score equals the brute-force reference") {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        ngtest::Rng rng(seed);
        auto vocab = ngtest::random_vocab(rng, 12);
        size_t n_nodes = rng.in(1, 50);
        std::vector<std::vector<std::string>> node_tokens(n_nodes);
        for (auto& toks : node_tokens) {
            size_t len = rng.in(0, 30);
            for (size_t i = 0; i < len; ++i) toks.push_back(rng.pick(vocab));
        }
        auto g = graph_from_token_lists(node_tokens);
        Bm25Params params{0.5 + rng.real01() * 2.0, rng.real01()};
        auto idx = SparseIndex::build(g, params);

        std::vector<std::string> query;
        size_t qlen = rng.in(1, 5);
        for (size_t i = 0; i < qlen; ++i) query.push_back(rng.pick(vocab));

        for (size_t node = 0; node < n_nodes; ++node) {
            double got = idx.bm25_score(query, static_cast<std::uint32_t>(node));
            double want =
                ngtest::oracle::bm25_reference(node_tokens, query, node, params.k1, params.b);
            REQUIRE_THAT(got, Catch::Matchers::WithinAbs(want, 1e-9));
        }
    }
}

TEST_CASE("adding a node never changes existing term frequencies") {
    std::vector<std::vector<std::string>> nodes = {{"alpha", "beta"}, {"alpha", "gamma"}};
    auto idx1 = SparseIndex::build(graph_from_token_lists(nodes));
    nodes.push_back({"alpha", "delta"});
    auto idx2 = SparseIndex::build(graph_from_token_lists(nodes));
    for (const auto& term : {"alpha", "beta", "gamma"}) {
        const auto* p1 = idx1.postings(term);
        const auto* p2 = idx2.postings(term);
        REQUIRE(p1);
        REQUIRE(p2);
        for (size_t i = 0; i < p1->size(); ++i) {
            CHECK((*p2)[i].node == (*p1)[i].node);
            CHECK((*p2)[i].tf == (*p1)[i].tf);
        }
    }
}

TEST_CASE("prefilter") {
    auto g = graph_from_token_lists({{"radiated", "emission", "limits"},
                                     {"immunity", "test", "levels"},
                                     {"general", "conditions"},
                                     {"immunity", "procedures", "immunity"}});
    auto idx = SparseIndex::build(g);

    SECTION("query matching nothing yields an empty list") {
        CHECK(idx.prefilter("zebra quark", 10).empty());
    }

    SECTION("n larger than the matching set returns all matches") {
        auto hits = idx.prefilter("immunity", 10);
        CHECK(hits.size() == 2);
    }

    SECTION("node matching both query terms ranks first") {
        auto hits = idx.prefilter("immunity test", 4);
        REQUIRE_FALSE(hits.empty());
        CHECK(hits[0].first == 1);
    }

    SECTION("output is sorted non-increasing and deterministic") {
        auto a = idx.prefilter("immunity test general emission", 10);
        auto b = idx.prefilter("immunity test general emission", 10);
        REQUIRE(a.size() == b.size());
        for (size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].first == b[i].first);
            CHECK(a[i].second == b[i].second);
            if (i) CHECK(a[i - 1].second >= a[i].second);
        }
    }

    SECTION("prefilter scores match bm25_score exactly") {
        auto hits = idx.prefilter("immunity test emission", 10);
        auto terms = tokenize("immunity test emission");
        for (const auto& [node, score] : hits) CHECK(idx.bm25_score(terms, node) == score);
    }

    SECTION("truncation to n keeps the best") {
        auto hits = idx.prefilter("immunity test general emission", 1);
        REQUIRE(hits.size() == 1);
    }
}

TEST_CASE("params validation") {
    InfoGraph g = one_node_graph("", "x");
    CHECK_THROWS_AS(SparseIndex::build(g, Bm25Params{-1.0, 0.5}), Error);
    CHECK_THROWS_AS(SparseIndex::build(g, Bm25Params{1.0, 1.5}), Error);
}
