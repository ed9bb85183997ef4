#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "normgraph/retrieval.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace normgraph;

namespace {

EmbeddingMatrix matrix_of(std::uint32_t dim, const std::vector<std::vector<float>>& rows) {
    EmbeddingMatrix m;
    m.dim = dim;
    m.count = static_cast<std::uint32_t>(rows.size());
    for (const auto& r : rows) m.data.insert(m.data.end(), r.begin(), r.end());
    m.recompute_norms();
    return m;
}

RankedList list_of(std::vector<std::pair<std::uint32_t, double>> entries,
                   Provenance p = Provenance::sparse) {
    RankedList l;
    l.provenance = p;
    for (auto [n, s] : entries) l.entries.push_back({n, s});
    return l;
}

}  // namespace

TEST_CASE("dense_rerank") {
    const double s2 = std::sqrt(2.0) / 2.0;
    auto m = matrix_of(2, {{1.0f, 0.0f}, {0.0f, 1.0f}, {float(s2), float(s2)}});
    std::vector<float> query{1.0f, 0.0f};

    SECTION("single candidate keeps its cosine score") {
        auto out = dense_rerank(list_of({{1, 9.9}}), query, m, 5);
        REQUIRE(out.entries.size() == 1);
        CHECK(out.entries[0].node == 1);
        CHECK_THAT(out.entries[0].score, Catch::Matchers::WithinAbs(0.0, 1e-12));
    }

    SECTION("identical embedding ranks first with score 1") {
        auto out = dense_rerank(list_of({{1, 3.0}, {0, 2.0}}), query, m, 5);
        REQUIRE(out.entries.size() == 2);
        CHECK(out.entries[0].node == 0);
        CHECK_THAT(out.entries[0].score, Catch::Matchers::WithinAbs(1.0, 1e-12));
    }

    SECTION("hand-constructed three-candidate ordering") {
        auto out = dense_rerank(list_of({{0, 3.0}, {1, 2.0}, {2, 1.0}}), query, m, 5);
        REQUIRE(out.entries.size() == 3);
        CHECK(out.entries[0].node == 0);
        CHECK(out.entries[1].node == 2);
        CHECK(out.entries[2].node == 1);
        CHECK_THAT(out.entries[0].score, Catch::Matchers::WithinAbs(1.0, 1e-12));
        CHECK_THAT(out.entries[1].score, Catch::Matchers::WithinAbs(s2, 1e-6));
        CHECK_THAT(out.entries[2].score, Catch::Matchers::WithinAbs(0.0, 1e-12));
    }

    SECTION("truncates to m and matches exhaustive cosine sort") {
        auto out = dense_rerank(list_of({{0, 3.0}, {1, 2.0}, {2, 1.0}}), query, m, 2);
        REQUIRE(out.entries.size() == 2);
        CHECK(out.entries[0].node == 0);
        CHECK(out.entries[1].node == 2);
    }

    SECTION("dimension mismatch throws") {
        std::vector<float> bad{1.0f, 0.0f, 0.0f};
        CHECK_THROWS_AS(dense_rerank(list_of({{0, 1.0}}), bad, m, 5), Error);
    }
}

TEST_CASE("rrf_fuse") {
    FusionConfig cfg;  // k = 60

    SECTION("node ranked 1 in both lists") {
        auto out = rrf_fuse({list_of({{7, 5.0}, {3, 4.0}}), list_of({{7, 0.9}, {4, 0.8}})}, cfg);
        REQUIRE_FALSE(out.entries.empty());
        CHECK(out.entries[0].node == 7);
        CHECK_THAT(out.entries[0].score, Catch::Matchers::WithinAbs(2.0 / 61.0, 1e-12));
    }

    SECTION("node in only one list at rank 1") {
        auto out = rrf_fuse({list_of({{7, 5.0}}), list_of({{4, 0.8}})}, cfg);
        for (const auto& e : out.entries)
            CHECK_THAT(e.score, Catch::Matchers::WithinAbs(1.0 / 61.0, 1e-12));
    }

    SECTION("symmetric lists tie-break by best rank then canonical order") {
        // [A,B] and [B,A]: both score 1/61 + 1/62, best rank 1 each, so
        // canonical node order decides.
        auto out = rrf_fuse({list_of({{0, 2.0}, {1, 1.0}}), list_of({{1, 2.0}, {0, 1.0}})}, cfg);
        REQUIRE(out.entries.size() == 2);
        CHECK_THAT(out.entries[0].score, Catch::Matchers::WithinAbs(1.0 / 61 + 1.0 / 62, 1e-12));
        CHECK_THAT(out.entries[1].score, Catch::Matchers::WithinAbs(1.0 / 61 + 1.0 / 62, 1e-12));
        CHECK(out.entries[0].node == 0);
        CHECK(out.entries[1].node == 1);
    }

    SECTION("requires at least two lists") {
        CHECK_THROWS_AS(rrf_fuse({list_of({{0, 1.0}})}, cfg), Error);
    }

    SECTION("rank-invariance: monotone transforms of scores change nothing") {
        ngtest::Rng rng(3);
        for (int iter = 0; iter < 50; ++iter) {
            std::vector<std::pair<std::uint32_t, double>> a, b;
            std::set<std::uint32_t> used_a, used_b;
            size_t na = rng.in(1, 20), nb = rng.in(1, 20);
            double sa = 100.0, sb = 50.0;
            for (size_t i = 0; i < na; ++i) {
                std::uint32_t n = static_cast<std::uint32_t>(rng.below(30));
                if (!used_a.insert(n).second) continue;
                a.emplace_back(n, sa -= rng.real01() + 0.01);
            }
            for (size_t i = 0; i < nb; ++i) {
                std::uint32_t n = static_cast<std::uint32_t>(rng.below(30));
                if (!used_b.insert(n).second) continue;
                b.emplace_back(n, sb -= rng.real01() + 0.01);
            }
            if (a.empty() || b.empty()) continue;
            auto base = rrf_fuse({list_of(a), list_of(b)}, cfg);
            // strictly monotone transform: exp(x / 10) keeps order
            auto ta = a;
            for (auto& [n, s] : ta) s = std::exp(s / 10.0);
            auto tb = b;
            for (auto& [n, s] : tb) s = std::exp(s / 10.0);
            auto transformed = rrf_fuse({list_of(ta), list_of(tb)}, cfg);
            REQUIRE(base.entries.size() == transformed.entries.size());
            for (size_t i = 0; i < base.entries.size(); ++i) {
                REQUIRE(base.entries[i].node == transformed.entries[i].node);
                REQUIRE(base.entries[i].score == transformed.entries[i].score);
            }
        }
    }

    SECTION("property: matches the direct formula on random list pairs") {
        ngtest::Rng rng(17);
        for (int iter = 0; iter < 200; ++iter) {
            std::vector<std::uint32_t> la, lb;
            std::set<std::uint32_t> ua, ub;
            size_t na = rng.in(1, 50), nb = rng.in(1, 50);
            for (size_t i = 0; i < na; ++i) {
                auto n = static_cast<std::uint32_t>(rng.below(80));
                if (ua.insert(n).second) la.push_back(n);
            }
            for (size_t i = 0; i < nb; ++i) {
                auto n = static_cast<std::uint32_t>(rng.below(80));
                if (ub.insert(n).second) lb.push_back(n);
            }
            double k = 1.0 + rng.real01() * 100.0;
            auto mk = [](const std::vector<std::uint32_t>& ids) {
                RankedList l;
                double s = 1000;
                for (auto n : ids) l.entries.push_back({n, s -= 1});
                return l;
            };
            auto got = rrf_fuse({mk(la), mk(lb)}, FusionConfig{k});
            auto want = ngtest::oracle::rrf_reference({la, lb}, k);
            REQUIRE(got.entries.size() == want.size());
            for (const auto& e : got.entries)
                REQUIRE_THAT(e.score, Catch::Matchers::WithinAbs(want.at(e.node), 1e-12));
            for (size_t i = 1; i < got.entries.size(); ++i)
                REQUIRE(got.entries[i - 1].score >= got.entries[i].score);
        }
    }
}

TEST_CASE("expand_and_rerank") {
    // star: seed 0 at the center of 1,2; 3 hangs off 1; plus 4 isolated
    InfoGraph g;
    for (int i = 0; i < 5; ++i) {
        InfoUnit u;
        u.id = "n" + std::to_string(i);
        u.doc_id = u.id;
        u.kind = NodeKind::document;
        g.add_node(u);
    }
    g.add_citation("n0", "n1");
    g.add_citation("n0", "n2");
    g.add_citation("n1", "n3");
    g.freeze();

    const std::uint32_t dim = 4;
    // n0 aligned with the query, others orthogonal
    auto m = matrix_of(dim, {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}, {0, 1, 1, 0}});
    std::vector<float> q{1, 0, 0, 0};
    auto seeds = list_of({{0, 0.7}}, Provenance::dense);

    SECTION("term isolation: gamma=0, beta=0 leaves alpha * seed cosim") {
        ExpanderConfig cfg;
        cfg.alpha = 2.5;
        cfg.beta = 0;
        cfg.gamma = 0;
        auto out = expand_and_rerank(seeds, g, m, q, cfg);
        // neighbors of 0: {1, 2}; each connected to the single seed with
        // cosim(seed, q) = 1
        REQUIRE(out.entries.size() == 3);  // seed + 2 neighbors
        CHECK(out.entries[0].node == 0);
        for (size_t i = 1; i < out.entries.size(); ++i)
            CHECK_THAT(out.entries[i].score, Catch::Matchers::WithinAbs(2.5, 1e-9));
    }

    SECTION("hand case: alpha=beta=gamma=1, neighbor cosim 0, degree 1 -> 1 - ln 2") {
        // n2 has degree 1 (only neighbor n0)
        ExpanderConfig cfg;
        cfg.alpha = 1;
        cfg.beta = 1;
        cfg.gamma = 1;
        auto out = expand_and_rerank(seeds, g, m, q, cfg);
        double expect = 1.0 + 0.0 - std::log(2.0);
        bool found = false;
        for (const auto& e : out.entries) {
            if (e.node == 2) {
                CHECK_THAT(e.score, Catch::Matchers::WithinAbs(expect, 1e-9));
                CHECK_THAT(e.score, Catch::Matchers::WithinAbs(0.3069, 2e-4));
                found = true;
            }
        }
        CHECK(found);
    }

    SECTION("two seeds sum their connection weights") {
        // node 0 is the shared neighbor of seeds 1 and 2; engineer
        // cosim(seed1, q) = 0.5 and cosim(seed2, q) = 0.25 geometrically.
        std::vector<float> q2{0.5f, static_cast<float>(std::sqrt(0.75))};
        double angle_q = std::atan2(q2[1], q2[0]);
        double angle_s2 = angle_q + std::acos(0.25);
        auto m3 = matrix_of(2, {{0.0f, 0.0f},
                                {1.0f, 0.0f},
                                {static_cast<float>(std::cos(angle_s2)),
                                 static_cast<float>(std::sin(angle_s2))}});
        InfoGraph g2;
        for (int i = 0; i < 3; ++i) {
            InfoUnit u;
            u.id = "m" + std::to_string(i);
            u.doc_id = u.id;
            u.kind = NodeKind::document;
            g2.add_node(u);
        }
        g2.add_citation("m1", "m0");
        g2.add_citation("m2", "m0");
        g2.freeze();
        ExpanderConfig cfg;
        cfg.alpha = 1;
        cfg.beta = 0;
        cfg.gamma = 0;
        auto out = expand_and_rerank(list_of({{1, 1.0}, {2, 0.9}}), g2, m3, q2, cfg);
        bool found = false;
        for (const auto& e : out.entries) {
            if (e.node == 0) {
                CHECK_THAT(e.score, Catch::Matchers::WithinAbs(0.75, 1e-6));
                found = true;
            }
        }
        CHECK(found);
    }

    SECTION("score is strictly decreasing in gamma for connected neighbors") {
        double prev = std::numeric_limits<double>::infinity();
        for (double gamma : {0.0, 0.5, 1.0, 2.0, 8.0}) {
            ExpanderConfig cfg;
            cfg.gamma = gamma;
            auto out = expand_and_rerank(seeds, g, m, q, cfg);
            for (const auto& e : out.entries) {
                if (e.node == 1) {
                    CHECK(e.score < prev);
                    prev = e.score;
                }
            }
        }
    }

    SECTION("expansion never invents nodes and deduplicates") {
        ExpanderConfig cfg;
        auto out = expand_and_rerank(seeds, g, m, q, cfg);
        std::set<std::uint32_t> seen;
        for (const auto& e : out.entries) {
            CHECK(e.node < g.size());
            CHECK(seen.insert(e.node).second);
        }
    }

    SECTION("max_neighbors caps the expansion") {
        ExpanderConfig cfg;
        cfg.max_neighbors = 1;
        auto out = expand_and_rerank(seeds, g, m, q, cfg);
        CHECK(out.entries.size() == 2);  // seed + 1
    }

    SECTION("include_seeds=false merges by score") {
        ExpanderConfig cfg;
        cfg.include_seeds = false;
        auto out = expand_and_rerank(seeds, g, m, q, cfg);
        for (size_t i = 1; i < out.entries.size(); ++i)
            CHECK(out.entries[i - 1].score >= out.entries[i].score);
    }
}

TEST_CASE("property: expander scores match direct formula on random graphs") {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        ngtest::Rng rng(seed);
        auto g = ngtest::random_graph(rng, rng.in(1, 3), rng.in(4, 30), rng.in(2, 15));
        const std::uint32_t dim = 8;
        EmbeddingMatrix m;
        m.dim = dim;
        m.count = static_cast<std::uint32_t>(g.size());
        m.data.resize(static_cast<size_t>(dim) * m.count);
        for (std::uint32_t i = 0; i < m.count; ++i) {
            auto v = ngtest::random_unit_vector(rng, dim);
            std::copy(v.begin(), v.end(), m.row(i).begin());
        }
        m.recompute_norms();
        auto q = ngtest::random_unit_vector(rng, dim);

        size_t n_seeds = rng.in(1, std::min<size_t>(4, g.size()));
        RankedList seeds;
        std::set<std::uint32_t> used;
        for (size_t i = 0; i < n_seeds; ++i) {
            auto n = static_cast<std::uint32_t>(rng.below(g.size()));
            if (used.insert(n).second) seeds.entries.push_back({n, 1.0 - 0.1 * double(i)});
        }

        ExpanderConfig cfg;
        cfg.alpha = rng.real01() * 2;
        cfg.beta = rng.real01() * 2;
        cfg.gamma = rng.real01();
        cfg.max_neighbors = 1000;
        auto out = expand_and_rerank(seeds, g, m, q, cfg);

        // oracle data
        std::vector<std::set<std::uint32_t>> neighbor_sets(g.size());
        std::vector<double> cosims(g.size());
        for (std::uint32_t i = 0; i < g.size(); ++i) {
            for (auto n : g.neighbors(i)) neighbor_sets[i].insert(n);
            cosims[i] = cosine_similarity(m.row(i), q);
        }
        std::vector<std::uint32_t> seed_ids;
        for (const auto& e : seeds.entries) seed_ids.push_back(e.node);

        for (size_t i = seeds.entries.size(); i < out.entries.size(); ++i) {
            const auto& e = out.entries[i];
            double want = ngtest::oracle::expander_reference(e.node, seed_ids, neighbor_sets,
                                                             cosims, cfg.alpha, cfg.beta, cfg.gamma);
            REQUIRE_THAT(e.score, Catch::Matchers::WithinAbs(want, 1e-9));
        }
    }
}

TEST_CASE("run_pipeline") {
    // tiny corpus with a unique dotted clause token in one node
    InfoGraph g;
    auto add = [&](const std::string& id, const std::string& body) {
        InfoUnit u;
        u.id = id;
        u.doc_id = "d";
        u.body = body;
        u.kind = NodeKind::document;
        g.add_node(u);
    };
    add("d0", "general provisions about radio equipment");
    add("d1", "the limit in clause 4.2.2 shall apply to transmitters");
    add("d2", "immunity requirements for receivers");
    g.freeze();

    DeterministicEmbedder emb(64);
    auto matrix = embed_graph(emb, g);
    auto sparse = SparseIndex::build(g);
    IndexView view{&g, &sparse, &matrix};

    PipelineConfig cfg;
    cfg.prefilter_n = 10;
    cfg.dense_top_m = 5;
    cfg.k_final = 2;

    SECTION("exact clause query hits its node first") {
        auto res = run_pipeline("what does clause 4.2.2 require", view, emb, cfg);
        REQUIRE_FALSE(res.final.entries.empty());
        CHECK(g.node(res.final.entries[0].node).id == "d1");
    }

    SECTION("no flags: output equals dense truncation") {
        auto res = run_pipeline("radio equipment provisions", view, emb, cfg);
        auto dense = dense_rerank(res.trace.sparse, emb.embed("radio equipment provisions"),
                                  matrix, cfg.dense_top_m);
        REQUIRE(res.final.entries.size() <= dense.entries.size());
        for (size_t i = 0; i < res.final.entries.size(); ++i)
            CHECK(res.final.entries[i].node == dense.entries[i].node);
    }

    SECTION("k_final larger than candidate count returns what exists") {
        PipelineConfig cfg8 = cfg;
        cfg8.k_final = 8;
        cfg8.dense_top_m = 10;
        auto res = run_pipeline("immunity", view, emb, cfg8);
        CHECK(res.final.entries.size() == 1);
    }

    SECTION("query matching nothing yields an empty final list") {
        auto res = run_pipeline("zzz qqq", view, emb, cfg);
        CHECK(res.final.entries.empty());
    }

    SECTION("rrf and expansion stages populate the trace") {
        PipelineConfig full = cfg;
        full.use_rrf = true;
        full.use_expansion = true;
        auto res = run_pipeline("clause 4.2.2 limits", view, emb, full);
        CHECK(res.trace.fused.has_value());
        CHECK(res.trace.expanded.has_value());
    }

    SECTION("determinism") {
        auto a = run_pipeline("radio immunity clause 4.2.2", view, emb, cfg);
        auto b = run_pipeline("radio immunity clause 4.2.2", view, emb, cfg);
        REQUIRE(a.final.entries.size() == b.final.entries.size());
        for (size_t i = 0; i < a.final.entries.size(); ++i) {
            CHECK(a.final.entries[i].node == b.final.entries[i].node);
            CHECK(a.final.entries[i].score == b.final.entries[i].score);
        }
    }

    SECTION("inconsistent indexes are named in the error") {
        EmbeddingMatrix wrong;
        wrong.dim = 64;
        wrong.count = 2;
        wrong.data.resize(128);
        IndexView bad{&g, &sparse, &wrong};
        CHECK_THROWS_WITH(run_pipeline("radio", bad, emb, cfg),
                          Catch::Matchers::ContainsSubstring("mismatch"));
    }

    SECTION("config invariant k_final <= dense_top_m <= prefilter_n") {
        PipelineConfig bad = cfg;
        bad.k_final = 50;
        CHECK_THROWS_AS(run_pipeline("radio", view, emb, bad), Error);
    }
}
