#include <doctest.h>

#include <algorithm>
#include <map>

#include "kgcn/labeling.hpp"
#include "support/oracles.hpp"

using namespace kgcn;

namespace {

Subgraph whole_graph(const Graph& g) {
    std::vector<NodeId> all(g.num_nodes());
    std::iota(all.begin(), all.end(), 0);
    return induced_subgraph(g, all);
}

Subgraph path3() { return whole_graph(build_graph({{0, 1}, {1, 2}}, 3)); }

Subgraph star3() { return whole_graph(build_graph({{0, 1}, {0, 2}, {0, 3}}, 4)); }

/// Counts distinct score classes.
std::size_t class_count(const LabelScores& scores) {
    LabelScores s(scores);
    std::sort(s.begin(), s.end());
    return static_cast<std::size_t>(std::unique(s.begin(), s.end()) - s.begin());
}

}  // namespace

TEST_CASE("degree labeling") {
    CHECK(degree_labeling(path3()) == LabelScores{1, 2, 1});
    CHECK(degree_labeling(star3()) == LabelScores{3, 1, 1, 1});

    const Graph moore3 = grid_graph(3, 3, GridConnectivity::moore);
    const Subgraph king = induced_subgraph(moore3, closed_neighborhood(moore3, 4));
    const auto scores = degree_labeling(king);
    CHECK(scores[4] == 8);         // center
    CHECK(scores[1] == 5);         // edge midpoint
    CHECK(scores[0] == 3);         // corner
}

TEST_CASE("wl refinement separates star center after one round") {
    const auto scores = wl_labeling(star3(), 1);
    CHECK(scores[1] == scores[2]);
    CHECK(scores[2] == scores[3]);
    CHECK(scores[0] != scores[1]);
}

TEST_CASE("wl leaves vertex-transitive graphs uniform") {
    const Subgraph cycle = whole_graph(build_graph({{0, 1}, {1, 2}, {2, 3}, {3, 0}}, 4));
    for (std::size_t iters : {1u, 3u, 10u}) {
        const auto scores = wl_labeling(cycle, iters);
        CHECK(class_count(scores) == 1);
    }
}

TEST_CASE("wl on a 4-path stabilizes at ends vs middles after one round") {
    const Subgraph path = whole_graph(build_graph({{0, 1}, {1, 2}, {2, 3}}, 4));
    const auto one = wl_labeling(path, 1);
    CHECK(one[0] == one[3]);
    CHECK(one[1] == one[2]);
    CHECK(one[0] != one[1]);
    CHECK(class_count(one) == 2);
    // stable: more rounds change nothing
    CHECK(wl_labeling(path, 5) == one);
}

TEST_CASE("wl stability: once stable, further rounds are identical") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const Graph g = oracles::random_graph(9, 0.35, seed);
        const Subgraph sg = whole_graph(g);
        const auto full = wl_labeling(sg, 20);
        CHECK(wl_labeling(sg, 21) == full);
        CHECK(wl_labeling(sg, 40) == full);
    }
}

TEST_CASE("closeness centrality") {
    const auto path = closeness_centrality(path3());
    CHECK(path[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(path[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(path[2] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

    const Subgraph k3 = whole_graph(build_graph({{0, 1}, {1, 2}, {0, 2}}, 3));
    for (double s : closeness_centrality(k3)) CHECK(s == 1.0);

    const Subgraph isolated = whole_graph(build_graph({}, 2));
    CHECK(closeness_centrality(isolated) == LabelScores{0, 0});
}

TEST_CASE("betweenness centrality on named graphs") {
    CHECK(betweenness_centrality(path3()) == LabelScores{0, 1, 0});

    const Subgraph k3 = whole_graph(build_graph({{0, 1}, {1, 2}, {0, 2}}, 3));
    CHECK(betweenness_centrality(k3) == LabelScores{0, 0, 0});

    const auto star = betweenness_centrality(star3());
    CHECK(star[0] == 3.0);
    CHECK(star[1] == 0.0);
}

TEST_CASE("betweenness matches brute-force path counting on small graphs") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto n = static_cast<NodeId>(2 + seed % 6);  // 2..7 nodes
        const Graph g = oracles::random_graph(n, 0.5, 1000 + seed);
        const auto fast = betweenness_centrality(whole_graph(g));
        const auto slow = oracles::betweenness_bruteforce(g);
        REQUIRE(fast.size() == slow.size());
        for (std::size_t v = 0; v < fast.size(); ++v)
            CHECK(fast[v] == doctest::Approx(slow[v]).epsilon(1e-12));
    }
}

TEST_CASE("score labelings are isomorphism equivariant") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const Graph g = oracles::random_graph(8, 0.4, 50 + seed);
        const auto perm = oracles::random_permutation(8, 99 + seed);
        const Graph pg = oracles::permuted_graph(g, perm);
        const Subgraph sg = whole_graph(g);
        const Subgraph psg = whole_graph(pg);

        auto check = [&](auto&& labeler) {
            const auto base = labeler(sg);
            const auto mapped = labeler(psg);
            for (NodeId v = 0; v < 8; ++v) CHECK(mapped[perm[v]] == doctest::Approx(base[v]));
        };
        check([](const Subgraph& s) { return degree_labeling(s); });
        check([](const Subgraph& s) { return wl_labeling(s, 8); });
        check([](const Subgraph& s) { return closeness_centrality(s); });
        check([](const Subgraph& s) { return betweenness_centrality(s); });
    }
}

TEST_CASE("ranking law: lower rank iff higher score, ties share ranks") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        LabelScores scores(9);
        for (double& s : scores) s = static_cast<double>(rng.next_below(4));
        const Ranking ranks = ranking_from_scores(scores);
        for (std::size_t u = 0; u < scores.size(); ++u) {
            CHECK(ranks[u] >= 1);
            CHECK(ranks[u] <= static_cast<int>(scores.size()));
            for (std::size_t v = 0; v < scores.size(); ++v) {
                if (scores[u] > scores[v]) CHECK(ranks[u] < ranks[v]);
                if (scores[u] == scores[v]) CHECK(ranks[u] == ranks[v]);
            }
        }
    }
}

TEST_CASE("canonical ranking is deterministic") {
    const Graph moore3 = grid_graph(3, 3, GridConnectivity::moore);
    const Subgraph king = induced_subgraph(moore3, closed_neighborhood(moore3, 4));
    CHECK(canonical_ranking(king) == canonical_ranking(king));
}

TEST_CASE("canonical ranking puts the unique degree-2 vertex of a path first") {
    // same path, three vertex namings
    for (const auto& edges : {std::vector<EdgePair>{{0, 1}, {1, 2}},
                              std::vector<EdgePair>{{1, 0}, {0, 2}},
                              std::vector<EdgePair>{{0, 2}, {2, 1}}}) {
        const Graph g = build_graph(edges, 3);
        NodeId middle = 0;
        for (NodeId v = 0; v < 3; ++v)
            if (g.degree(v) == 2) middle = v;
        const Ranking ranks = canonical_ranking(whole_graph(g));
        CHECK(ranks[middle] == 1);
    }
}

TEST_CASE("canonical rank pattern is identical across interior moore nodes") {
    const Graph grid = grid_graph(6, 6, GridConnectivity::moore);
    std::vector<Ranking> patterns;
    for (std::size_t r = 1; r < 5; ++r) {
        for (std::size_t c = 1; c < 5; ++c) {
            const auto v = static_cast<NodeId>(r * 6 + c);
            const Subgraph sg = induced_subgraph(grid, closed_neighborhood(grid, v));
            // local ids are ascending global ids = row-major patch order, so
            // equal rank arrays mean equal spatial-offset patterns
            patterns.push_back(canonical_ranking(sg));
        }
    }
    for (const auto& p : patterns) CHECK(p == patterns.front());
}

TEST_CASE("canonical ranking cap") {
    const Graph big = grid_graph(4, 4, GridConnectivity::moore);
    std::vector<NodeId> all(big.num_nodes());
    std::iota(all.begin(), all.end(), 0);
    CHECK_THROWS_AS(canonical_ranking(induced_subgraph(big, all)), std::invalid_argument);
}

TEST_CASE("canonical ranking handles ties within the cap quickly") {
    // complete graph: every permutation ties; the search must shortcut
    std::vector<EdgePair> edges;
    for (NodeId u = 0; u < 12; ++u)
        for (NodeId v = u + 1; v < 12; ++v) edges.push_back({u, v});
    const Graph k12 = build_graph(edges, 12);
    const Ranking ranks = canonical_ranking(whole_graph(k12));
    for (NodeId v = 0; v < 12; ++v) CHECK(ranks[v] == static_cast<int>(v) + 1);
}

TEST_CASE("canonical ranking matches full permutation enumeration") {
    std::vector<Graph> zoo;
    zoo.push_back(build_graph({{0, 1}, {1, 2}}, 3));                      // path
    zoo.push_back(build_graph({{0, 1}, {1, 2}, {2, 3}, {3, 0}}, 4));      // cycle
    zoo.push_back(build_graph({{0, 1}, {0, 2}, {0, 3}}, 4));              // star
    zoo.push_back(build_graph({{0, 1}, {1, 2}, {0, 2}, {3, 4}}, 6));      // triangle + edge + isolate
    zoo.push_back(build_graph({}, 4));                                     // empty
    for (std::uint64_t seed = 0; seed < 25; ++seed)
        zoo.push_back(oracles::random_graph(static_cast<NodeId>(3 + seed % 5), 0.45, 7777 + seed));

    for (const auto& g : zoo) {
        const auto expected = oracles::canonical_order_bruteforce(g);
        const Ranking ranks = canonical_ranking(whole_graph(g));
        REQUIRE(ranks.size() == expected.size());
        for (NodeId pos = 0; pos < expected.size(); ++pos)
            CHECK(ranks[expected[pos]] == static_cast<int>(pos) + 1);
    }
}

TEST_CASE("unknown labeling name is rejected") {
    CHECK_THROWS_AS(compute_label_scores(path3(), "pagerank"), std::invalid_argument);
}

TEST_CASE("wl requires at least one iteration") {
    CHECK_THROWS_AS(wl_labeling(path3(), 0), std::invalid_argument);
}
