#include "doctest.h"

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "graspcause/causal_graph.hpp"
#include "graspcause/rng.hpp"

#include "graph_oracles.hpp"

using graph_oracles::oracle_backdoor_sets;
using graph_oracles::oracle_d_separated;
using graph_oracles::random_dag;

using graspcause::Rng;
using namespace graspcause::graph;



TEST_SUITE("graph") {

TEST_CASE("construction validates nodes and edges") {
    CHECK_THROWS_AS(CausalGraph({{"A", true}, {"A", true}}, {}), std::invalid_argument);
    CHECK_THROWS_AS(CausalGraph({{"A", true}}, {{"A", "B"}}), std::invalid_argument);
    CHECK_THROWS_AS(CausalGraph({{"A", true}, {"B", true}}, {{"A", "B"}, {"A", "B"}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(CausalGraph({{"A", true}, {"B", true}}, {{"A", "B"}, {"B", "A"}}),
                    std::invalid_argument);  // cycle
    CHECK_THROWS_AS(CausalGraph({{"A", true}}, {{"A", "A"}}), std::invalid_argument);
}

TEST_CASE("default grasp graph matches the hand-manipulation model") {
    const CausalGraph g = build_default_graph();
    CHECK(g.nodes().size() == 9);
    CHECK(g.has_edge("D", "H"));
    CHECK(!g.is_observed("U"));
    CHECK(g.has_edge("U", "D"));
    CHECK(g.has_edge("U", "H"));

    int observed_edges = 0;
    for (const auto& [p, c] : g.edges()) {
        if (g.is_observed(p) && g.is_observed(c)) ++observed_edges;
    }
    CHECK(observed_edges == 13);

    CHECK(g.topological_order().size() == 9);  // acyclic
}

TEST_CASE("graph JSON round trip and DOT export") {
    const CausalGraph g = build_default_graph();
    const CausalGraph parsed = CausalGraph::from_json(g.to_json());
    CHECK(parsed.nodes().size() == g.nodes().size());
    CHECK(parsed.edge_count() == g.edge_count());
    CHECK(parsed.has_edge("D", "H"));
    CHECK(!parsed.is_observed("U"));

    const std::string dot = g.to_dot();
    CHECK(dot.find("\"D\" -> \"H\"") != std::string::npos);
    CHECK(dot.find("style=dashed") != std::string::npos);  // unobserved U
}

TEST_CASE("d-separation on canonical shapes") {
    const CausalGraph chain({{"A", true}, {"B", true}, {"C", true}}, {{"A", "B"}, {"B", "C"}});
    CHECK(d_separated(chain, "A", "C", {"B"}));
    CHECK(!d_separated(chain, "A", "C", {}));

    const CausalGraph collider({{"A", true}, {"B", true}, {"C", true}}, {{"A", "B"}, {"C", "B"}});
    CHECK(d_separated(collider, "A", "C", {}));
    CHECK(!d_separated(collider, "A", "C", {"B"}));

    // conditioning on a collider's descendant opens the path too
    const CausalGraph desc({{"A", true}, {"B", true}, {"C", true}, {"D", true}},
                           {{"A", "B"}, {"C", "B"}, {"B", "D"}});
    CHECK(!d_separated(desc, "A", "C", {"D"}));
}

TEST_CASE("d-separation rejects bad arguments") {
    const CausalGraph g = build_default_graph();
    CHECK_THROWS_AS(d_separated(g, "D", "nope", {}), std::invalid_argument);
    CHECK_THROWS_AS(d_separated(g, "D", "H", {"nope"}), std::invalid_argument);
    CHECK_THROWS_AS(d_separated(g, "D", "H", {"D"}), std::invalid_argument);
}

TEST_CASE("d-separation agrees with path enumeration on the pruned grasp graph") {
    // remove the D -> H hypothesis edge, then check the Eq-style conditioning
    const CausalGraph g = build_default_graph().without_outgoing("D");
    const std::set<std::string> z{"O", "OV", "S", "SS", "SC", "DO"};
    CHECK(d_separated(g, "D", "H", z) == oracle_d_separated(g, "D", "H", z));
    // U -> D and U -> H stay connected without conditioning
    CHECK(d_separated(g, "D", "H", {}) == oracle_d_separated(g, "D", "H", {}));
}

TEST_CASE("d-separation matches the oracle on random DAGs and is symmetric") {
    Rng rng(20240803);
    int checked = 0;
    for (int rep = 0; rep < 150; ++rep) {
        const CausalGraph g = random_dag(rng, 3 + static_cast<int>(rng.below(4)));
        const auto& nodes = g.nodes();
        const int a = static_cast<int>(rng.below(nodes.size()));
        int b = static_cast<int>(rng.below(nodes.size()));
        if (a == b) continue;
        std::set<std::string> z;
        for (const Node& n : nodes) {
            if (n.name != nodes[a].name && n.name != nodes[b].name && rng.uniform() < 0.3) {
                z.insert(n.name);
            }
        }
        const bool lib = d_separated(g, nodes[a].name, nodes[b].name, z);
        CHECK(lib == oracle_d_separated(g, nodes[a].name, nodes[b].name, z));
        CHECK(lib == d_separated(g, nodes[b].name, nodes[a].name, z));
        ++checked;
    }
    CHECK(checked > 100);
}

TEST_CASE("backdoor sets: single confounder triangle") {
    const CausalGraph g({{"Z", true}, {"T", true}, {"Y", true}},
                        {{"Z", "T"}, {"Z", "Y"}, {"T", "Y"}});
    const auto sets = backdoor_sets(g, "T", "Y");
    REQUIRE(sets.size() == 1);
    CHECK(sets[0] == std::set<std::string>{"Z"});
}

TEST_CASE("backdoor sets: no backdoor paths gives the empty set") {
    const CausalGraph g({{"T", true}, {"Y", true}}, {{"T", "Y"}});
    const auto sets = backdoor_sets(g, "T", "Y");
    REQUIRE(sets.size() == 1);
    CHECK(sets[0].empty());
}

TEST_CASE("backdoor sets on the grasp model ignore the unobserved confounder") {
    const CausalGraph g = build_default_graph();
    const auto sets = backdoor_sets(g, "D", "H");
    REQUIRE(sets.size() == 1);
    CHECK(sets[0] == std::set<std::string>{"O", "OV", "S", "SS", "SC", "DO"});
}

TEST_CASE("backdoor sets equal the exhaustive-subset oracle on 100 random DAGs") {
    Rng rng(987501);
    int done = 0;
    while (done < 100) {
        const CausalGraph g = random_dag(rng, 3 + static_cast<int>(rng.below(4)));
        std::vector<std::string> observed;
        for (const Node& n : g.nodes()) {
            if (n.observed) observed.push_back(n.name);
        }
        if (observed.size() < 2) continue;
        const std::string t = observed[rng.below(observed.size())];
        const std::string y = observed[rng.below(observed.size())];
        if (t == y) continue;
        CHECK(backdoor_sets(g, t, y) == oracle_backdoor_sets(g, t, y));
        ++done;
    }
}

TEST_CASE("every returned adjustment set d-separates t and y in the pruned graph") {
    Rng rng(77441);
    int graphs = 0;
    while (graphs < 40) {
        const CausalGraph g = random_dag(rng, 4 + static_cast<int>(rng.below(3)));
        std::vector<std::string> observed;
        for (const Node& n : g.nodes()) {
            if (n.observed) observed.push_back(n.name);
        }
        if (observed.size() < 2) continue;
        const std::string t = observed[0];
        const std::string y = observed[observed.size() - 1];
        if (t == y) continue;
        const CausalGraph pruned = g.observed_subgraph().without_outgoing(t);
        for (const auto& zset : backdoor_sets(g, t, y)) {
            CHECK(d_separated(pruned, t, y, zset));
        }
        ++graphs;
    }
}

TEST_CASE("identify reproduces the grasp-model conditioning set") {
    const CausalGraph g = build_default_graph();

    SUBCASE("zero-variance DO drops out") {
        const Estimand e = identify(g, "D", "H", {"DO"});
        CHECK(e.adjustment_set == std::set<std::string>{"O", "OV", "S", "SS", "SC"});
        CHECK(!e.identifiable);  // U touches both D and H
        bool mentions_u = false;
        for (const std::string& w : e.warnings) mentions_u |= w.find("'U'") != std::string::npos;
        CHECK(mentions_u);
    }

    SUBCASE("full adjustment set without zero-variance hints") {
        const Estimand e = identify(g, "D", "H", {});
        CHECK(e.adjustment_set == std::set<std::string>{"O", "OV", "S", "SS", "SC", "DO"});
        CHECK(!e.identifiable);
        CHECK(!e.warnings.empty());
    }
}

TEST_CASE("identify on a clean two-node graph") {
    const CausalGraph g({{"T", true}, {"Y", true}}, {{"T", "Y"}});
    const Estimand e = identify(g, "T", "Y", {});
    CHECK(e.adjustment_set.empty());
    CHECK(e.identifiable);
    CHECK(e.warnings.empty());
}

TEST_CASE("identify errors on missing nodes") {
    const CausalGraph g = build_default_graph();
    CHECK_THROWS_AS(identify(g, "D", "nope", {}), std::invalid_argument);
    CHECK_THROWS_AS(identify(g, "nope", "H", {}), std::invalid_argument);
}

}  // TEST_SUITE
