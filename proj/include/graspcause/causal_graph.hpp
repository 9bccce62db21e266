#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

namespace graspcause::graph {

struct Node {
    std::string name;
    bool observed = true;
};

/// Directed acyclic graph over named factors. Construction validates that
/// edge endpoints are declared, that there are no duplicate nodes or edges,
/// and that a topological order exists.
class CausalGraph {
public:
    CausalGraph(std::vector<Node> nodes, std::vector<std::pair<std::string, std::string>> edges);

    const std::vector<Node>& nodes() const { return nodes_; }
    std::vector<std::pair<std::string, std::string>> edges() const;
    std::size_t edge_count() const { return edges_.size(); }

    bool has_node(const std::string& name) const;
    bool is_observed(const std::string& name) const;
    bool has_edge(const std::string& parent, const std::string& child) const;

    std::vector<std::string> parents(const std::string& name) const;
    std::vector<std::string> children(const std::string& name) const;
    std::vector<std::string> topological_order() const;

    /// Strict descendants (the node itself excluded).
    std::set<std::string> descendants(const std::string& name) const;

    /// Copy with every edge leaving `name` removed.
    CausalGraph without_outgoing(const std::string& name) const;

    /// Induced subgraph on the observed nodes; edges incident to unobserved
    /// nodes disappear (no latent projection).
    CausalGraph observed_subgraph() const;

    static CausalGraph from_json(const std::string& text);
    std::string to_json() const;
    std::string to_dot() const;

private:
    int index_of(const std::string& name) const;  // throws on unknown name

    std::vector<Node> nodes_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<int>> parents_;
    std::vector<std::vector<int>> children_;
};

/// The reach-to-grasp model: observed factors O, OV, S, SS, SC, DO, D, H
/// with 13 edges between them, plus an unobserved confounder U -> D, U -> H.
CausalGraph build_default_graph();

struct Estimand {
    std::string treatment;
    std::string outcome;
    std::set<std::string> adjustment_set;
    bool identifiable = false;
    std::vector<std::string> warnings;
};

/// True iff every path between a and b is blocked by z: chains and forks are
/// blocked when the middle node is in z, colliders when neither the collider
/// nor any of its descendants is in z.
bool d_separated(const CausalGraph& g, const std::string& a, const std::string& b,
                 const std::set<std::string>& z);

/// All minimal backdoor adjustment sets for t -> y, searched over observed
/// nodes that are not t, y, or descendants of either. Unobserved nodes are
/// dropped from the graph before the search (they cannot be conditioned on).
/// Sorted lexicographically by sorted member names; empty when nothing works.
std::vector<std::set<std::string>> backdoor_sets(const CausalGraph& g, const std::string& t,
                                                 const std::string& y);

/// Picks the first minimal backdoor set, drops members declared zero-variance
/// (constant in the concrete dataset, so unadjustable), and flags unobserved
/// confounders adjacent to both t and y as a bias-reduced-not-bias-free
/// warning with identifiable=false.
Estimand identify(const CausalGraph& g, const std::string& t, const std::string& y,
                  const std::set<std::string>& zero_variance = {});

}  // namespace graspcause::graph
