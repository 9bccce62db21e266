#include "graspcause/causal_graph.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace graspcause::graph {

CausalGraph::CausalGraph(std::vector<Node> nodes,
                         std::vector<std::pair<std::string, std::string>> edges)
    : nodes_(std::move(nodes)) {
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].name.empty()) throw std::invalid_argument("graph: empty node name");
        if (!index.emplace(nodes_[i].name, static_cast<int>(i)).second) {
            throw std::invalid_argument("graph: duplicate node '" + nodes_[i].name + "'");
        }
    }
    parents_.resize(nodes_.size());
    children_.resize(nodes_.size());
    for (const auto& [parent, child] : edges) {
        auto pit = index.find(parent);
        auto cit = index.find(child);
        if (pit == index.end() || cit == index.end()) {
            throw std::invalid_argument("graph: edge endpoint not declared: " + parent + " -> " +
                                        child);
        }
        if (pit->second == cit->second) {
            throw std::invalid_argument("graph: self-loop on '" + parent + "'");
        }
        const std::pair<int, int> e{pit->second, cit->second};
        if (std::find(edges_.begin(), edges_.end(), e) != edges_.end()) {
            throw std::invalid_argument("graph: duplicate edge " + parent + " -> " + child);
        }
        edges_.push_back(e);
        parents_[e.second].push_back(e.first);
        children_[e.first].push_back(e.second);
    }
    topological_order();  // throws on cycles
}

std::vector<std::pair<std::string, std::string>> CausalGraph::edges() const {
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(edges_.size());
    for (const auto& [p, c] : edges_) out.emplace_back(nodes_[p].name, nodes_[c].name);
    return out;
}

int CausalGraph::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].name == name) return static_cast<int>(i);
    }
    throw std::invalid_argument("graph: unknown node '" + name + "'");
}

bool CausalGraph::has_node(const std::string& name) const {
    return std::any_of(nodes_.begin(), nodes_.end(),
                       [&](const Node& n) { return n.name == name; });
}

bool CausalGraph::is_observed(const std::string& name) const {
    return nodes_[static_cast<std::size_t>(index_of(name))].observed;
}

bool CausalGraph::has_edge(const std::string& parent, const std::string& child) const {
    const std::pair<int, int> e{index_of(parent), index_of(child)};
    return std::find(edges_.begin(), edges_.end(), e) != edges_.end();
}

std::vector<std::string> CausalGraph::parents(const std::string& name) const {
    std::vector<std::string> out;
    for (int p : parents_[static_cast<std::size_t>(index_of(name))]) out.push_back(nodes_[p].name);
    return out;
}

std::vector<std::string> CausalGraph::children(const std::string& name) const {
    std::vector<std::string> out;
    for (int c : children_[static_cast<std::size_t>(index_of(name))]) out.push_back(nodes_[c].name);
    return out;
}

std::vector<std::string> CausalGraph::topological_order() const {
    std::vector<int> in_degree(nodes_.size(), 0);
    for (const auto& [p, c] : edges_) {
        (void)p;
        ++in_degree[c];
    }
    std::deque<int> ready;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (in_degree[i] == 0) ready.push_back(static_cast<int>(i));
    }
    std::vector<std::string> order;
    while (!ready.empty()) {
        const int v = ready.front();
        ready.pop_front();
        order.push_back(nodes_[v].name);
        for (int c : children_[v]) {
            if (--in_degree[c] == 0) ready.push_back(c);
        }
    }
    if (order.size() != nodes_.size()) throw std::invalid_argument("graph: cycle detected");
    return order;
}

std::set<std::string> CausalGraph::descendants(const std::string& name) const {
    std::set<std::string> out;
    std::deque<int> frontier{index_of(name)};
    while (!frontier.empty()) {
        const int v = frontier.front();
        frontier.pop_front();
        for (int c : children_[v]) {
            if (out.insert(nodes_[c].name).second) frontier.push_back(c);
        }
    }
    out.erase(name);
    return out;
}

CausalGraph CausalGraph::without_outgoing(const std::string& name) const {
    const int idx = index_of(name);
    std::vector<std::pair<std::string, std::string>> kept;
    for (const auto& [p, c] : edges_) {
        if (p == idx) continue;
        kept.emplace_back(nodes_[p].name, nodes_[c].name);
    }
    return CausalGraph(nodes_, kept);
}

CausalGraph CausalGraph::observed_subgraph() const {
    std::vector<Node> kept_nodes;
    for (const Node& n : nodes_) {
        if (n.observed) kept_nodes.push_back(n);
    }
    std::vector<std::pair<std::string, std::string>> kept_edges;
    for (const auto& [p, c] : edges_) {
        if (nodes_[p].observed && nodes_[c].observed) {
            kept_edges.emplace_back(nodes_[p].name, nodes_[c].name);
        }
    }
    return CausalGraph(std::move(kept_nodes), std::move(kept_edges));
}

CausalGraph CausalGraph::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    std::vector<Node> nodes;
    for (const auto& n : j.at("nodes")) {
        nodes.push_back({n.at("name").get<std::string>(), n.value("observed", true)});
    }
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2) throw std::invalid_argument("graph json: edge must be a pair");
        edges.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    }
    return CausalGraph(std::move(nodes), std::move(edges));
}

std::string CausalGraph::to_json() const {
    nlohmann::ordered_json j;
    j["nodes"] = nlohmann::ordered_json::array();
    for (const Node& n : nodes_) {
        j["nodes"].push_back({{"name", n.name}, {"observed", n.observed}});
    }
    j["edges"] = nlohmann::ordered_json::array();
    for (const auto& [p, c] : edges_) {
        j["edges"].push_back({nodes_[p].name, nodes_[c].name});
    }
    return j.dump(2);
}

std::string CausalGraph::to_dot() const {
    std::ostringstream out;
    out << "digraph causal_model {\n";
    out << "  rankdir=LR;\n  node [shape=ellipse];\n";
    for (const Node& n : nodes_) {
        out << "  \"" << n.name << "\"";
        if (!n.observed) out << " [style=dashed]";
        out << ";\n";
    }
    for (const auto& [p, c] : edges_) {
        out << "  \"" << nodes_[p].name << "\" -> \"" << nodes_[c].name << "\";\n";
    }
    out << "}\n";
    return out.str();
}

CausalGraph build_default_graph() {
    std::vector<Node> nodes = {
        {"O", true},  {"OV", true}, {"S", true}, {"SS", true}, {"SC", true},
        {"DO", true}, {"D", true},  {"H", true}, {"U", false},
    };
    std::vector<std::pair<std::string, std::string>> edges = {
        {"D", "H"},   // distance drives selection; the hypothesis under test
        {"O", "D"},   {"O", "H"},
        {"S", "D"},   {"S", "H"},
        {"OV", "H"},  {"OV", "D"},
        {"SS", "D"},  {"SS", "H"},
        {"SC", "D"},  {"SC", "H"},
        {"DO", "H"},  {"DO", "D"},
        {"U", "D"},   {"U", "H"},
    };
    return CausalGraph(std::move(nodes), std::move(edges));
}

bool d_separated(const CausalGraph& g, const std::string& a, const std::string& b,
                 const std::set<std::string>& z) {
    if (!g.has_node(a)) throw std::invalid_argument("d_separated: unknown node '" + a + "'");
    if (!g.has_node(b)) throw std::invalid_argument("d_separated: unknown node '" + b + "'");
    if (a == b) throw std::invalid_argument("d_separated: endpoints must differ");
    for (const std::string& name : z) {
        if (!g.has_node(name)) {
            throw std::invalid_argument("d_separated: unknown node '" + name + "'");
        }
        if (name == a || name == b) {
            throw std::invalid_argument("d_separated: conditioning set contains an endpoint");
        }
    }

    // Ancestors of z (including z itself): colliders on active trails must
    // have a conditioned descendant.
    std::set<std::string> z_ancestors(z.begin(), z.end());
    std::deque<std::string> frontier(z.begin(), z.end());
    while (!frontier.empty()) {
        const std::string v = frontier.front();
        frontier.pop_front();
        for (const std::string& p : g.parents(v)) {
            if (z_ancestors.insert(p).second) frontier.push_back(p);
        }
    }

    // Reachability over (node, arrival direction) states; direction Up means
    // the trail arrived from a child, Down means from a parent.
    enum Dir { Up = 0, Down = 1 };
    std::set<std::pair<std::string, int>> visited;
    std::deque<std::pair<std::string, int>> queue;
    queue.emplace_back(a, Up);
    while (!queue.empty()) {
        const auto [v, dir] = queue.front();
        queue.pop_front();
        if (!visited.emplace(v, dir).second) continue;
        const bool in_z = z.count(v) > 0;
        if (!in_z && v == b) return false;

        if (dir == Up) {
            if (!in_z) {
                for (const std::string& p : g.parents(v)) queue.emplace_back(p, Up);
                for (const std::string& c : g.children(v)) queue.emplace_back(c, Down);
            }
        } else {
            if (!in_z) {
                for (const std::string& c : g.children(v)) queue.emplace_back(c, Down);
            }
            if (z_ancestors.count(v)) {  // collider opened by conditioning below it
                for (const std::string& p : g.parents(v)) queue.emplace_back(p, Up);
            }
        }
    }
    return true;
}

std::vector<std::set<std::string>> backdoor_sets(const CausalGraph& g, const std::string& t,
                                                 const std::string& y) {
    if (!g.has_node(t)) throw std::invalid_argument("backdoor_sets: unknown node '" + t + "'");
    if (!g.has_node(y)) throw std::invalid_argument("backdoor_sets: unknown node '" + y + "'");
    if (t == y) throw std::invalid_argument("backdoor_sets: treatment equals outcome");
    if (!g.is_observed(t) || !g.is_observed(y)) {
        throw std::invalid_argument("backdoor_sets: treatment and outcome must be observed");
    }

    const std::set<std::string> banned = [&] {
        std::set<std::string> out = g.descendants(t);
        const std::set<std::string> dy = g.descendants(y);
        out.insert(dy.begin(), dy.end());
        out.insert(t);
        out.insert(y);
        return out;
    }();

    std::vector<std::string> candidates;
    for (const Node& n : g.nodes()) {
        if (n.observed && !banned.count(n.name)) candidates.push_back(n.name);
    }
    std::sort(candidates.begin(), candidates.end());
    if (candidates.size() > 20) {
        throw std::invalid_argument("backdoor_sets: more than 20 candidate adjustment variables");
    }

    const CausalGraph pruned = g.observed_subgraph().without_outgoing(t);

    std::vector<std::set<std::string>> separating;
    const std::size_t m = candidates.size();
    for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
        std::set<std::string> zset;
        for (std::size_t i = 0; i < m; ++i) {
            if (mask & (std::size_t{1} << i)) zset.insert(candidates[i]);
        }
        if (d_separated(pruned, t, y, zset)) separating.push_back(std::move(zset));
    }

    std::vector<std::set<std::string>> minimal;
    for (const auto& zset : separating) {
        const bool has_proper_subset = std::any_of(
            separating.begin(), separating.end(), [&](const std::set<std::string>& other) {
                return other.size() < zset.size() &&
                       std::includes(zset.begin(), zset.end(), other.begin(), other.end());
            });
        if (!has_proper_subset) minimal.push_back(zset);
    }

    std::sort(minimal.begin(), minimal.end(),
              [](const std::set<std::string>& lhs, const std::set<std::string>& rhs) {
                  return std::lexicographical_compare(lhs.begin(), lhs.end(), rhs.begin(),
                                                      rhs.end());
              });
    return minimal;
}

Estimand identify(const CausalGraph& g, const std::string& t, const std::string& y,
                  const std::set<std::string>& zero_variance) {
    Estimand estimand;
    estimand.treatment = t;
    estimand.outcome = y;

    const auto sets = backdoor_sets(g, t, y);
    if (sets.empty()) {
        estimand.identifiable = false;
        estimand.warnings.push_back("no backdoor adjustment set over observed variables blocks " +
                                    t + " <- ... -> " + y);
    } else {
        estimand.identifiable = true;
        estimand.adjustment_set = sets.front();
        std::vector<std::string> dropped;
        for (const std::string& name : zero_variance) {
            if (estimand.adjustment_set.erase(name) > 0) dropped.push_back(name);
        }
        if (!dropped.empty()) {
            std::string msg = "dropped zero-variance adjustment variable(s):";
            for (const std::string& name : dropped) msg += " " + name;
            estimand.warnings.push_back(msg);
        }
    }

    // Unobserved node with edges to (or from) both endpoints: adjustment can
    // reduce bias but cannot remove it.
    for (const Node& n : g.nodes()) {
        if (n.observed) continue;
        const bool touches_t = g.has_edge(n.name, t) || g.has_edge(t, n.name);
        const bool touches_y = g.has_edge(n.name, y) || g.has_edge(y, n.name);
        if (touches_t && touches_y) {
            estimand.identifiable = false;
            estimand.warnings.push_back("unobserved node '" + n.name + "' is adjacent to both " +
                                        t + " and " + y +
                                        "; estimates are bias-reduced, not bias-free");
        }
    }

    return estimand;
}

}  // namespace graspcause::graph
