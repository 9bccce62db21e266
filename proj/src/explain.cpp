#include "graspcause/explain.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "graspcause/learners.hpp"

namespace graspcause::explain {

namespace {

constexpr double kNeutralBand = 0.05;
constexpr double kStrongAt = 0.15;
constexpr int kMinLeaf = 5;

std::string short_number(double v) {
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
}

const char* fill_color(const ColorClass& c) {
    if (c.direction == Direction::Neutral) return "white";
    if (c.direction == Direction::Positive) {
        return c.intensity == Intensity::Strong ? "#1e8449" : "#abebc6";
    }
    return c.intensity == Intensity::Strong ? "#cb4335" : "#f5b7b1";
}

void collect_leaves(const InterpretTree& tree, int node, const std::string& path,
                    std::vector<LeafSummary>& out) {
    const TreeNode& cur = tree.nodes[static_cast<std::size_t>(node)];
    if (cur.feature < 0) {
        out.push_back({path.empty() ? "(all)" : path, cur.n, cur.mean_cate, cur.color});
        return;
    }
    const std::string& name = tree.feature_names[static_cast<std::size_t>(cur.feature)];
    const std::string sep = path.empty() ? "" : " & ";
    collect_leaves(tree, cur.left, path + sep + name + " <= " + short_number(cur.threshold), out);
    collect_leaves(tree, cur.right, path + sep + name + " > " + short_number(cur.threshold), out);
}

}  // namespace

const char* to_string(Direction d) {
    switch (d) {
        case Direction::Negative: return "negative";
        case Direction::Positive: return "positive";
        default: return "neutral";
    }
}

const char* to_string(Intensity i) { return i == Intensity::Strong ? "strong" : "weak"; }

ColorClass classify_color(double mean_cate) {
    ColorClass c;
    if (std::abs(mean_cate) <= kNeutralBand) {
        c.direction = Direction::Neutral;
        c.intensity = Intensity::Weak;
        return c;
    }
    c.direction = mean_cate > 0.0 ? Direction::Positive : Direction::Negative;
    c.intensity = std::abs(mean_cate) >= kStrongAt ? Intensity::Strong : Intensity::Weak;
    return c;
}

std::size_t InterpretTree::leaf_count() const {
    std::size_t count = 0;
    for (const TreeNode& node : nodes) {
        if (node.feature < 0) ++count;
    }
    return count;
}

int InterpretTree::depth() const {
    std::vector<std::pair<int, int>> stack{{0, 0}};
    int deepest = 0;
    while (!stack.empty()) {
        const auto [node, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        const TreeNode& cur = nodes[static_cast<std::size_t>(node)];
        if (cur.feature >= 0) {
            stack.emplace_back(cur.left, d + 1);
            stack.emplace_back(cur.right, d + 1);
        }
    }
    return deepest;
}

InterpretTree fit_cate_tree(const Eigen::MatrixXd& x, const std::vector<double>& cate,
                            int max_depth, std::vector<std::string> feature_names) {
    if (x.rows() < 10) throw std::invalid_argument("fit_cate_tree: need at least 10 samples");
    if (static_cast<std::size_t>(x.rows()) != cate.size()) {
        throw std::invalid_argument("fit_cate_tree: x rows and cate size disagree");
    }
    if (max_depth < 1 || max_depth > 4) {
        throw std::invalid_argument("fit_cate_tree: max_depth must be in [1,4]");
    }
    if (feature_names.empty()) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            feature_names.push_back("x" + std::to_string(j));
        }
    }
    if (static_cast<Eigen::Index>(feature_names.size()) != x.cols()) {
        throw std::invalid_argument("fit_cate_tree: feature name count mismatch");
    }

    const Eigen::VectorXd target =
        Eigen::Map<const Eigen::VectorXd>(cate.data(), static_cast<Eigen::Index>(cate.size()));
    learners::TreeParams params;
    params.max_depth = max_depth;
    params.min_samples_leaf = kMinLeaf;
    const learners::Tree fitted =
        learners::fit_tree(x, target, params, learners::SplitCriterion::Variance);

    InterpretTree tree;
    tree.max_depth = max_depth;
    tree.feature_names = std::move(feature_names);
    tree.nodes.reserve(fitted.nodes.size());
    for (const learners::TreeNode& node : fitted.nodes) {
        TreeNode out;
        out.feature = node.feature;
        out.threshold = node.threshold;
        out.left = node.left;
        out.right = node.right;
        out.mean_cate = node.value;
        out.n = node.n;
        out.color = classify_color(node.value);
        tree.nodes.push_back(out);
    }
    return tree;
}

std::string render_dot(const InterpretTree& tree) {
    std::ostringstream out;
    out << "digraph cate_tree {\n";
    out << "  node [shape=box, style=\"filled,rounded\", fontname=\"Helvetica\"];\n";
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const TreeNode& node = tree.nodes[i];
        out << "  n" << i << " [label=\"";
        if (node.feature >= 0) {
            out << tree.feature_names[static_cast<std::size_t>(node.feature)]
                << " <= " << short_number(node.threshold) << "\\n";
        }
        out << "n=" << node.n << "\\nmean CATE=" << short_number(node.mean_cate) << "\", fillcolor=\""
            << fill_color(node.color) << "\"";
        if (node.color.direction != Direction::Neutral && node.color.intensity == Intensity::Strong) {
            out << ", fontcolor=\"white\"";
        }
        out << "];\n";
    }
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const TreeNode& node = tree.nodes[i];
        if (node.feature >= 0) {
            out << "  n" << i << " -> n" << node.left << " [label=\"yes\"];\n";
            out << "  n" << i << " -> n" << node.right << " [label=\"no\"];\n";
        }
    }
    out << "}\n";
    return out.str();
}

std::vector<LeafSummary> leaf_table(const InterpretTree& tree) {
    std::vector<LeafSummary> out;
    collect_leaves(tree, 0, "", out);
    return out;
}

}  // namespace graspcause::explain
