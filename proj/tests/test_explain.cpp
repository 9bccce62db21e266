#include "doctest.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "graspcause/explain.hpp"
#include "graspcause/rng.hpp"
#include "graspcause/stats.hpp"

using namespace graspcause;
using namespace graspcause::explain;

namespace {

std::size_t count_substring(const std::string& text, const std::string& needle) {
    std::size_t count = 0;
    for (std::size_t pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos + needle.size())) {
        ++count;
    }
    return count;
}

}  // namespace

TEST_SUITE("explain") {

TEST_CASE("color classification bins") {
    CHECK(classify_color(0.0).direction == Direction::Neutral);
    CHECK(classify_color(0.05).direction == Direction::Neutral);
    CHECK(classify_color(-0.05).direction == Direction::Neutral);

    const ColorClass weak_pos = classify_color(0.07);
    CHECK(weak_pos.direction == Direction::Positive);
    CHECK(weak_pos.intensity == Intensity::Weak);

    const ColorClass strong_neg = classify_color(-0.30);
    CHECK(strong_neg.direction == Direction::Negative);
    CHECK(strong_neg.intensity == Intensity::Strong);

    const ColorClass boundary = classify_color(0.15);
    CHECK(boundary.direction == Direction::Positive);
    CHECK(boundary.intensity == Intensity::Strong);
}

TEST_CASE("color classification is monotone in the mean") {
    Rng rng(3);
    double prev = -1.0;
    for (int i = 0; i <= 200; ++i) {
        const double m = -1.0 + 2.0 * i / 200.0;
        const ColorClass c = classify_color(m);
        // direction never flips without crossing the neutral band
        if (m < -0.05) CHECK(c.direction == Direction::Negative);
        if (m > 0.05) CHECK(c.direction == Direction::Positive);
        // intensity is monotone in |m| on each side
        if (prev > 0.05 && m > prev && classify_color(prev).intensity == Intensity::Strong) {
            CHECK(c.intensity == Intensity::Strong);
        }
        prev = m;
    }
    (void)rng;
}

TEST_CASE("planted step threshold is recovered by the root split") {
    Rng rng(11);
    const int n = 300;
    Eigen::MatrixXd x(n, 1);
    std::vector<double> cate(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.uniform(0.0002, 0.012);
        cate[static_cast<std::size_t>(i)] = x(i, 0) < 0.003 ? -0.3 : 0.0;
    }
    const InterpretTree tree = fit_cate_tree(x, cate, 2, {"object_volume"});
    REQUIRE(tree.nodes[0].feature == 0);
    CHECK(std::abs(tree.nodes[0].threshold - 0.003) <= 0.0005);

    // the small-volume side is strongly negative, the other side neutral
    const TreeNode& left = tree.nodes[static_cast<std::size_t>(tree.nodes[0].left)];
    const TreeNode& right = tree.nodes[static_cast<std::size_t>(tree.nodes[0].right)];
    CHECK(left.color.direction == Direction::Negative);
    CHECK(left.color.intensity == Intensity::Strong);
    CHECK(right.color.direction == Direction::Neutral);
}

TEST_CASE("two planted thresholds are both recovered at depth 2") {
    Rng rng(12);
    const int n = 400;
    Eigen::MatrixXd x(n, 1);
    std::vector<double> cate(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.uniform(0.0002, 0.012);
        cate[static_cast<std::size_t>(i)] =
            x(i, 0) < 0.001 ? -0.3 : (x(i, 0) < 0.007 ? -0.05 : 0.25);
    }
    const InterpretTree tree = fit_cate_tree(x, cate, 2, {"object_volume"});
    std::vector<double> thresholds;
    for (const TreeNode& node : tree.nodes) {
        if (node.feature >= 0) thresholds.push_back(node.threshold);
    }
    REQUIRE(thresholds.size() >= 2);
    auto near = [&](double target) {
        return std::any_of(thresholds.begin(), thresholds.end(),
                           [&](double t) { return std::abs(t - target) <= 0.0005; });
    };
    CHECK(near(0.001));
    CHECK(near(0.007));
}

TEST_CASE("constant CATE collapses to a single leaf") {
    Rng rng(13);
    Eigen::MatrixXd x(60, 1);
    for (int i = 0; i < 60; ++i) x(i, 0) = rng.uniform();
    const std::vector<double> cate(60, 0.1);
    const InterpretTree tree = fit_cate_tree(x, cate, 3);
    CHECK(tree.nodes.size() == 1);
    CHECK(tree.leaf_count() == 1);
    CHECK(tree.nodes[0].color.direction == Direction::Positive);
    CHECK(tree.nodes[0].color.intensity == Intensity::Weak);
}

TEST_CASE("depth bounds hold for every allowed max_depth") {
    Rng rng(14);
    const int n = 200;
    Eigen::MatrixXd x(n, 2);
    std::vector<double> cate(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
        cate[static_cast<std::size_t>(i)] = std::sin(3 * x(i, 0)) + 0.1 * rng.normal();
    }
    for (int depth = 1; depth <= 4; ++depth) {
        const InterpretTree tree = fit_cate_tree(x, cate, depth);
        CHECK(tree.depth() <= depth);
        if (depth == 1) CHECK(tree.nodes.size() <= 3);
    }
}

TEST_CASE("leaf populations conserve the CATE mass") {
    Rng rng(15);
    const int n = 250;
    Eigen::MatrixXd x(n, 2);
    std::vector<double> cate(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.uniform();
        cate[static_cast<std::size_t>(i)] = 0.3 * x(i, 0) + 0.2 * rng.normal();
    }
    const InterpretTree tree = fit_cate_tree(x, cate, 3);
    double leaf_mass = 0.0;
    int leaf_n = 0;
    for (const TreeNode& node : tree.nodes) {
        if (node.feature < 0) {
            leaf_mass += node.mean_cate * node.n;
            leaf_n += node.n;
        }
    }
    CHECK(leaf_n == n);
    CHECK(leaf_mass == doctest::Approx(stable_sum(cate)).epsilon(1e-9));
}

TEST_CASE("children hold at least five samples each") {
    Rng rng(16);
    const int n = 40;
    Eigen::MatrixXd x(n, 1);
    std::vector<double> cate(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.uniform();
        cate[static_cast<std::size_t>(i)] = x(i, 0) > 0.5 ? 0.4 : -0.4;
    }
    const InterpretTree tree = fit_cate_tree(x, cate, 4);
    for (const TreeNode& node : tree.nodes) {
        if (node.feature < 0) CHECK(node.n >= 5);
    }
}

TEST_CASE("input validation") {
    Eigen::MatrixXd x(9, 1);
    x.setZero();
    const std::vector<double> cate(9, 0.0);
    CHECK_THROWS_AS(fit_cate_tree(x, cate, 2), std::invalid_argument);

    Eigen::MatrixXd x2(20, 1);
    x2.setZero();
    const std::vector<double> cate2(20, 0.0);
    CHECK_THROWS_AS(fit_cate_tree(x2, cate2, 0), std::invalid_argument);
    CHECK_THROWS_AS(fit_cate_tree(x2, cate2, 5), std::invalid_argument);
    CHECK_THROWS_AS(fit_cate_tree(x2, std::vector<double>(19, 0.0), 2), std::invalid_argument);
}

TEST_CASE("DOT rendering: single leaf") {
    Rng rng(17);
    Eigen::MatrixXd x(30, 1);
    for (int i = 0; i < 30; ++i) x(i, 0) = rng.uniform();
    const InterpretTree tree = fit_cate_tree(x, std::vector<double>(30, 0.2), 2);
    const std::string dot = render_dot(tree);
    CHECK(count_substring(dot, "fillcolor") == 1);
    CHECK(count_substring(dot, "->") == 0);
}

TEST_CASE("DOT rendering: full depth-2 tree has 7 nodes and 6 edges") {
    Rng rng(18);
    const int n = 200;
    Eigen::MatrixXd x(n, 2);
    std::vector<double> cate(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.uniform();
        x(i, 1) = rng.uniform();
        // four quadrant values force a full depth-2 tree
        cate[static_cast<std::size_t>(i)] =
            (x(i, 0) > 0.5 ? 0.4 : -0.4) + (x(i, 1) > 0.5 ? 0.2 : -0.2);
    }
    const InterpretTree tree = fit_cate_tree(x, cate, 2, {"object_volume", "other"});
    REQUIRE(tree.nodes.size() == 7);
    const std::string dot = render_dot(tree);
    CHECK(count_substring(dot, "fillcolor") == 7);
    CHECK(count_substring(dot, "->") == 6);
}

TEST_CASE("DOT root label names the split feature") {
    Rng rng(19);
    const int n = 300;
    Eigen::MatrixXd x(n, 1);
    std::vector<double> cate(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.uniform(0.0002, 0.012);
        cate[static_cast<std::size_t>(i)] = x(i, 0) < 0.003 ? -0.3 : 0.0;
    }
    const InterpretTree tree = fit_cate_tree(x, cate, 2, {"object_volume"});
    const std::string dot = render_dot(tree);
    const std::size_t root_label = dot.find("n0 [label=");
    REQUIRE(root_label != std::string::npos);
    CHECK(dot.find("object_volume", root_label) < dot.find("n1 [label="));
}

TEST_CASE("leaf table paths partition the samples") {
    Rng rng(20);
    const int n = 150;
    Eigen::MatrixXd x(n, 1);
    std::vector<double> cate(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.uniform();
        cate[static_cast<std::size_t>(i)] = x(i, 0) > 0.6 ? 0.3 : -0.1;
    }
    const InterpretTree tree = fit_cate_tree(x, cate, 2, {"volume"});
    const auto leaves = leaf_table(tree);
    CHECK(leaves.size() == tree.leaf_count());
    int total = 0;
    for (const LeafSummary& leaf : leaves) {
        total += leaf.n;
        CHECK(!leaf.path.empty());
    }
    CHECK(total == n);
}

}  // TEST_SUITE
