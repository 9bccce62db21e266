#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace graspcause::explain {

enum class Direction { Negative, Neutral, Positive };
enum class Intensity { Weak, Strong };

struct ColorClass {
    Direction direction = Direction::Neutral;
    Intensity intensity = Intensity::Weak;  // meaningful only off-neutral
};

const char* to_string(Direction d);
const char* to_string(Intensity i);

/// |mean| <= 0.05 is neutral; otherwise the sign gives the direction and
/// |mean| >= 0.15 upgrades the intensity to strong.
ColorClass classify_color(double mean_cate);

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double mean_cate = 0.0;
    int n = 0;
    ColorClass color;
};

struct InterpretTree {
    std::vector<TreeNode> nodes;  // node 0 is the root
    int max_depth = 0;
    std::vector<std::string> feature_names;

    std::size_t leaf_count() const;
    int depth() const;
};

/// Depth-limited CART regression tree over the per-sample CATE values;
/// splits need at least 5 samples per child. A constant CATE gives a single
/// leaf. max_depth must lie in [1, 4].
InterpretTree fit_cate_tree(const Eigen::MatrixXd& x, const std::vector<double>& cate,
                            int max_depth = 2, std::vector<std::string> feature_names = {});

/// Graphviz rendering; red/white/green fills by direction, darker shades for
/// strong effects, labels carry the split, sample count and mean CATE.
std::string render_dot(const InterpretTree& tree);

struct LeafSummary {
    std::string path;  // conjunction of split conditions from the root
    int n = 0;
    double mean_cate = 0.0;
    ColorClass color;
};

std::vector<LeafSummary> leaf_table(const InterpretTree& tree);

}  // namespace graspcause::explain
