#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace graspcause::effects {

struct HonestForestParams {
    int n_trees = 200;
    double subsample_rate = 0.45;   // drawn without replacement
    double honesty_fraction = 0.5;  // split-search half vs estimation half
    int little_bag_size = 4;        // trees per group for variance estimation
    int min_samples_leaf = 5;
};

struct HonestNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double a_mean = 0.0;  // estimation-half averages
    double b_mean = 0.0;
    int n_est = 0;
};

struct HonestTree {
    std::vector<HonestNode> nodes;
    int leaf_index(const Eigen::MatrixXd& features, Eigen::Index row) const;
};

struct ForestInference {
    std::vector<double> theta;  // per query, all trees pooled
    double effect = 0.0;        // order-invariant mean of theta
    double variance = 0.0;      // bootstrap-of-little-bags estimate for the mean
    int fallback_count = 0;     // queries that fell back to the global ratio
};

/// Honest forest for ratio targets theta(x) = sum_i w_i(x) a_i / sum_i w_i(x) b_i
/// with leaf-membership kernel weights w_i(x). Covers both second stages:
/// the causal forest uses a = resid_y * resid_t, b = resid_t^2; the
/// regression forest over pseudo-outcomes uses a = psi, b = 1.
///
/// Trees are grown in little bags: the trees of one group subsample from a
/// shared half-sample, which makes the between-group variance of group-level
/// effects (minus the within-group Monte-Carlo part) an estimate of the
/// sampling variance of the pooled effect.
class HonestRatioForest {
public:
    HonestRatioForest(const Eigen::MatrixXd& features, const Eigen::VectorXd& a,
                      const Eigen::VectorXd& b, const HonestForestParams& params,
                      std::uint64_t seed);

    ForestInference infer(const Eigen::MatrixXd& queries) const;

    double global_ratio() const { return global_ratio_; }
    const std::vector<HonestTree>& trees() const { return trees_; }

private:
    std::vector<HonestTree> trees_;
    HonestForestParams params_;
    double global_ratio_ = 0.0;
};

}  // namespace graspcause::effects
