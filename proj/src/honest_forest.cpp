#include "graspcause/honest_forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "graspcause/parallel.hpp"
#include "graspcause/rng.hpp"
#include "graspcause/stats.hpp"

namespace graspcause::effects {

namespace {

constexpr double kMinGain = 1e-12;
constexpr double kDenomFloor = 1e-8;
constexpr std::uint64_t kTagGroup = 11;
constexpr std::uint64_t kTagTree = 12;

struct FitData {
    const Eigen::MatrixXd& features;
    const Eigen::VectorXd& a;
    const Eigen::VectorXd& b;
    const HonestForestParams& params;
};

struct BestSplit {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// Split search on the node pseudo-responses rho_i = a_i - theta_node * b_i
// (heterogeneity of the local ratio, to first order). Plain CART variance
// reduction on rho; ties resolve to the lowest feature, lowest threshold.
BestSplit find_split(const FitData& data, const std::vector<int>& idx,
                     const std::vector<double>& rho, const std::vector<int>& feature_subset) {
    const std::size_t n = idx.size();
    BestSplit best;
    const std::size_t min_leaf = static_cast<std::size_t>(data.params.min_samples_leaf);
    if (n < 2 * min_leaf) return best;

    double total_sum = 0.0, total_sumsq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total_sum += rho[i];
        total_sumsq += rho[i] * rho[i];
    }
    const double nd = static_cast<double>(n);
    const double parent_sse = std::max(0.0, total_sumsq - total_sum * total_sum / nd);
    if (parent_sse <= kMinGain) return best;

    std::vector<std::pair<double, double>> ordered(n);  // (x, rho)
    for (int f : feature_subset) {
        for (std::size_t i = 0; i < n; ++i) ordered[i] = {data.features(idx[i], f), rho[i]};
        std::sort(ordered.begin(), ordered.end(),
                  [](const auto& lhs, const auto& rhs) { return lhs.first < rhs.first; });

        double left_sum = 0.0, left_sumsq = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            const double r = ordered[i - 1].second;
            left_sum += r;
            left_sumsq += r * r;
            if (i < min_leaf) continue;
            if (n - i < min_leaf) break;
            if (!(ordered[i - 1].first < ordered[i].first)) continue;

            const double nl = static_cast<double>(i);
            const double nr = nd - nl;
            const double right_sum = total_sum - left_sum;
            const double right_sumsq = total_sumsq - left_sumsq;
            const double sse_l = std::max(0.0, left_sumsq - left_sum * left_sum / nl);
            const double sse_r = std::max(0.0, right_sumsq - right_sum * right_sum / nr);
            const double gain = parent_sse - (sse_l + sse_r);
            if (gain > best.gain + kMinGain) {
                best = {f, 0.5 * (ordered[i - 1].first + ordered[i].first), gain};
            }
        }
    }
    return best;
}

int build_node(const FitData& data, HonestTree& tree, std::vector<int>& idx, Rng& rng) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    // local ratio and pseudo-responses for this node
    double sum_a = 0.0, sum_b = 0.0;
    for (int i : idx) {
        sum_a += data.a[i];
        sum_b += data.b[i];
    }
    const double theta_node = std::abs(sum_b) > kDenomFloor ? sum_a / sum_b : 0.0;
    std::vector<double> rho(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        rho[i] = data.a[idx[i]] - theta_node * data.b[idx[i]];
    }

    const int p = static_cast<int>(data.features.cols());
    std::vector<int> feature_subset(static_cast<std::size_t>(p));
    std::iota(feature_subset.begin(), feature_subset.end(), 0);
    const int mtry = std::max(1, (p + 2) / 3);
    if (p > mtry) {
        for (int i = 0; i < mtry; ++i) {
            const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(p - i)));
            std::swap(feature_subset[static_cast<std::size_t>(i)],
                      feature_subset[static_cast<std::size_t>(j)]);
        }
        feature_subset.resize(static_cast<std::size_t>(mtry));
        std::sort(feature_subset.begin(), feature_subset.end());
    }

    const BestSplit split = p > 0 ? find_split(data, idx, rho, feature_subset) : BestSplit{};
    if (split.feature < 0) return node_id;

    std::vector<int> left_idx, right_idx;
    for (int i : idx) {
        (data.features(i, split.feature) <= split.threshold ? left_idx : right_idx).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();

    tree.nodes[node_id].feature = split.feature;
    tree.nodes[node_id].threshold = split.threshold;
    const int left = build_node(data, tree, left_idx, rng);
    tree.nodes[node_id].left = left;
    const int right = build_node(data, tree, right_idx, rng);
    tree.nodes[node_id].right = right;
    return node_id;
}

// Estimation-half samples populate the leaf aggregates; empty leaves inherit
// their parent's values so every query resolves to something.
void populate_leaves(const FitData& data, HonestTree& tree, const std::vector<int>& est_idx) {
    std::vector<double> sum_a(tree.nodes.size(), 0.0);
    std::vector<double> sum_b(tree.nodes.size(), 0.0);
    std::vector<int> count(tree.nodes.size(), 0);
    for (int i : est_idx) {
        int node = 0;
        for (;;) {
            sum_a[static_cast<std::size_t>(node)] += data.a[i];
            sum_b[static_cast<std::size_t>(node)] += data.b[i];
            ++count[static_cast<std::size_t>(node)];
            const HonestNode& cur = tree.nodes[static_cast<std::size_t>(node)];
            if (cur.feature < 0) break;
            node = data.features(i, cur.feature) <= cur.threshold ? cur.left : cur.right;
        }
    }
    // root first; children fall back to the nearest populated ancestor
    for (std::size_t node = 0; node < tree.nodes.size(); ++node) {
        HonestNode& cur = tree.nodes[node];
        if (count[node] > 0) {
            cur.a_mean = sum_a[node] / count[node];
            cur.b_mean = sum_b[node] / count[node];
            cur.n_est = count[node];
        }
        if (cur.feature >= 0) {
            for (int child : {cur.left, cur.right}) {
                auto c = static_cast<std::size_t>(child);
                if (count[c] == 0) {
                    sum_a[c] = cur.a_mean;  // already averaged; propagate as-is
                    sum_b[c] = cur.b_mean;
                    count[c] = -1;  // mark inherited
                    tree.nodes[c].a_mean = cur.a_mean;
                    tree.nodes[c].b_mean = cur.b_mean;
                    tree.nodes[c].n_est = 0;
                }
            }
        }
    }
}

}  // namespace

int HonestTree::leaf_index(const Eigen::MatrixXd& features, Eigen::Index row) const {
    int node = 0;
    while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const HonestNode& cur = nodes[static_cast<std::size_t>(node)];
        node = features(row, cur.feature) <= cur.threshold ? cur.left : cur.right;
    }
    return node;
}

HonestRatioForest::HonestRatioForest(const Eigen::MatrixXd& features, const Eigen::VectorXd& a,
                                     const Eigen::VectorXd& b, const HonestForestParams& params,
                                     std::uint64_t seed)
    : params_(params) {
    const std::size_t n = static_cast<std::size_t>(features.rows());
    if (a.size() != features.rows() || b.size() != features.rows()) {
        throw std::invalid_argument("honest forest: input size mismatch");
    }
    if (n < 2 * static_cast<std::size_t>(params.min_samples_leaf)) {
        throw std::invalid_argument("honest forest: too few samples");
    }
    if (params.little_bag_size < 2 || params.n_trees < 2 * params.little_bag_size) {
        throw std::invalid_argument("honest forest: need at least two little bags of size >= 2");
    }

    {
        std::vector<double> av(a.data(), a.data() + a.size());
        std::vector<double> bv(b.data(), b.data() + b.size());
        const double denom = stable_sum(bv);
        global_ratio_ = std::abs(denom) > kDenomFloor ? stable_sum(av) / denom : 0.0;
    }

    const FitData data{features, a, b, params_};
    const std::size_t half = (n + 1) / 2;
    const std::size_t subsample =
        std::min(half, std::max<std::size_t>(2 * static_cast<std::size_t>(params.min_samples_leaf),
                                             static_cast<std::size_t>(std::ceil(
                                                 params.subsample_rate * static_cast<double>(n)))));

    const int groups = (params.n_trees + params.little_bag_size - 1) / params.little_bag_size;
    trees_.resize(static_cast<std::size_t>(params.n_trees));

    parallel_for(static_cast<std::size_t>(groups), [&](std::size_t g) {
        Rng group_rng(derive_seed(seed, kTagGroup, g));
        const std::vector<std::size_t> half_sample = group_rng.sample_without_replacement(n, half);

        const int first = static_cast<int>(g) * params.little_bag_size;
        const int last = std::min(params.n_trees, first + params.little_bag_size);
        for (int t = first; t < last; ++t) {
            Rng tree_rng(derive_seed(seed, kTagTree, static_cast<std::uint64_t>(t)));
            std::vector<std::size_t> picks =
                tree_rng.sample_without_replacement(half_sample.size(), subsample);
            std::vector<int> chosen(picks.size());
            for (std::size_t i = 0; i < picks.size(); ++i) {
                chosen[i] = static_cast<int>(half_sample[picks[i]]);
            }
            tree_rng.shuffle(chosen);
            const std::size_t split_size = static_cast<std::size_t>(
                std::floor(params.honesty_fraction * static_cast<double>(chosen.size())));
            std::vector<int> split_half(chosen.begin(),
                                        chosen.begin() + static_cast<std::ptrdiff_t>(split_size));
            std::vector<int> est_half(chosen.begin() + static_cast<std::ptrdiff_t>(split_size),
                                      chosen.end());
            std::sort(split_half.begin(), split_half.end());
            std::sort(est_half.begin(), est_half.end());

            HonestTree tree;
            build_node(data, tree, split_half, tree_rng);
            populate_leaves(data, tree, est_half);
            trees_[static_cast<std::size_t>(t)] = std::move(tree);
        }
    });
}

ForestInference HonestRatioForest::infer(const Eigen::MatrixXd& queries) const {
    const Eigen::Index n_query = queries.rows();
    const std::size_t n_trees = trees_.size();
    const int bag = params_.little_bag_size;
    const std::size_t groups = (n_trees + static_cast<std::size_t>(bag) - 1) / static_cast<std::size_t>(bag);

    ForestInference result;
    result.theta.resize(static_cast<std::size_t>(n_query));

    // leaf contributions per (query, tree)
    std::vector<double> contrib_a(static_cast<std::size_t>(n_query) * n_trees);
    std::vector<double> contrib_b(static_cast<std::size_t>(n_query) * n_trees);
    parallel_for(n_trees, [&](std::size_t t) {
        for (Eigen::Index q = 0; q < n_query; ++q) {
            const HonestNode& leaf =
                trees_[t].nodes[static_cast<std::size_t>(trees_[t].leaf_index(queries, q))];
            contrib_a[static_cast<std::size_t>(q) * n_trees + t] = leaf.a_mean;
            contrib_b[static_cast<std::size_t>(q) * n_trees + t] = leaf.b_mean;
        }
    });

    auto pooled_theta = [&](Eigen::Index q, std::size_t tree_first, std::size_t tree_last,
                            bool* fell_back) {
        std::vector<double> as, bs;
        as.reserve(tree_last - tree_first);
        bs.reserve(tree_last - tree_first);
        for (std::size_t t = tree_first; t < tree_last; ++t) {
            as.push_back(contrib_a[static_cast<std::size_t>(q) * n_trees + t]);
            bs.push_back(contrib_b[static_cast<std::size_t>(q) * n_trees + t]);
        }
        const double denom = stable_sum(bs);
        if (std::abs(denom) < kDenomFloor) {
            if (fell_back != nullptr) *fell_back = true;
            return global_ratio_;
        }
        return stable_sum(as) / denom;
    };

    for (Eigen::Index q = 0; q < n_query; ++q) {
        bool fell_back = false;
        result.theta[static_cast<std::size_t>(q)] = pooled_theta(q, 0, n_trees, &fell_back);
        if (fell_back) ++result.fallback_count;
    }
    result.effect = stable_mean(result.theta);

    // bootstrap of little bags: between-group variance of group effects minus
    // the within-group Monte-Carlo part
    std::vector<double> group_effects;
    std::vector<double> within_variances;
    group_effects.reserve(groups);
    for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t first = g * static_cast<std::size_t>(bag);
        const std::size_t last = std::min(n_trees, first + static_cast<std::size_t>(bag));
        std::vector<double> group_theta(static_cast<std::size_t>(n_query));
        for (Eigen::Index q = 0; q < n_query; ++q) {
            group_theta[static_cast<std::size_t>(q)] = pooled_theta(q, first, last, nullptr);
        }
        group_effects.push_back(stable_mean(group_theta));

        std::vector<double> tree_effects;
        tree_effects.reserve(last - first);
        for (std::size_t t = first; t < last; ++t) {
            std::vector<double> tree_theta(static_cast<std::size_t>(n_query));
            for (Eigen::Index q = 0; q < n_query; ++q) {
                tree_theta[static_cast<std::size_t>(q)] = pooled_theta(q, t, t + 1, nullptr);
            }
            tree_effects.push_back(stable_mean(tree_theta));
        }
        if (tree_effects.size() >= 2) within_variances.push_back(sample_variance(tree_effects));
    }
    const double v_between = sample_variance(group_effects);
    const double v_within = within_variances.empty() ? 0.0 : stable_mean(within_variances);
    // conservative variant: keep the within-bag Monte-Carlo component instead
    // of debiasing it away; with few groups the debiased estimate runs
    // anti-conservative, and the retained term is small because trees in a
    // bag share 90% of their half-sample
    result.variance = std::max(v_between, v_between - v_within / static_cast<double>(bag));
    return result;
}

}  // namespace graspcause::effects
