#include "graspcause/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "graspcause/parallel.hpp"
#include "graspcause/rng.hpp"
#include "graspcause/stats.hpp"
#include "json.hpp"

namespace graspcause::learners {

namespace {

constexpr double kMinGain = 1e-12;
constexpr double kProbClip = 1e-6;
constexpr double kGbLearningRate = 0.1;
constexpr double kGbLeafClip = 4.0;
constexpr int kGridCvFolds = 3;
constexpr int kDefaultForestSize = 100;

// rng stream tags
constexpr std::uint64_t kTagGridFolds = 101;
constexpr std::uint64_t kTagGridFit = 102;
constexpr std::uint64_t kTagFinalFit = 103;
constexpr std::uint64_t kTagCrossFolds = 104;
constexpr std::uint64_t kTagCrossFit = 105;
constexpr std::uint64_t kTagTree = 106;

double clip_prob(double p) { return std::min(1.0 - kProbClip, std::max(kProbClip, p)); }

double sigmoid(double z) {
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<int>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd& v, const std::vector<int>& rows) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[rows[i]];
    return out;
}

// ---------------------------------------------------------------------------
// tree building
// ---------------------------------------------------------------------------

struct BuildContext {
    const Eigen::MatrixXd& features;
    const Eigen::VectorXd& target;
    TreeParams params;
    SplitCriterion criterion;
    Rng* rng;  // nullptr: deterministic, every feature considered
};

struct BestSplit {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

std::vector<int> candidate_features(const BuildContext& ctx) {
    const int p = static_cast<int>(ctx.features.cols());
    std::vector<int> all(static_cast<std::size_t>(p));
    std::iota(all.begin(), all.end(), 0);
    if (ctx.rng == nullptr || ctx.params.mtry <= 0 || ctx.params.mtry >= p) return all;
    // partial Fisher-Yates, then sorted so ties still resolve by feature index
    for (int i = 0; i < ctx.params.mtry; ++i) {
        const int j = i + static_cast<int>(ctx.rng->below(static_cast<std::uint64_t>(p - i)));
        std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
    }
    all.resize(static_cast<std::size_t>(ctx.params.mtry));
    std::sort(all.begin(), all.end());
    return all;
}

BestSplit find_split(const BuildContext& ctx, const std::vector<int>& idx) {
    const std::size_t n = idx.size();
    BestSplit best;
    if (n < 2 * static_cast<std::size_t>(ctx.params.min_samples_leaf)) return best;

    double total_sum = 0.0, total_sumsq = 0.0;
    for (int i : idx) {
        const double y = ctx.target[i];
        total_sum += y;
        total_sumsq += y * y;
    }
    const double nd = static_cast<double>(n);

    double parent_impurity;
    if (ctx.criterion == SplitCriterion::Variance) {
        parent_impurity = std::max(0.0, total_sumsq - total_sum * total_sum / nd);
    } else {
        parent_impurity = 2.0 * total_sum * (nd - total_sum) / nd;  // n * gini, binary target
    }
    if (parent_impurity <= kMinGain) return best;

    std::vector<std::pair<double, double>> ordered(n);  // (x, y)
    for (const int f : candidate_features(ctx)) {
        for (std::size_t i = 0; i < n; ++i) {
            ordered[i] = {ctx.features(idx[i], f), ctx.target[idx[i]]};
        }
        std::sort(ordered.begin(), ordered.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        double left_sum = 0.0, left_sumsq = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            const double y = ordered[i - 1].second;
            left_sum += y;
            left_sumsq += y * y;
            if (i < static_cast<std::size_t>(ctx.params.min_samples_leaf)) continue;
            if (n - i < static_cast<std::size_t>(ctx.params.min_samples_leaf)) break;
            if (!(ordered[i - 1].first < ordered[i].first)) continue;

            const double nl = static_cast<double>(i);
            const double nr = nd - nl;
            const double right_sum = total_sum - left_sum;
            double children;
            if (ctx.criterion == SplitCriterion::Variance) {
                const double right_sumsq = total_sumsq - left_sumsq;
                const double sse_l = std::max(0.0, left_sumsq - left_sum * left_sum / nl);
                const double sse_r = std::max(0.0, right_sumsq - right_sum * right_sum / nr);
                children = sse_l + sse_r;
            } else {
                children = 2.0 * left_sum * (nl - left_sum) / nl +
                           2.0 * right_sum * (nr - right_sum) / nr;
            }
            const double gain = parent_impurity - children;
            // strict improvement required, so earlier features/thresholds win ties
            if (gain > best.gain + kMinGain) {
                best.feature = f;
                best.threshold = 0.5 * (ordered[i - 1].first + ordered[i].first);
                best.gain = gain;
            }
        }
    }
    return best;
}

int build_node(const BuildContext& ctx, Tree& tree, std::vector<int>& idx, int depth) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    double sum = 0.0;
    for (int i : idx) sum += ctx.target[i];
    tree.nodes[node_id].value = sum / static_cast<double>(idx.size());
    tree.nodes[node_id].n = static_cast<int>(idx.size());

    const bool depth_ok = ctx.params.max_depth < 0 || depth < ctx.params.max_depth;
    if (!depth_ok) return node_id;

    const BestSplit split = find_split(ctx, idx);
    if (split.feature < 0) return node_id;

    std::vector<int> left_idx, right_idx;
    left_idx.reserve(idx.size());
    right_idx.reserve(idx.size());
    for (int i : idx) {
        (ctx.features(i, split.feature) <= split.threshold ? left_idx : right_idx).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();

    tree.nodes[node_id].feature = split.feature;
    tree.nodes[node_id].threshold = split.threshold;
    const int left = build_node(ctx, tree, left_idx, depth + 1);
    tree.nodes[node_id].left = left;
    const int right = build_node(ctx, tree, right_idx, depth + 1);
    tree.nodes[node_id].right = right;
    return node_id;
}

Tree build_tree(const Eigen::MatrixXd& features, const Eigen::VectorXd& target,
                const TreeParams& params, SplitCriterion criterion, Rng* rng,
                std::vector<int> idx) {
    BuildContext ctx{features, target, params, criterion, rng};
    Tree tree;
    build_node(ctx, tree, idx, 0);
    return tree;
}

// ---------------------------------------------------------------------------
// parameters and grids
// ---------------------------------------------------------------------------

struct ResolvedParams {
    int max_depth = -1;
    int min_samples_leaf = 1;
    int n_estimators = kDefaultForestSize;
};

ResolvedParams resolve(const Family family, const std::map<std::string, int>& params) {
    ResolvedParams out;
    if (family == Family::GradientBoostingRegressor || family == Family::GradientBoostingClassifier) {
        out.max_depth = 3;
    }
    for (const auto& [key, value] : params) {
        if (key == "max_depth") {
            out.max_depth = value;
        } else if (key == "min_samples_leaf") {
            out.min_samples_leaf = std::max(1, value);
        } else if (key == "n_estimators") {
            out.n_estimators = std::max(1, value);
        } else {
            throw std::invalid_argument("unknown learner parameter '" + key + "'");
        }
    }
    return out;
}

std::vector<std::map<std::string, int>> enumerate_grid(const Grid& grid) {
    if (grid.empty()) throw std::invalid_argument("learner grid must not be empty");
    for (const auto& [key, values] : grid) {
        if (key != "max_depth" && key != "min_samples_leaf" && key != "n_estimators") {
            throw std::invalid_argument("unknown grid parameter '" + key + "'");
        }
        if (values.empty()) {
            throw std::invalid_argument("grid parameter '" + key + "' has no candidate values");
        }
    }
    std::vector<std::map<std::string, int>> out{{}};
    for (const auto& [key, values] : grid) {  // std::map iterates keys in order
        std::vector<std::map<std::string, int>> next;
        next.reserve(out.size() * values.size());
        for (const auto& base : out) {
            for (int v : values) {
                auto candidate = base;
                candidate[key] = v;
                next.push_back(std::move(candidate));
            }
        }
        out = std::move(next);
    }
    return out;
}

// ---------------------------------------------------------------------------
// forest / boosting fits with fixed parameters
// ---------------------------------------------------------------------------

int default_mtry(Family family, int p) {
    if (family == Family::RandomForestClassifier) {
        return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(p)))));
    }
    return std::max(1, p / 3);
}

FittedModel fit_forest(Family family, const ResolvedParams& rp, const Eigen::MatrixXd& features,
                       const Eigen::VectorXd& target, std::uint64_t seed) {
    FittedModel model;
    model.family = family;
    model.is_classifier = family_is_classifier(family);
    model.n_features = static_cast<int>(features.cols());
    model.seed = seed;

    const std::size_t n = static_cast<std::size_t>(features.rows());
    TreeParams tp;
    tp.max_depth = rp.max_depth;
    tp.min_samples_leaf = rp.min_samples_leaf;
    tp.mtry = default_mtry(family, model.n_features);
    const SplitCriterion criterion =
        model.is_classifier ? SplitCriterion::Gini : SplitCriterion::Variance;

    model.trees.resize(static_cast<std::size_t>(rp.n_estimators));
    parallel_for(model.trees.size(), [&](std::size_t b) {
        Rng rng(derive_seed(seed, kTagTree, b));
        std::vector<int> bootstrap(n);
        for (std::size_t i = 0; i < n; ++i) {
            bootstrap[i] = static_cast<int>(rng.below(n));
        }
        std::sort(bootstrap.begin(), bootstrap.end());
        model.trees[b] = build_tree(features, target, tp, criterion, &rng, std::move(bootstrap));
    });
    return model;
}

double mse_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
    return (pred - truth).squaredNorm() / static_cast<double>(truth.size());
}

double log_loss(const Eigen::VectorXd& prob, const Eigen::VectorXd& truth) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < truth.size(); ++i) {
        const double p = clip_prob(prob[i]);
        total += truth[i] > 0.5 ? -std::log(p) : -std::log(1.0 - p);
    }
    return total / static_cast<double>(truth.size());
}

FittedModel fit_boosting(Family family, const ResolvedParams& rp, const Eigen::MatrixXd& features,
                         const Eigen::VectorXd& target, std::uint64_t seed) {
    FittedModel model;
    model.family = family;
    model.is_classifier = family_is_classifier(family);
    model.n_features = static_cast<int>(features.cols());
    model.seed = seed;

    const Eigen::Index n = features.rows();
    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);

    TreeParams tp;
    tp.max_depth = rp.max_depth;
    tp.min_samples_leaf = rp.min_samples_leaf;
    tp.mtry = 0;

    Eigen::VectorXd score(n);
    if (model.is_classifier) {
        const double p = clip_prob(target.mean());
        model.base_score = std::log(p / (1.0 - p));
    } else {
        model.base_score = target.mean();
    }
    score.setConstant(model.base_score);

    auto loss_at = [&](const Eigen::VectorXd& s) {
        if (!model.is_classifier) return mse_loss(s, target);
        Eigen::VectorXd prob(n);
        for (Eigen::Index i = 0; i < n; ++i) prob[i] = sigmoid(s[i]);
        return log_loss(prob, target);
    };

    double current_loss = loss_at(score);
    for (int stage = 0; stage < rp.n_estimators; ++stage) {
        Eigen::VectorXd gradient(n);
        Eigen::VectorXd hessian(n);
        if (model.is_classifier) {
            for (Eigen::Index i = 0; i < n; ++i) {
                const double p = sigmoid(score[i]);
                gradient[i] = target[i] - p;
                hessian[i] = std::max(1e-12, p * (1.0 - p));
            }
        } else {
            gradient = target - score;
            hessian.setOnes();
        }

        Tree tree = build_tree(features, gradient, tp, SplitCriterion::Variance, nullptr, all);

        // Newton leaf values (for squared error this is just the leaf mean)
        std::vector<double> num(tree.nodes.size(), 0.0), den(tree.nodes.size(), 0.0);
        std::vector<int> leaf_of(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            const int leaf = tree.leaf_index(features, i);
            leaf_of[static_cast<std::size_t>(i)] = leaf;
            num[static_cast<std::size_t>(leaf)] += gradient[i];
            den[static_cast<std::size_t>(leaf)] += hessian[i];
        }
        for (std::size_t node = 0; node < tree.nodes.size(); ++node) {
            if (tree.nodes[node].feature >= 0) continue;
            const double step = den[node] > 0.0 ? num[node] / den[node] : 0.0;
            tree.nodes[node].value = std::clamp(step, -kGbLeafClip, kGbLeafClip);
        }

        // shrinkage with backoff so training loss never increases
        double scale = kGbLearningRate;
        Eigen::VectorXd trial(n);
        double trial_loss = 0.0;
        for (int backoff = 0;; ++backoff) {
            for (Eigen::Index i = 0; i < n; ++i) {
                trial[i] = score[i] + scale * tree.nodes[static_cast<std::size_t>(
                                                  leaf_of[static_cast<std::size_t>(i)])].value;
            }
            trial_loss = loss_at(trial);
            if (trial_loss <= current_loss || backoff >= 30) break;
            scale *= 0.5;
        }
        if (trial_loss > current_loss) break;  // no usable step left
        for (auto& node : tree.nodes) {
            if (node.feature < 0) node.value *= scale;
        }
        score = trial;
        current_loss = trial_loss;
        model.trees.push_back(std::move(tree));
    }
    return model;
}

FittedModel fit_with_params(Family family, const std::map<std::string, int>& params,
                            const Eigen::MatrixXd& features, const Eigen::VectorXd& target,
                            std::uint64_t seed) {
    const ResolvedParams rp = resolve(family, params);
    FittedModel model;
    if (family == Family::RandomForestRegressor || family == Family::RandomForestClassifier) {
        model = fit_forest(family, rp, features, target, seed);
    } else {
        model = fit_boosting(family, rp, features, target, seed);
    }
    model.chosen_params = params;
    return model;
}

FittedModel fit_constant(Family family, double value, int n_features, std::uint64_t seed) {
    FittedModel model;
    model.family = family;
    model.is_classifier = family_is_classifier(family);
    model.constant_model = true;
    model.base_score = model.is_classifier ? clip_prob(value) : value;
    model.n_features = n_features;
    model.seed = seed;
    model.warnings.push_back("constant target; fitted a constant predictor");
    return model;
}

void validate_inputs(const Eigen::MatrixXd& features, const Eigen::VectorXd& target,
                     bool classifier) {
    if (features.rows() != target.size()) {
        throw std::invalid_argument("learner: feature/target row mismatch");
    }
    if (features.rows() < 10) throw std::invalid_argument("learner: need at least 10 rows");
    if (classifier) {
        for (Eigen::Index i = 0; i < target.size(); ++i) {
            if (target[i] != 0.0 && target[i] != 1.0) {
                throw std::invalid_argument("classifier target must be 0/1");
            }
        }
    }
}

double cv_loss(Family family, const std::map<std::string, int>& params,
               const Eigen::MatrixXd& features, const Eigen::VectorXd& target,
               const std::vector<int>& folds, int k, std::uint64_t seed) {
    const std::size_t n = static_cast<std::size_t>(features.rows());
    double total = 0.0;
    for (int fold = 0; fold < k; ++fold) {
        std::vector<int> train, test;
        for (std::size_t i = 0; i < n; ++i) {
            (folds[i] == fold ? test : train).push_back(static_cast<int>(i));
        }
        const Eigen::MatrixXd train_x = take_rows(features, train);
        const Eigen::VectorXd train_y = take_rows(target, train);
        const Eigen::MatrixXd test_x = take_rows(features, test);
        const Eigen::VectorXd test_y = take_rows(target, test);

        FittedModel fold_model;
        if (train_y.minCoeff() == train_y.maxCoeff()) {
            fold_model = fit_constant(family, train_y[0], static_cast<int>(features.cols()),
                                      derive_seed(seed, kTagGridFit, static_cast<std::uint64_t>(fold)));
        } else {
            fold_model = fit_with_params(family, params, train_x, train_y,
                                         derive_seed(seed, kTagGridFit, static_cast<std::uint64_t>(fold)));
        }
        const Eigen::VectorXd pred = predict(fold_model, test_x);
        total += family_is_classifier(family) ? log_loss(pred, test_y) : mse_loss(pred, test_y);
    }
    return total / static_cast<double>(k);
}

}  // namespace

const char* to_string(Family f) {
    switch (f) {
        case Family::RandomForestRegressor: return "RandomForestRegressor";
        case Family::GradientBoostingRegressor: return "GradientBoostingRegressor";
        case Family::RandomForestClassifier: return "RandomForestClassifier";
        case Family::GradientBoostingClassifier: return "GradientBoostingClassifier";
    }
    return "?";
}

bool family_is_classifier(Family f) {
    return f == Family::RandomForestClassifier || f == Family::GradientBoostingClassifier;
}

LearnerSpec default_spec(Family family, std::uint64_t seed) {
    LearnerSpec spec;
    spec.family = family;
    spec.seed = seed;
    switch (family) {
        case Family::RandomForestRegressor:
            spec.grid = {{"max_depth", {3, -1}}, {"min_samples_leaf", {10, 50}}};
            break;
        case Family::GradientBoostingRegressor:
            spec.grid = {{"n_estimators", {50, 100}}, {"max_depth", {3}}, {"min_samples_leaf", {10, 30}}};
            break;
        case Family::RandomForestClassifier:
            spec.grid = {{"max_depth", {3, 5}}, {"min_samples_leaf", {10, 50}}};
            break;
        case Family::GradientBoostingClassifier:
            spec.grid = {{"n_estimators", {50, 100}}, {"max_depth", {3}}, {"min_samples_leaf", {10, 30}}};
            break;
    }
    return spec;
}

double Tree::predict_row(const Eigen::MatrixXd& features, Eigen::Index row) const {
    return nodes[static_cast<std::size_t>(leaf_index(features, row))].value;
}

int Tree::leaf_index(const Eigen::MatrixXd& features, Eigen::Index row) const {
    int node = 0;
    while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const TreeNode& cur = nodes[static_cast<std::size_t>(node)];
        node = features(row, cur.feature) <= cur.threshold ? cur.left : cur.right;
    }
    return node;
}

int Tree::depth() const {
    std::vector<std::pair<int, int>> stack{{0, 0}};
    int max_depth = 0;
    while (!stack.empty()) {
        const auto [node, d] = stack.back();
        stack.pop_back();
        max_depth = std::max(max_depth, d);
        const TreeNode& cur = nodes[static_cast<std::size_t>(node)];
        if (cur.feature >= 0) {
            stack.emplace_back(cur.left, d + 1);
            stack.emplace_back(cur.right, d + 1);
        }
    }
    return max_depth;
}

Tree fit_tree(const Eigen::MatrixXd& features, const Eigen::VectorXd& target,
              const TreeParams& params, SplitCriterion criterion) {
    if (features.rows() != target.size() || features.rows() == 0) {
        throw std::invalid_argument("fit_tree: bad inputs");
    }
    std::vector<int> all(static_cast<std::size_t>(features.rows()));
    std::iota(all.begin(), all.end(), 0);
    return build_tree(features, target, params, criterion, nullptr, std::move(all));
}

FittedModel fit_learner(const LearnerSpec& spec, const Eigen::MatrixXd& features,
                        const Eigen::VectorXd& target) {
    const bool classifier = family_is_classifier(spec.family);
    validate_inputs(features, target, classifier);

    if (target.minCoeff() == target.maxCoeff()) {
        return fit_constant(spec.family, target[0], static_cast<int>(features.cols()), spec.seed);
    }

    const auto candidates = enumerate_grid(spec.grid);
    std::size_t best = 0;
    if (candidates.size() > 1) {
        const std::vector<int> folds =
            classifier ? stratified_folds(target, kGridCvFolds, derive_seed(spec.seed, kTagGridFolds))
                       : make_folds(static_cast<std::size_t>(features.rows()), kGridCvFolds,
                                    derive_seed(spec.seed, kTagGridFolds));
        double best_loss = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            const double loss = cv_loss(spec.family, candidates[c], features, target, folds,
                                        kGridCvFolds, derive_seed(spec.seed, kTagGridFit, c));
            if (loss < best_loss) {
                best_loss = loss;
                best = c;
            }
        }
    }

    FittedModel model = fit_with_params(spec.family, candidates[best], features, target,
                                        derive_seed(spec.seed, kTagFinalFit));
    return model;
}

Eigen::VectorXd predict(const FittedModel& model, const Eigen::MatrixXd& features) {
    if (static_cast<int>(features.cols()) != model.n_features) {
        throw std::invalid_argument("predict: feature width mismatch (expected " +
                                    std::to_string(model.n_features) + ", got " +
                                    std::to_string(features.cols()) + ")");
    }
    const Eigen::Index n = features.rows();
    Eigen::VectorXd out(n);
    if (n == 0) return out;

    if (model.constant_model) {
        out.setConstant(model.base_score);
        return out;
    }

    const bool boosting = model.family == Family::GradientBoostingRegressor ||
                          model.family == Family::GradientBoostingClassifier;
    if (boosting) {
        for (Eigen::Index i = 0; i < n; ++i) {
            double score = model.base_score;
            for (const Tree& tree : model.trees) score += tree.predict_row(features, i);
            out[i] = model.is_classifier ? clip_prob(sigmoid(score)) : score;
        }
        return out;
    }

    // forest: order-invariant mean over trees
    std::vector<double> votes(model.trees.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t b = 0; b < model.trees.size(); ++b) {
            votes[b] = model.trees[b].predict_row(features, i);
        }
        const double mean = stable_mean(votes);
        out[i] = model.is_classifier ? clip_prob(mean) : mean;
    }
    return out;
}

std::vector<int> make_folds(std::size_t n, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("folds: k must be at least 2");
    if (static_cast<std::size_t>(k) > n) throw std::invalid_argument("folds: k exceeds sample count");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<int> folds(n);
    for (std::size_t i = 0; i < n; ++i) folds[order[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    return folds;
}

std::vector<int> stratified_folds(const Eigen::VectorXd& binary_target, int k, std::uint64_t seed) {
    const std::size_t n = static_cast<std::size_t>(binary_target.size());
    if (k < 2) throw std::invalid_argument("folds: k must be at least 2");
    if (static_cast<std::size_t>(k) > n) throw std::invalid_argument("folds: k exceeds sample count");
    std::vector<std::size_t> zeros, ones;
    for (std::size_t i = 0; i < n; ++i) {
        (binary_target[static_cast<Eigen::Index>(i)] > 0.5 ? ones : zeros).push_back(i);
    }
    Rng rng(seed);
    rng.shuffle(zeros);
    rng.shuffle(ones);
    std::vector<int> folds(n);
    int cursor = 0;
    for (std::size_t i = 0; i < zeros.size(); ++i) folds[zeros[i]] = static_cast<int>((cursor + i) % static_cast<std::size_t>(k));
    cursor += static_cast<int>(zeros.size() % static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < ones.size(); ++i) folds[ones[i]] = static_cast<int>((cursor + i) % static_cast<std::size_t>(k));
    return folds;
}

CrossFitResult cross_fit(const LearnerSpec& spec, const Eigen::MatrixXd& features,
                         const Eigen::VectorXd& target, int k, std::uint64_t seed) {
    const std::size_t n = static_cast<std::size_t>(features.rows());
    const bool classifier = family_is_classifier(spec.family);
    const std::vector<int> folds = classifier
                                       ? stratified_folds(target, k, derive_seed(seed, kTagCrossFolds))
                                       : make_folds(n, k, derive_seed(seed, kTagCrossFolds));
    LearnerSpec run = spec;
    run.seed = seed;
    return cross_fit_with_folds(run, features, target, folds);
}

CrossFitResult cross_fit_with_folds(const LearnerSpec& spec, const Eigen::MatrixXd& features,
                                    const Eigen::VectorXd& target, const std::vector<int>& folds) {
    const std::size_t n = static_cast<std::size_t>(features.rows());
    if (folds.size() != n) throw std::invalid_argument("cross_fit: fold assignment size mismatch");
    const int k = folds.empty() ? 0 : *std::max_element(folds.begin(), folds.end()) + 1;
    if (k < 2) throw std::invalid_argument("cross_fit: need at least 2 folds");
    std::vector<std::size_t> fold_sizes(static_cast<std::size_t>(k), 0);
    for (int f : folds) {
        if (f < 0 || f >= k) throw std::invalid_argument("cross_fit: bad fold index");
        ++fold_sizes[static_cast<std::size_t>(f)];
    }
    for (std::size_t size : fold_sizes) {
        if (size == 0) throw std::invalid_argument("cross_fit: empty fold");
    }

    // hyperparameters are picked once on the full data; folds refit the
    // pinned candidate on their complements
    LearnerSpec pinned = spec;
    if (enumerate_grid(spec.grid).size() > 1 && target.minCoeff() != target.maxCoeff()) {
        pinned = pin(select_best({spec}, features, target, spec.seed), spec.seed);
    }
    const auto params = enumerate_grid(pinned.grid).front();

    CrossFitResult result;
    result.k = k;
    result.fold_assignment = folds;
    result.predictions.resize(static_cast<Eigen::Index>(n));

    std::vector<Eigen::VectorXd> fold_predictions(static_cast<std::size_t>(k));
    std::vector<std::vector<int>> fold_rows(static_cast<std::size_t>(k));
    parallel_for(static_cast<std::size_t>(k), [&](std::size_t fold) {
        std::vector<int> train, test;
        for (std::size_t i = 0; i < n; ++i) {
            (folds[i] == static_cast<int>(fold) ? test : train).push_back(static_cast<int>(i));
        }
        const Eigen::MatrixXd train_x = take_rows(features, train);
        const Eigen::VectorXd train_y = take_rows(target, train);
        const std::uint64_t fold_seed = derive_seed(pinned.seed, kTagCrossFit, fold);
        FittedModel model;
        if (train_y.minCoeff() == train_y.maxCoeff()) {
            model = fit_constant(pinned.family, train_y[0], static_cast<int>(features.cols()),
                                 fold_seed);
        } else {
            model = fit_with_params(pinned.family, params, train_x, train_y, fold_seed);
        }
        fold_predictions[fold] = predict(model, take_rows(features, test));
        fold_rows[fold] = std::move(test);
    });

    for (std::size_t fold = 0; fold < static_cast<std::size_t>(k); ++fold) {
        for (std::size_t j = 0; j < fold_rows[fold].size(); ++j) {
            result.predictions[fold_rows[fold][j]] = fold_predictions[fold][static_cast<Eigen::Index>(j)];
        }
    }
    return result;
}

Candidate select_best(const std::vector<LearnerSpec>& specs, const Eigen::MatrixXd& features,
                      const Eigen::VectorXd& target, std::uint64_t seed) {
    if (specs.empty()) throw std::invalid_argument("select_best: no candidate specs");
    const bool classifier = family_is_classifier(specs.front().family);
    for (const LearnerSpec& spec : specs) {
        if (family_is_classifier(spec.family) != classifier) {
            throw std::invalid_argument("select_best: mixed classifier/regressor candidates");
        }
    }
    validate_inputs(features, target, classifier);
    if (target.minCoeff() == target.maxCoeff()) {
        // degenerate; any candidate works, the fit will collapse to a constant
        return Candidate{specs.front().family, enumerate_grid(specs.front().grid).front()};
    }

    const std::vector<int> folds =
        classifier ? stratified_folds(target, kGridCvFolds, derive_seed(seed, kTagGridFolds))
                   : make_folds(static_cast<std::size_t>(features.rows()), kGridCvFolds,
                                derive_seed(seed, kTagGridFolds));

    Candidate best_candidate{specs.front().family, {}};
    double best_loss = std::numeric_limits<double>::infinity();
    std::uint64_t candidate_counter = 0;
    for (const LearnerSpec& spec : specs) {
        for (const auto& params : enumerate_grid(spec.grid)) {
            const double loss = cv_loss(spec.family, params, features, target, folds, kGridCvFolds,
                                        derive_seed(seed, kTagGridFit, candidate_counter));
            if (loss < best_loss) {
                best_loss = loss;
                best_candidate = Candidate{spec.family, params};
            }
            ++candidate_counter;
        }
    }
    return best_candidate;
}

LearnerSpec pin(const Candidate& candidate, std::uint64_t seed) {
    LearnerSpec spec;
    spec.family = candidate.family;
    spec.seed = seed;
    for (const auto& [key, value] : candidate.params) spec.grid[key] = {value};
    return spec;
}

std::string FittedModel::to_json() const {
    nlohmann::ordered_json j;
    j["family"] = learners::to_string(family);
    j["is_classifier"] = is_classifier;
    j["constant_model"] = constant_model;
    j["base_score"] = base_score;
    j["n_features"] = n_features;
    auto params = nlohmann::ordered_json::object();
    for (const auto& [key, value] : chosen_params) {
        if (key == "max_depth" && value < 0) {
            params[key] = nullptr;
        } else {
            params[key] = value;
        }
    }
    j["chosen_params"] = params;
    j["n_trees"] = trees.size();
    auto dumped = nlohmann::ordered_json::array();
    for (const Tree& tree : trees) {
        auto nodes = nlohmann::ordered_json::array();
        for (const TreeNode& node : tree.nodes) {
            nodes.push_back({{"feature", node.feature},
                             {"threshold", node.threshold},
                             {"left", node.left},
                             {"right", node.right},
                             {"value", node.value},
                             {"n", node.n}});
        }
        dumped.push_back(std::move(nodes));
    }
    j["trees"] = std::move(dumped);
    return j.dump();
}

}  // namespace graspcause::learners
