#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace graspcause::learners {

enum class Family {
    RandomForestRegressor,
    GradientBoostingRegressor,
    RandomForestClassifier,
    GradientBoostingClassifier,
};

const char* to_string(Family f);
bool family_is_classifier(Family f);

/// Hyperparameter grid. Allowed keys: max_depth, min_samples_leaf,
/// n_estimators. A max_depth of -1 means unbounded.
using Grid = std::map<std::string, std::vector<int>>;

struct LearnerSpec {
    Family family = Family::RandomForestRegressor;
    Grid grid;
    std::uint64_t seed = 0;
};

/// Default grids for each family (forest size 100 where the grid does not
/// list n_estimators; boosting learning rate fixed at 0.1).
LearnerSpec default_spec(Family family, std::uint64_t seed = 0);

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf mean / class fraction / boosting step
    int n = 0;
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict_row(const Eigen::MatrixXd& features, Eigen::Index row) const;
    int leaf_index(const Eigen::MatrixXd& features, Eigen::Index row) const;
    int depth() const;
};

struct TreeParams {
    int max_depth = -1;        // -1: unbounded
    int min_samples_leaf = 1;
    int mtry = 0;              // 0: consider every feature at each split
};

enum class SplitCriterion { Variance, Gini };

/// Deterministic CART fit on the full sample: splits maximize impurity
/// reduction; ties go to the lowest feature index, then lowest threshold.
Tree fit_tree(const Eigen::MatrixXd& features, const Eigen::VectorXd& target,
              const TreeParams& params, SplitCriterion criterion = SplitCriterion::Variance);

struct FittedModel {
    Family family = Family::RandomForestRegressor;
    std::map<std::string, int> chosen_params;
    std::vector<Tree> trees;
    bool is_classifier = false;
    bool constant_model = false;  // degenerate-target fallback
    double base_score = 0.0;      // constant prediction / boosting init
    int n_features = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;

    std::string to_json() const;
};

/// Grid search via 3-fold cross-validation (squared error for regressors,
/// log loss for classifiers), then a refit of the winning candidate on all
/// rows. A constant target degrades to a constant predictor with a warning.
FittedModel fit_learner(const LearnerSpec& spec, const Eigen::MatrixXd& features,
                        const Eigen::VectorXd& target);

/// Regressors return the ensemble mean; classifiers the probability of class
/// one, clipped to [1e-6, 1 - 1e-6].
Eigen::VectorXd predict(const FittedModel& model, const Eigen::MatrixXd& features);

struct CrossFitResult {
    Eigen::VectorXd predictions;       // out-of-fold
    std::vector<int> fold_assignment;  // per sample
    int k = 0;
};

std::vector<int> make_folds(std::size_t n, int k, std::uint64_t seed);
std::vector<int> stratified_folds(const Eigen::VectorXd& binary_target, int k, std::uint64_t seed);

/// Hyperparameters are selected once on the full data, then each fold is
/// refit with the pinned candidate on the fold complement; every sample's
/// prediction comes from a model that never saw it.
CrossFitResult cross_fit(const LearnerSpec& spec, const Eigen::MatrixXd& features,
                         const Eigen::VectorXd& target, int k, std::uint64_t seed);

CrossFitResult cross_fit_with_folds(const LearnerSpec& spec, const Eigen::MatrixXd& features,
                                    const Eigen::VectorXd& target, const std::vector<int>& folds);

struct Candidate {
    Family family;
    std::map<std::string, int> params;
};

/// Cross-validated selection across several candidate families and their
/// grids (one shared fold assignment), as the first stage of the two-stage
/// estimators. Returns the winning (family, params) pair.
Candidate select_best(const std::vector<LearnerSpec>& specs, const Eigen::MatrixXd& features,
                      const Eigen::VectorXd& target, std::uint64_t seed);

/// LearnerSpec pinned to a single candidate, for cross-fitting with fixed
/// hyperparameters.
LearnerSpec pin(const Candidate& candidate, std::uint64_t seed);

}  // namespace graspcause::learners
