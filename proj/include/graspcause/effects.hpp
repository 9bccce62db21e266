#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "graspcause/events.hpp"
#include "graspcause/honest_forest.hpp"
#include "graspcause/learners.hpp"

namespace graspcause::effects {

enum class EstimatorId { LDML, LDRL, FDML, FDRL };

const char* to_string(EstimatorId id);
EstimatorId estimator_from_string(const std::string& name);

struct EstimatorConfig {
    // First-stage candidates; the winner is picked by cross-validated loss
    // across families, then cross-fitting refits it with fixed parameters.
    std::vector<learners::LearnerSpec> outcome_models;
    std::vector<learners::LearnerSpec> propensity_models;
    /// Replace the ML nuisances by per-fold least squares; with linear data
    /// this makes LDML match the partialling-out OLS coefficient exactly.
    bool linear_nuisance = false;
    int k = 5;           // cross-fitting folds, stratified on the treatment
    double alpha = 0.1;  // 90% confidence intervals
    std::uint64_t seed = 0;
    double clip_lo = 0.05;  // propensity clipping for the DR pseudo-outcomes
    double clip_hi = 0.95;
    HonestForestParams forest;
};

EstimatorConfig default_config(std::uint64_t seed);

struct EffectEstimate {
    EstimatorId estimator = EstimatorId::LDML;
    std::vector<double> cate;  // theta(x_i), aligned with the input rows
    double effect = 0.0;       // order-invariant mean of cate
    double ci_low = 0.0;
    double ci_high = 0.0;
    double alpha = 0.1;
    int n = 0;
    std::map<std::string, double> diagnostics;
    std::vector<std::string> warnings;
};

/// Double machine learning with a linear final stage: cross-fit outcome and
/// treatment nuisances, regress the outcome residuals on [resid_t, resid_t*x]
/// without a free intercept, and read theta(x) off the coefficients. CI from
/// the HC1 sandwich covariance pushed through the mean map.
EffectEstimate estimate_ldml(const events::DesignMatrix& dm, const EstimatorConfig& cfg);

/// Doubly robust learner with a linear final stage: cross-fit mu(t,x,w) and
/// the propensity, build the AIPW pseudo-outcomes, regress them on [1, x].
EffectEstimate estimate_ldrl(const events::DesignMatrix& dm, const EstimatorConfig& cfg);

/// DML residualization followed by an honest causal forest over x; CI via
/// bootstrap of little bags.
EffectEstimate estimate_fdml(const events::DesignMatrix& dm, const EstimatorConfig& cfg);

/// DR pseudo-outcomes followed by an honest regression forest over x.
EffectEstimate estimate_fdrl(const events::DesignMatrix& dm, const EstimatorConfig& cfg);

EffectEstimate estimate(const events::DesignMatrix& dm, EstimatorId id,
                        const EstimatorConfig& cfg);

double cate_mean(const EffectEstimate& estimate);

/// AIPW pseudo-outcomes: mu1-mu0 + t(y-mu1)/p - (1-t)(y-mu0)/(1-p), with the
/// propensity clipped to [clip_lo, clip_hi]. Exposed for the double-robustness
/// checks, which corrupt one nuisance at a time.
std::vector<double> drl_pseudo_outcomes(const Eigen::VectorXd& y, const Eigen::VectorXd& t,
                                        const Eigen::VectorXd& mu0, const Eigen::VectorXd& mu1,
                                        const Eigen::VectorXd& propensity, double clip_lo,
                                        double clip_hi);

}  // namespace graspcause::effects
