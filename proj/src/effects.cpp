#include "graspcause/effects.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "graspcause/ols.hpp"
#include "graspcause/rng.hpp"
#include "graspcause/stats.hpp"

namespace graspcause::effects {

namespace {

constexpr std::uint64_t kTagFolds = 21;
constexpr std::uint64_t kTagOutcome = 22;
constexpr std::uint64_t kTagPropensity = 23;
constexpr std::uint64_t kTagMu = 24;
constexpr std::uint64_t kTagForest = 25;

bool is_binary(const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v[i] != 0.0 && v[i] != 1.0) return false;
    }
    return true;
}

Eigen::MatrixXd hstack(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows(), a.cols() + b.cols());
    out.leftCols(a.cols()) = a;
    out.rightCols(b.cols()) = b;
    return out;
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& m) {
    Eigen::MatrixXd out(m.rows(), m.cols() + 1);
    out.col(0).setOnes();
    out.rightCols(m.cols()) = m;
    return out;
}

// Rows sorted by content; estimators compute in canonical order so that
// permuting the input rows changes no reported number.
std::vector<Eigen::Index> canonical_order(const events::DesignMatrix& dm) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(dm.n()));
    std::iota(order.begin(), order.end(), 0);
    auto row_less = [&](Eigen::Index lhs, Eigen::Index rhs) {
        if (dm.y[lhs] != dm.y[rhs]) return dm.y[lhs] < dm.y[rhs];
        if (dm.t[lhs] != dm.t[rhs]) return dm.t[lhs] < dm.t[rhs];
        for (Eigen::Index j = 0; j < dm.x.cols(); ++j) {
            if (dm.x(lhs, j) != dm.x(rhs, j)) return dm.x(lhs, j) < dm.x(rhs, j);
        }
        for (Eigen::Index j = 0; j < dm.w.cols(); ++j) {
            if (dm.w(lhs, j) != dm.w(rhs, j)) return dm.w(lhs, j) < dm.w(rhs, j);
        }
        return false;
    };
    std::sort(order.begin(), order.end(), row_less);
    return order;
}

events::DesignMatrix reorder(const events::DesignMatrix& dm,
                             const std::vector<Eigen::Index>& order) {
    events::DesignMatrix out;
    const Eigen::Index n = dm.n();
    out.y.resize(n);
    out.t.resize(n);
    out.x.resize(n, dm.x.cols());
    out.w.resize(n, dm.w.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        out.y[i] = dm.y[order[static_cast<std::size_t>(i)]];
        out.t[i] = dm.t[order[static_cast<std::size_t>(i)]];
        out.x.row(i) = dm.x.row(order[static_cast<std::size_t>(i)]);
        out.w.row(i) = dm.w.row(order[static_cast<std::size_t>(i)]);
    }
    out.x_names = dm.x_names;
    out.w_names = dm.w_names;
    return out;
}

void validate_dm(const events::DesignMatrix& dm) {
    const Eigen::Index n = dm.n();
    if (n < 20) throw std::invalid_argument("estimator: need at least 20 samples");
    if (dm.t.size() != n || dm.x.rows() != n || dm.w.rows() != n) {
        throw std::invalid_argument("estimator: design matrix blocks disagree on row count");
    }
    if (dm.t.minCoeff() == dm.t.maxCoeff()) {
        throw std::invalid_argument("estimator: treatment has no variation");
    }
}

// Least squares prediction that tolerates rank deficiency (one-hot blocks
// plus an intercept make the design collinear by construction). Columns are
// standardized and a tiny ridge term keeps near-null directions from blowing
// up out-of-fold; exactly dependent directions get a zero coefficient. The
// 1e-10 relative shrinkage is far below every tolerance asserted on linear
// fits.
Eigen::VectorXd linear_fit_predict(const Eigen::MatrixXd& train_x, const Eigen::VectorXd& train_y,
                                   const Eigen::MatrixXd& test_x) {
    const Eigen::MatrixXd design = with_intercept(train_x);
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();

    Eigen::VectorXd scale(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double rms = std::sqrt(design.col(j).squaredNorm() / static_cast<double>(n));
        scale[j] = rms > 0.0 ? 1.0 / rms : 0.0;  // zero columns stay zero
    }
    const Eigen::MatrixXd scaled = design * scale.asDiagonal();
    Eigen::MatrixXd gram = scaled.transpose() * scaled;
    gram.diagonal().array() += 1e-10 * static_cast<double>(n);
    const Eigen::VectorXd coef = gram.ldlt().solve(scaled.transpose() * train_y);
    return with_intercept(test_x) * (scale.asDiagonal() * coef);
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

/// Out-of-fold predictions of target from features, either by the pinned
/// winner of a cross-validated family search or by per-fold least squares.
Eigen::VectorXd cross_fit_nuisance(const std::vector<learners::LearnerSpec>& specs,
                                   bool linear_mode, const Eigen::MatrixXd& features,
                                   const Eigen::VectorXd& target, const std::vector<int>& folds,
                                   std::uint64_t seed) {
    const std::size_t n = static_cast<std::size_t>(features.rows());
    const int k = *std::max_element(folds.begin(), folds.end()) + 1;
    if (linear_mode) {
        Eigen::VectorXd out(static_cast<Eigen::Index>(n));
        for (int fold = 0; fold < k; ++fold) {
            std::vector<int> train, test;
            for (std::size_t i = 0; i < n; ++i) {
                (folds[i] == fold ? test : train).push_back(static_cast<int>(i));
            }
            const Eigen::VectorXd pred = linear_fit_predict(
                take_rows(features, train), take_rows(target, train), take_rows(features, test));
            for (std::size_t j = 0; j < test.size(); ++j) out[test[j]] = pred[static_cast<Eigen::Index>(j)];
        }
        return out;
    }

    learners::LearnerSpec pinned =
        learners::pin(learners::select_best(specs, features, target, seed), seed);
    return learners::cross_fit_with_folds(pinned, features, target, folds).predictions;
}

/// Same, but the first feature column is the treatment and predictions are
/// produced at forced t=0 and t=1 (for the DR outcome model).
std::pair<Eigen::VectorXd, Eigen::VectorXd> cross_fit_mu(
    const std::vector<learners::LearnerSpec>& specs, bool linear_mode,
    const Eigen::MatrixXd& features_with_t, const Eigen::VectorXd& target,
    const std::vector<int>& folds, std::uint64_t seed) {
    const std::size_t n = static_cast<std::size_t>(features_with_t.rows());
    const int k = *std::max_element(folds.begin(), folds.end()) + 1;
    Eigen::VectorXd mu0(static_cast<Eigen::Index>(n));
    Eigen::VectorXd mu1(static_cast<Eigen::Index>(n));

    learners::LearnerSpec pinned;
    if (!linear_mode) {
        pinned = learners::pin(learners::select_best(specs, features_with_t, target, seed), seed);
    }

    for (int fold = 0; fold < k; ++fold) {
        std::vector<int> train, test;
        for (std::size_t i = 0; i < n; ++i) {
            (folds[i] == fold ? test : train).push_back(static_cast<int>(i));
        }
        Eigen::MatrixXd test0 = take_rows(features_with_t, test);
        Eigen::MatrixXd test1 = test0;
        test0.col(0).setZero();
        test1.col(0).setOnes();

        Eigen::VectorXd pred0, pred1;
        if (linear_mode) {
            const Eigen::MatrixXd train_x = take_rows(features_with_t, train);
            const Eigen::VectorXd train_y = take_rows(target, train);
            pred0 = linear_fit_predict(train_x, train_y, test0);
            pred1 = linear_fit_predict(train_x, train_y, test1);
        } else {
            const Eigen::MatrixXd train_x = take_rows(features_with_t, train);
            const Eigen::VectorXd train_y = take_rows(target, train);
            learners::LearnerSpec fold_spec = pinned;
            fold_spec.seed = derive_seed(pinned.seed, kTagMu, static_cast<std::uint64_t>(fold));
            learners::FittedModel model;
            if (train_y.minCoeff() == train_y.maxCoeff()) {
                // constant fold target: mu is flat in t as well
                pred0 = Eigen::VectorXd::Constant(test0.rows(), train_y[0]);
                pred1 = pred0;
            } else {
                model = learners::fit_learner(fold_spec, train_x, train_y);
                pred0 = learners::predict(model, test0);
                pred1 = learners::predict(model, test1);
            }
        }
        for (std::size_t j = 0; j < test.size(); ++j) {
            mu0[test[j]] = pred0[static_cast<Eigen::Index>(j)];
            mu1[test[j]] = pred1[static_cast<Eigen::Index>(j)];
        }
    }
    return {mu0, mu1};
}

struct Residualized {
    Eigen::VectorXd y_resid;
    Eigen::VectorXd t_resid;
    Eigen::VectorXd propensity;  // raw first-stage treatment predictions
};

Residualized residualize(const events::DesignMatrix& dm, const EstimatorConfig& cfg,
                         const std::vector<int>& folds) {
    const Eigen::MatrixXd features = hstack(dm.x, dm.w);
    Residualized out;
    const Eigen::VectorXd y_hat =
        cross_fit_nuisance(cfg.outcome_models, cfg.linear_nuisance, features, dm.y, folds,
                           derive_seed(cfg.seed, kTagOutcome));
    // non-binary treatments (numeric refutation perturbations) get a
    // regression first stage instead of a classifier
    const auto& t_specs = is_binary(dm.t) ? cfg.propensity_models : cfg.outcome_models;
    out.propensity = cross_fit_nuisance(t_specs, cfg.linear_nuisance, features, dm.t, folds,
                                        derive_seed(cfg.seed, kTagPropensity));
    out.y_resid = dm.y - y_hat;
    out.t_resid = dm.t - out.propensity;
    return out;
}

std::vector<int> estimation_folds(const events::DesignMatrix& dm, const EstimatorConfig& cfg) {
    if (cfg.k < 2) throw std::invalid_argument("estimator: k must be at least 2");
    const std::uint64_t seed = derive_seed(cfg.seed, kTagFolds);
    if (is_binary(dm.t)) return learners::stratified_folds(dm.t, cfg.k, seed);
    return learners::make_folds(static_cast<std::size_t>(dm.n()), cfg.k, seed);
}

void add_propensity_diagnostics(EffectEstimate& est, const Eigen::VectorXd& propensity) {
    est.diagnostics["propensity_min"] = propensity.minCoeff();
    est.diagnostics["propensity_max"] = propensity.maxCoeff();
}

void finish_linear_inference(EffectEstimate& est, const RobustOlsFit& fit,
                             const Eigen::MatrixXd& x, double alpha, Eigen::Index coef_offset) {
    // mean map g: effect = g' coef with g = (1, mean(x)); holds for both the
    // [t_resid, t_resid*x] and the [1, x] final stages
    Eigen::VectorXd g(fit.coef.size());
    g.setZero();
    g[coef_offset] = 1.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        std::vector<double> col(x.col(j).data(), x.col(j).data() + x.rows());
        g[coef_offset + 1 + j] = stable_mean(col);
    }
    const double variance = std::max(0.0, double(g.transpose() * fit.cov * g));
    const double df = std::max(3.0, static_cast<double>(x.rows() - fit.basis_rank));
    const double q = student_t_quantile(1.0 - alpha / 2.0, df);
    const double se = std::sqrt(variance);
    est.ci_low = est.effect - q * se;
    est.ci_high = est.effect + q * se;
    est.diagnostics["se"] = se;
}

// Enclosing basis for the leverage correction: the second-stage regressors
// together with the span the nuisances were fit on. The residual variance the
// plain plug-in sandwich sees is too small at n in the hundreds because the
// cross-fit first stage already consumed those dimensions.
Eigen::MatrixXd leverage_basis(const events::DesignMatrix& dm, const Eigen::MatrixXd& stage2) {
    Eigen::MatrixXd basis(dm.n(), 1 + dm.x.cols() + dm.w.cols() + stage2.cols());
    basis.col(0).setOnes();
    basis.middleCols(1, dm.x.cols()) = dm.x;
    basis.middleCols(1 + dm.x.cols(), dm.w.cols()) = dm.w;
    basis.rightCols(stage2.cols()) = stage2;
    return basis;
}

EffectEstimate make_estimate(EstimatorId id, const EstimatorConfig& cfg, Eigen::Index n) {
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
        throw std::invalid_argument("estimator: alpha must be in (0,1)");
    }
    EffectEstimate est;
    est.estimator = id;
    est.alpha = cfg.alpha;
    est.n = static_cast<int>(n);
    est.diagnostics["k"] = static_cast<double>(cfg.k);
    return est;
}

// Each estimator runs on canonically ordered rows; this maps the per-sample
// CATE vector back to the caller's row order.
std::vector<double> unpermute(const std::vector<double>& canonical,
                              const std::vector<Eigen::Index>& order) {
    std::vector<double> out(canonical.size());
    for (std::size_t i = 0; i < canonical.size(); ++i) {
        out[static_cast<std::size_t>(order[i])] = canonical[i];
    }
    return out;
}

EffectEstimate ldml_canonical(const events::DesignMatrix& dm, const EstimatorConfig& cfg) {
    EffectEstimate est = make_estimate(EstimatorId::LDML, cfg, dm.n());
    const std::vector<int> folds = estimation_folds(dm, cfg);
    const Residualized res = residualize(dm, cfg, folds);

    if (res.t_resid.cwiseAbs().maxCoeff() < 1e-12) {
        throw std::runtime_error("LDML: no treatment variation left after partialling out");
    }

    const Eigen::Index n = dm.n();
    const Eigen::Index px = dm.x.cols();
    Eigen::MatrixXd design(n, 1 + px);
    design.col(0) = res.t_resid;
    for (Eigen::Index j = 0; j < px; ++j) {
        design.col(1 + j) = res.t_resid.cwiseProduct(dm.x.col(j));
    }

    RobustOlsFit fit;
    try {
        fit = ols_sandwich_df(design, res.y_resid, leverage_basis(dm, design));
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string("LDML: ") + e.what());
    }

    est.cate.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        double theta = fit.coef[0];
        for (Eigen::Index j = 0; j < px; ++j) theta += fit.coef[1 + j] * dm.x(i, j);
        est.cate[static_cast<std::size_t>(i)] = theta;
    }
    est.effect = stable_mean(est.cate);
    finish_linear_inference(est, fit, dm.x, cfg.alpha, 0);

    add_propensity_diagnostics(est, res.propensity);
    {
        std::vector<double> ry(res.y_resid.data(), res.y_resid.data() + n);
        std::vector<double> rt(res.t_resid.data(), res.t_resid.data() + n);
        est.diagnostics["resid_var_y"] = sample_variance(ry);
        est.diagnostics["resid_var_t"] = sample_variance(rt);
    }
    return est;
}

struct PseudoOutcomes {
    Eigen::VectorXd psi;
    Eigen::VectorXd propensity_raw;
    double clipped_fraction = 0.0;
};

PseudoOutcomes dr_pseudo(const events::DesignMatrix& dm, const EstimatorConfig& cfg,
                         const std::vector<int>& folds, std::vector<std::string>& warnings) {
    const Eigen::MatrixXd features = hstack(dm.x, dm.w);
    Eigen::MatrixXd features_with_t(dm.n(), 1 + features.cols());
    features_with_t.col(0) = dm.t;
    features_with_t.rightCols(features.cols()) = features;

    const auto [mu0, mu1] =
        cross_fit_mu(cfg.outcome_models, cfg.linear_nuisance, features_with_t, dm.y, folds,
                     derive_seed(cfg.seed, kTagMu));
    const auto& t_specs = is_binary(dm.t) ? cfg.propensity_models : cfg.outcome_models;
    const Eigen::VectorXd p_raw =
        cross_fit_nuisance(t_specs, cfg.linear_nuisance, features, dm.t, folds,
                           derive_seed(cfg.seed, kTagPropensity));

    PseudoOutcomes out;
    out.propensity_raw = p_raw;
    Eigen::Index clipped = 0;
    for (Eigen::Index i = 0; i < p_raw.size(); ++i) {
        if (p_raw[i] < cfg.clip_lo || p_raw[i] > cfg.clip_hi) ++clipped;
    }
    out.clipped_fraction = static_cast<double>(clipped) / static_cast<double>(p_raw.size());
    if (out.clipped_fraction > 0.5) {
        warnings.push_back("small-overlap: more than half of the propensities were clipped to [" +
                           std::to_string(cfg.clip_lo) + ", " + std::to_string(cfg.clip_hi) + "]");
    }

    const std::vector<double> psi =
        drl_pseudo_outcomes(dm.y, dm.t, mu0, mu1, p_raw, cfg.clip_lo, cfg.clip_hi);
    out.psi = Eigen::Map<const Eigen::VectorXd>(psi.data(), static_cast<Eigen::Index>(psi.size()));
    return out;
}

EffectEstimate ldrl_canonical(const events::DesignMatrix& dm, const EstimatorConfig& cfg) {
    EffectEstimate est = make_estimate(EstimatorId::LDRL, cfg, dm.n());
    const std::vector<int> folds = estimation_folds(dm, cfg);
    const PseudoOutcomes po = dr_pseudo(dm, cfg, folds, est.warnings);

    RobustOlsFit fit;
    try {
        Eigen::MatrixXd t_col(dm.n(), 1);
        t_col.col(0) = dm.t;
        fit = ols_sandwich_df(with_intercept(dm.x), po.psi, leverage_basis(dm, t_col));
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string("LDRL: ") + e.what());
    }

    const Eigen::Index n = dm.n();
    est.cate.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        est.cate[static_cast<std::size_t>(i)] = fit.fitted[i];
    }
    est.effect = stable_mean(est.cate);
    finish_linear_inference(est, fit, dm.x, cfg.alpha, 0);
    add_propensity_diagnostics(est, po.propensity_raw);
    est.diagnostics["clipped_fraction"] = po.clipped_fraction;
    return est;
}

// variance_floor: the forest's pooled effect degenerates to a homogeneous
// (kernel-free) estimator when x carries no heterogeneity signal, so its CI
// must not undercut that estimator's influence-function variance.
void finish_forest_inference(EffectEstimate& est, const ForestInference& inference, double alpha,
                             const HonestForestParams& params, double variance_floor) {
    est.cate = inference.theta;
    est.effect = inference.effect;
    const double se = std::sqrt(std::max(inference.variance, variance_floor));
    const double groups = std::max(2, params.n_trees / params.little_bag_size);
    const double q = student_t_quantile(1.0 - alpha / 2.0, groups - 1.0);
    est.ci_low = est.effect - q * se;
    est.ci_high = est.effect + q * se;
    est.diagnostics["se"] = se;
    est.diagnostics["fallback_queries"] = static_cast<double>(inference.fallback_count);
    if (inference.fallback_count > 0) {
        est.warnings.push_back("forest denominator vanished at " +
                               std::to_string(inference.fallback_count) +
                               " query point(s); used the global ratio");
    }
}

EffectEstimate fdml_canonical(const events::DesignMatrix& dm, const EstimatorConfig& cfg) {
    EffectEstimate est = make_estimate(EstimatorId::FDML, cfg, dm.n());
    const std::vector<int> folds = estimation_folds(dm, cfg);
    const Residualized res = residualize(dm, cfg, folds);
    if (res.t_resid.cwiseAbs().maxCoeff() < 1e-12) {
        throw std::runtime_error("FDML: no treatment variation left after partialling out");
    }

    const Eigen::VectorXd a = res.y_resid.cwiseProduct(res.t_resid);
    const Eigen::VectorXd b = res.t_resid.cwiseAbs2();
    const HonestRatioForest forest(dm.x, a, b, cfg.forest, derive_seed(cfg.seed, kTagForest));

    // influence-function variance of the homogeneous ratio, with the same
    // degrees-of-freedom accounting as the linear stages
    double floor_var = 0.0;
    {
        const double theta0 = forest.global_ratio();
        const Eigen::VectorXd psi = a - theta0 * b;
        const double denom = b.sum();
        Eigen::MatrixXd t_col(dm.n(), 1);
        t_col.col(0) = res.t_resid;
        const Eigen::Index rank = leverage_basis(dm, t_col).colPivHouseholderQr().rank();
        const double dof_scale = static_cast<double>(dm.n()) /
                                 std::max(1.0, static_cast<double>(dm.n() - rank));
        if (denom > 0.0) {
            floor_var = dof_scale * dof_scale * psi.squaredNorm() / (denom * denom);
        }
    }
    finish_forest_inference(est, forest.infer(dm.x), cfg.alpha, cfg.forest, floor_var);

    add_propensity_diagnostics(est, res.propensity);
    {
        const Eigen::Index n = dm.n();
        std::vector<double> ry(res.y_resid.data(), res.y_resid.data() + n);
        std::vector<double> rt(res.t_resid.data(), res.t_resid.data() + n);
        est.diagnostics["resid_var_y"] = sample_variance(ry);
        est.diagnostics["resid_var_t"] = sample_variance(rt);
    }
    return est;
}

EffectEstimate fdrl_canonical(const events::DesignMatrix& dm, const EstimatorConfig& cfg) {
    EffectEstimate est = make_estimate(EstimatorId::FDRL, cfg, dm.n());
    const std::vector<int> folds = estimation_folds(dm, cfg);
    const PseudoOutcomes po = dr_pseudo(dm, cfg, folds, est.warnings);

    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(dm.n());
    const HonestRatioForest forest(dm.x, po.psi, ones, cfg.forest,
                                   derive_seed(cfg.seed, kTagForest));

    // floor: variance of the plain pseudo-outcome mean
    double floor_var = 0.0;
    {
        std::vector<double> psi(po.psi.data(), po.psi.data() + po.psi.size());
        Eigen::MatrixXd t_col(dm.n(), 1);
        t_col.col(0) = dm.t;
        const Eigen::Index rank = leverage_basis(dm, t_col).colPivHouseholderQr().rank();
        const double dof_scale = static_cast<double>(dm.n()) /
                                 std::max(1.0, static_cast<double>(dm.n() - rank));
        floor_var = dof_scale * dof_scale * sample_variance(psi) / static_cast<double>(dm.n());
    }
    finish_forest_inference(est, forest.infer(dm.x), cfg.alpha, cfg.forest, floor_var);
    add_propensity_diagnostics(est, po.propensity_raw);
    est.diagnostics["clipped_fraction"] = po.clipped_fraction;
    return est;
}

using CanonicalEstimator = EffectEstimate (*)(const events::DesignMatrix&, const EstimatorConfig&);

EffectEstimate run_estimator(const events::DesignMatrix& dm, const EstimatorConfig& cfg,
                             CanonicalEstimator body) {
    validate_dm(dm);
    const std::vector<Eigen::Index> order = canonical_order(dm);
    const events::DesignMatrix canonical = reorder(dm, order);
    EffectEstimate est = body(canonical, cfg);
    est.cate = unpermute(est.cate, order);
    for (const std::string& w : dm.warnings) est.warnings.push_back(w);
    return est;
}

}  // namespace

const char* to_string(EstimatorId id) {
    switch (id) {
        case EstimatorId::LDML: return "LDML";
        case EstimatorId::LDRL: return "LDRL";
        case EstimatorId::FDML: return "FDML";
        case EstimatorId::FDRL: return "FDRL";
    }
    return "?";
}

EstimatorId estimator_from_string(const std::string& name) {
    if (name == "LDML") return EstimatorId::LDML;
    if (name == "LDRL") return EstimatorId::LDRL;
    if (name == "FDML") return EstimatorId::FDML;
    if (name == "FDRL") return EstimatorId::FDRL;
    throw std::invalid_argument("unknown estimator '" + name + "'");
}

EstimatorConfig default_config(std::uint64_t seed) {
    EstimatorConfig cfg;
    cfg.seed = seed;
    cfg.outcome_models = {learners::default_spec(learners::Family::RandomForestRegressor),
                          learners::default_spec(learners::Family::GradientBoostingRegressor)};
    cfg.propensity_models = {learners::default_spec(learners::Family::RandomForestClassifier),
                             learners::default_spec(learners::Family::GradientBoostingClassifier)};
    return cfg;
}

EffectEstimate estimate_ldml(const events::DesignMatrix& dm, const EstimatorConfig& cfg) {
    return run_estimator(dm, cfg, &ldml_canonical);
}

EffectEstimate estimate_ldrl(const events::DesignMatrix& dm, const EstimatorConfig& cfg) {
    return run_estimator(dm, cfg, &ldrl_canonical);
}

EffectEstimate estimate_fdml(const events::DesignMatrix& dm, const EstimatorConfig& cfg) {
    return run_estimator(dm, cfg, &fdml_canonical);
}

EffectEstimate estimate_fdrl(const events::DesignMatrix& dm, const EstimatorConfig& cfg) {
    return run_estimator(dm, cfg, &fdrl_canonical);
}

EffectEstimate estimate(const events::DesignMatrix& dm, EstimatorId id,
                        const EstimatorConfig& cfg) {
    switch (id) {
        case EstimatorId::LDML: return estimate_ldml(dm, cfg);
        case EstimatorId::LDRL: return estimate_ldrl(dm, cfg);
        case EstimatorId::FDML: return estimate_fdml(dm, cfg);
        case EstimatorId::FDRL: return estimate_fdrl(dm, cfg);
    }
    throw std::invalid_argument("unknown estimator id");
}

double cate_mean(const EffectEstimate& estimate) {
    if (estimate.cate.empty()) throw std::invalid_argument("cate_mean: empty CATE vector");
    return stable_mean(estimate.cate);
}

std::vector<double> drl_pseudo_outcomes(const Eigen::VectorXd& y, const Eigen::VectorXd& t,
                                        const Eigen::VectorXd& mu0, const Eigen::VectorXd& mu1,
                                        const Eigen::VectorXd& propensity, double clip_lo,
                                        double clip_hi) {
    const Eigen::Index n = y.size();
    if (t.size() != n || mu0.size() != n || mu1.size() != n || propensity.size() != n) {
        throw std::invalid_argument("drl_pseudo_outcomes: size mismatch");
    }
    if (!(clip_lo > 0.0 && clip_hi < 1.0 && clip_lo < clip_hi)) {
        throw std::invalid_argument("drl_pseudo_outcomes: need 0 < clip_lo < clip_hi < 1");
    }
    std::vector<double> psi(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double p = std::clamp(propensity[i], clip_lo, clip_hi);
        psi[static_cast<std::size_t>(i)] = mu1[i] - mu0[i] + t[i] * (y[i] - mu1[i]) / p -
                                           (1.0 - t[i]) * (y[i] - mu0[i]) / (1.0 - p);
    }
    return psi;
}

}  // namespace graspcause::effects
