#pragma once

#include <Eigen/Dense>

namespace graspcause {

struct OlsFit {
    Eigen::VectorXd coef;
    Eigen::MatrixXd cov_hc1;  // heteroskedasticity-robust (HC1) coefficient covariance
    Eigen::VectorXd fitted;
    Eigen::VectorXd residuals;
};

/// Plain least squares; no implicit intercept, append a constant column if
/// one is wanted. Throws std::runtime_error when the design is rank deficient.
OlsFit ols_hc1(const Eigen::MatrixXd& design, const Eigen::VectorXd& response);

/// Sandwich covariance for the two-stage estimators: HC1 meat on the final
/// stage, with the degrees-of-freedom correction n/(n - rank) taken from the
/// enclosing design the response was orthogonalized against (final-stage
/// regressors plus the nuisance basis). The plain n/(n - p) correction with
/// p = 2 ignores the dimensions the cross-fit first stage consumed and
/// measurably undercovers at n in the hundreds. Returns the enclosing rank
/// so callers can use a t quantile with n - rank degrees of freedom.
struct RobustOlsFit {
    Eigen::VectorXd coef;
    Eigen::MatrixXd cov;
    Eigen::VectorXd fitted;
    Eigen::Index basis_rank = 0;
};
RobustOlsFit ols_sandwich_df(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                             const Eigen::MatrixXd& enclosing_design);

}  // namespace graspcause
