#include "graspcause/ols.hpp"

#include <stdexcept>

namespace graspcause {

OlsFit ols_hc1(const Eigen::MatrixXd& design, const Eigen::VectorXd& response) {
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    if (n != response.size()) throw std::invalid_argument("ols_hc1: row count mismatch");
    if (p == 0) throw std::invalid_argument("ols_hc1: empty design");
    if (n <= p) throw std::runtime_error("ols_hc1: more parameters than observations");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < p) throw std::runtime_error("ols_hc1: singular design matrix");

    OlsFit fit;
    fit.coef = qr.solve(response);
    fit.fitted = design * fit.coef;
    fit.residuals = response - fit.fitted;

    const Eigen::MatrixXd xtx_inv =
        (design.transpose() * design).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::VectorXd e2 = fit.residuals.array().square();
    const Eigen::MatrixXd meat = design.transpose() * e2.asDiagonal() * design;
    const double dof_scale = static_cast<double>(n) / static_cast<double>(n - p);
    fit.cov_hc1 = dof_scale * (xtx_inv * meat * xtx_inv);
    return fit;
}

RobustOlsFit ols_sandwich_df(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                             const Eigen::MatrixXd& enclosing_design) {
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    if (enclosing_design.rows() != n) {
        throw std::invalid_argument("ols_sandwich_df: row count mismatch");
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < p) throw std::runtime_error("ols_sandwich_df: singular design matrix");

    RobustOlsFit fit;
    fit.coef = qr.solve(response);
    fit.fitted = design * fit.coef;
    const Eigen::VectorXd residuals = response - fit.fitted;

    fit.basis_rank = enclosing_design.colPivHouseholderQr().rank();
    const Eigen::Index dof = std::max<Eigen::Index>(1, n - fit.basis_rank);

    const Eigen::MatrixXd xtx_inv =
        (design.transpose() * design).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::VectorXd e2 = residuals.array().square();
    const Eigen::MatrixXd meat = design.transpose() * e2.asDiagonal() * design;
    // HC3-magnitude correction applied in aggregate: mean-leverage h = rank/n
    // gives E[1/(1-h)^2] ~ (n/dof)^2. Per-sample HC3 weights are unusable
    // here because singleton one-hot cells carry leverage exactly 1.
    const double dof_scale = static_cast<double>(n) / static_cast<double>(dof);
    fit.cov = dof_scale * dof_scale * (xtx_inv * meat * xtx_inv);
    return fit;
}

}  // namespace graspcause
