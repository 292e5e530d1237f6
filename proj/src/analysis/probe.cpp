#include <Eigen/Dense>
#include <stdexcept>

#include "jema/analysis/analysis.hpp"

namespace jema::analysis {

ProbeResult linear_probe(const MatrixXd& features, const VectorXd& target) {
    const Eigen::Index n = features.rows();
    const Eigen::Index k = features.cols();
    if (target.size() != n) throw std::invalid_argument("probe target length mismatch");
    if (n <= k) throw std::invalid_argument("probe needs more samples than features");

    MatrixXd design(n, k + 1);
    design.col(0).setOnes();
    design.rightCols(k) = features;

    ProbeResult res;
    Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
    VectorXd beta;
    if (qr.rank() < design.cols()) {
        // Singular normal equations: fall back to the minimum-norm solution.
        res.used_pseudoinverse = true;
        Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(design);
        beta = cod.solve(target);
    } else {
        beta = qr.solve(target);
    }
    res.intercept = beta(0);
    res.coefficients = beta.tail(k);

    const VectorXd fitted = design * beta;
    const double ss_res = (target - fitted).squaredNorm();
    const double mean = target.mean();
    const double ss_tot = (target.array() - mean).square().sum();
    res.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
    return res;
}

ComponentImportance component_importance(const MatrixXd& pca_features, const VectorXd& target,
                                         const std::string& target_name) {
    const Eigen::Index n = pca_features.rows();
    const Eigen::Index k = pca_features.cols();
    if (n <= 1) throw std::invalid_argument("importance needs more than one sample");

    // Standardize both sides so coefficients are comparable across components.
    MatrixXd z(n, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const double mean = pca_features.col(j).mean();
        const double sd =
            std::sqrt((pca_features.col(j).array() - mean).square().sum() / static_cast<double>(n));
        if (sd > 0.0) {
            z.col(j) = ((pca_features.col(j).array() - mean) / sd).matrix();
        } else {
            z.col(j).setZero();
        }
    }
    const double t_mean = target.mean();
    const double t_sd =
        std::sqrt((target.array() - t_mean).square().sum() / static_cast<double>(n));
    VectorXd zt = VectorXd::Zero(n);
    if (t_sd > 0.0) zt = ((target.array() - t_mean) / t_sd).matrix();

    const ProbeResult probe = linear_probe(z, zt);
    ComponentImportance imp;
    imp.target = target_name;
    imp.weight = probe.coefficients.cwiseAbs();
    return imp;
}

}  // namespace jema::analysis
