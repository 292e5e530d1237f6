#include <Eigen/Eigenvalues>
#include <stdexcept>

#include "jema/analysis/analysis.hpp"

namespace jema::analysis {

MatrixXd PcaResult::project(const MatrixXd& x) const {
    return (x.rowwise() - mean.transpose()) * basis;
}

MatrixXd PcaResult::reconstruct(const MatrixXd& scores) const {
    return (scores * basis.transpose()).rowwise() + mean.transpose();
}

PcaResult pca_fit(const MatrixXd& embeddings, double variance_threshold) {
    const Eigen::Index n = embeddings.rows();
    const Eigen::Index d = embeddings.cols();
    if (n <= 1) throw std::invalid_argument("pca needs more than one sample");
    if (variance_threshold <= 0.0 || variance_threshold > 1.0) {
        throw std::invalid_argument("variance threshold must lie in (0, 1]");
    }

    PcaResult res;
    res.mean = embeddings.colwise().mean();
    const MatrixXd centered = embeddings.rowwise() - res.mean.transpose();
    const MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw std::runtime_error("pca eigensolver failed");

    // Eigen returns ascending eigenvalues; flip to variance-descending order.
    const VectorXd evals = solver.eigenvalues().reverse();
    const MatrixXd evecs = solver.eigenvectors().rowwise().reverse();

    const double total = std::max(evals.sum(), 1e-300);
    int k = 0;
    double cum = 0.0;
    while (k < d && cum / total < variance_threshold - 1e-12) {
        cum += std::max(0.0, evals(k));
        ++k;
    }
    k = std::max(k, 1);

    res.retained = k;
    res.basis = evecs.leftCols(k);
    res.explained_ratio = (evals.head(k) / total).cwiseMax(0.0);
    return res;
}

PcaResult pca_fit(const MatrixXd& embeddings, PcaMode mode) {
    if (mode == PcaMode::variance_95) {
        PcaResult res = pca_fit(embeddings, 0.95);
        if (embeddings.rows() <= res.retained) {
            throw std::invalid_argument("pca needs more samples than retained components");
        }
        return res;
    }
    // two_components: fit everything, keep the top two.
    PcaResult res = pca_fit(embeddings, 1.0);
    const int k = std::min<int>(2, static_cast<int>(res.basis.cols()));
    if (embeddings.rows() <= k) {
        throw std::invalid_argument("pca needs more samples than retained components");
    }
    res.basis = res.basis.leftCols(k).eval();
    res.explained_ratio = res.explained_ratio.head(k).eval();
    res.retained = k;
    return res;
}

}  // namespace jema::analysis
