#include <cmath>
#include <stdexcept>

#include "jema/analysis/analysis.hpp"
#include "jema/util/rng.hpp"

namespace jema::analysis {

namespace {

// Conditional distribution row with the precision tuned so the entropy hits
// log(perplexity).
void tune_row(const VectorXd& sqdist, Eigen::Index i, double target_entropy, VectorXd& out) {
    double beta = 1.0, beta_min = 0.0, beta_max = std::numeric_limits<double>::infinity();
    const Eigen::Index n = sqdist.size();
    for (int iter = 0; iter < 64; ++iter) {
        double sum = 0.0, weighted = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) {
                out(j) = 0.0;
                continue;
            }
            out(j) = std::exp(-beta * sqdist(j));
            sum += out(j);
            weighted += out(j) * sqdist(j);
        }
        if (sum <= 0.0) sum = 1e-300;
        const double entropy = std::log(sum) + beta * weighted / sum;
        out /= sum;
        const double diff = entropy - target_entropy;
        if (std::abs(diff) < 1e-7) break;
        if (diff > 0) {
            beta_min = beta;
            beta = std::isinf(beta_max) ? beta * 2.0 : 0.5 * (beta + beta_max);
        } else {
            beta_max = beta;
            beta = 0.5 * (beta + beta_min);
        }
    }
}

}  // namespace

MatrixXd tsne_embed(const MatrixXd& embeddings, std::uint64_t seed) {
    TsneOptions opts;
    opts.seed = seed;
    return tsne_embed(embeddings, opts);
}

MatrixXd tsne_embed(const MatrixXd& embeddings, const TsneOptions& opts) {
    const Eigen::Index n = embeddings.rows();
    if (n < 10) throw std::invalid_argument("stochastic neighbor embedding needs at least 10 samples");

    const double perplexity = std::min(opts.perplexity, static_cast<double>(n - 1) / 3.0);
    const double target_entropy = std::log(perplexity);

    // Pairwise squared distances in the input space.
    const VectorXd sq = embeddings.rowwise().squaredNorm();
    MatrixXd dist = sq.replicate(1, n) + sq.transpose().replicate(n, 1) -
                    2.0 * embeddings * embeddings.transpose();
    dist = dist.cwiseMax(0.0);

    MatrixXd p(n, n);
    VectorXd row(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        tune_row(dist.row(i), i, target_entropy, row);
        p.row(i) = row;
    }
    const MatrixXd p_conditional = p;
    p = (p_conditional + p_conditional.transpose()) / (2.0 * n);
    p = p.cwiseMax(1e-12);
    p.diagonal().setZero();

    Rng rng(Rng::derive_seed(opts.seed, "tsne"));
    MatrixXd y(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        y(i, 0) = rng.normal(0.0, 1e-4);
        y(i, 1) = rng.normal(0.0, 1e-4);
    }

    MatrixXd velocity = MatrixXd::Zero(n, 2);
    MatrixXd gains = MatrixXd::Ones(n, 2);
    const int exaggeration_iters = std::min(100, opts.iterations / 4);
    MatrixXd grad(n, 2);
    for (int iter = 0; iter < opts.iterations; ++iter) {
        const double exaggeration = iter < exaggeration_iters ? 12.0 : 1.0;
        const double momentum = iter < opts.iterations / 2 ? 0.5 : 0.8;

        // Student-t affinities in the output space.
        MatrixXd w(n, n);
        double wsum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            w(i, i) = 0.0;
            for (Eigen::Index j = i + 1; j < n; ++j) {
                const double d2 = (y.row(i) - y.row(j)).squaredNorm();
                const double v = 1.0 / (1.0 + d2);
                w(i, j) = v;
                w(j, i) = v;
                wsum += 2.0 * v;
            }
        }
        wsum = std::max(wsum, 1e-300);

        grad.setZero();
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                if (i == j) continue;
                const double q = std::max(w(i, j) / wsum, 1e-12);
                const double coef = 4.0 * (exaggeration * p(i, j) - q) * w(i, j);
                grad.row(i) += coef * (y.row(i) - y.row(j));
            }
        }
        // Per-coordinate gains: grow when gradient and velocity disagree,
        // shrink when they agree (keeps the step size stable without tuning).
        for (Eigen::Index i = 0; i < n; ++i) {
            for (int d = 0; d < 2; ++d) {
                const bool same_sign = (grad(i, d) > 0.0) == (velocity(i, d) < 0.0);
                gains(i, d) = same_sign ? gains(i, d) + 0.2 : gains(i, d) * 0.8;
                gains(i, d) = std::max(gains(i, d), 0.01);
            }
        }
        velocity = momentum * velocity - opts.learning_rate * gains.cwiseProduct(grad);
        y += velocity;
        y.rowwise() -= y.colwise().mean();
    }
    return y;
}

}  // namespace jema::analysis
