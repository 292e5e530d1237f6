#include "jema/losses/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace jema::losses {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

void require_finite(const MatrixXd& m, const char* name) {
    require(m.allFinite(), std::string(name) + " contains non-finite values");
}

}  // namespace

const char* to_string(SimilarityKind kind) {
    switch (kind) {
        case SimilarityKind::cosine: return "cosine";
        case SimilarityKind::l2: return "l2";
        case SimilarityKind::l1: return "l1";
    }
    return "?";
}

std::optional<SimilarityKind> similarity_from_string(const std::string& s) {
    if (s == "cosine") return SimilarityKind::cosine;
    if (s == "l2") return SimilarityKind::l2;
    if (s == "l1") return SimilarityKind::l1;
    return std::nullopt;
}

void LossWeights::validate() const {
    require(alpha >= 0.0 && beta >= 0.0, "loss weights must be nonnegative");
    require(alpha > 0.0 || beta > 0.0, "loss weights must not both be zero");
}

MatrixXd pairwise_similarity(const MatrixXd& X, SimilarityKind kind) {
    require(X.rows() >= 2, "pairwise similarity needs at least 2 embeddings");
    require(X.cols() >= 1, "embeddings must have at least 1 dimension");
    require_finite(X, "embeddings");

    const Eigen::Index n = X.rows();
    MatrixXd sim(n, n);
    switch (kind) {
        case SimilarityKind::cosine:
            // 1 - x_i.x_j with the raw dot product; embeddings stay un-normalized.
            sim = MatrixXd::Ones(n, n) - X * X.transpose();
            break;
        case SimilarityKind::l2: {
            const VectorXd sq = X.rowwise().squaredNorm();
            sim = sq.replicate(1, n) + sq.transpose().replicate(n, 1) - 2.0 * X * X.transpose();
            sim = sim.cwiseMax(0.0);  // clamp tiny negative round-off
            break;
        }
        case SimilarityKind::l1:
            for (Eigen::Index i = 0; i < n; ++i) {
                sim(i, i) = 0.0;
                for (Eigen::Index j = i + 1; j < n; ++j) {
                    const double d = (X.row(i) - X.row(j)).cwiseAbs().sum();
                    sim(i, j) = d;
                    sim(j, i) = d;
                }
            }
            break;
    }
    return sim;
}

MatrixXd label_sqdiff_matrix(const VectorXd& u) {
    require(u.size() >= 2, "label matrix needs at least 2 entries");
    require(u.allFinite(), "labels contain non-finite values");
    const Eigen::Index n = u.size();
    MatrixXd d(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double diff = u(i) - u(j);
            d(i, j) = diff * diff;
            d(j, i) = d(i, j);
        }
    }
    return d;
}

double contrastive_regression_loss(const MatrixXd& X, const VectorXd& u, SimilarityKind kind,
                                   MatrixXd* grad) {
    require(X.rows() == u.size(), "embedding count and label count differ");
    const Eigen::Index n = X.rows();

    const MatrixXd sim = pairwise_similarity(X, kind);
    const MatrixXd dmat = label_sqdiff_matrix(u);

    // Residual with both diagonals excluded.
    MatrixXd resid = sim - dmat;
    resid.diagonal().setZero();

    const double loss = resid.squaredNorm() / static_cast<double>(n);

    if (grad) {
        // c_ij = dL/dsim(i,j); fold symmetric contributions into w = c + c^T.
        const MatrixXd c = (2.0 / static_cast<double>(n)) * resid;
        const MatrixXd w = c + c.transpose();
        switch (kind) {
            case SimilarityKind::cosine:
                *grad = -(w * X);
                break;
            case SimilarityKind::l2: {
                const VectorXd row_sum = w.rowwise().sum();
                *grad = 2.0 * (row_sum.asDiagonal() * X - w * X);
                break;
            }
            case SimilarityKind::l1: {
                grad->setZero(n, X.cols());
                for (Eigen::Index i = 0; i < n; ++i) {
                    for (Eigen::Index j = 0; j < n; ++j) {
                        if (i == j || w(i, j) == 0.0) continue;
                        for (Eigen::Index k = 0; k < X.cols(); ++k) {
                            const double diff = X(i, k) - X(j, k);
                            const double sgn = (diff > 0.0) - (diff < 0.0);
                            (*grad)(i, k) += w(i, j) * sgn;
                        }
                    }
                }
                break;
            }
        }
    }
    return loss;
}

double regression_mse(const VectorXd& y, const VectorXd& yhat, VectorXd* grad) {
    require(y.size() == yhat.size(), "regression target and prediction lengths differ");
    require(y.size() > 0, "regression loss on empty vectors");
    const double n = static_cast<double>(y.size());
    const VectorXd resid = yhat - y;
    if (grad) *grad = (2.0 / n) * resid;
    return resid.squaredNorm() / n;
}

double combined_loss(double lcr_p, double lcr_v, double lreg_l, double lreg_h,
                     const LossWeights& w) {
    w.validate();
    for (double term : {lcr_p, lcr_v, lreg_l, lreg_h}) {
        require(std::isfinite(term), "loss term is not finite");
        require(term >= 0.0, "loss terms are sums of squares and cannot be negative");
    }
    return w.alpha * (lcr_p + lcr_v) + w.beta * (lreg_l + lreg_h);
}

double supcon_loss(const MatrixXd& Z, const std::vector<int>& labels, double tau,
                   MatrixXd* grad) {
    const Eigen::Index n = Z.rows();
    require(n >= 2, "supcon needs at least 2 samples");
    require(static_cast<Eigen::Index>(labels.size()) == n, "label count mismatch");
    require(tau > 0.0, "temperature must be positive");
    require_finite(Z, "embeddings");

    const MatrixXd logits = (Z * Z.transpose()) / tau;

    // coef(i,k) = dL/dlogits(i,k); filled anchor by anchor.
    MatrixXd coef = MatrixXd::Zero(n, n);
    double loss = 0.0;

    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<Eigen::Index> positives;
        double max_logit = -std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k == i) continue;
            max_logit = std::max(max_logit, logits(i, k));
            if (labels[k] == labels[i]) positives.push_back(k);
        }
        if (positives.empty()) {
            throw std::invalid_argument("supcon: anchor " + std::to_string(i) +
                                        " has no positive pair in the batch");
        }

        double denom = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k != i) denom += std::exp(logits(i, k) - max_logit);
        }
        const double lse = max_logit + std::log(denom);

        const double inv_p = 1.0 / static_cast<double>(positives.size());
        double pos_mean = 0.0;
        for (Eigen::Index j : positives) pos_mean += logits(i, j);
        pos_mean *= inv_p;
        loss += lse - pos_mean;

        if (grad) {
            for (Eigen::Index k = 0; k < n; ++k) {
                if (k == i) continue;
                coef(i, k) = std::exp(logits(i, k) - max_logit) / denom;
            }
            for (Eigen::Index j : positives) coef(i, j) -= inv_p;
        }
    }

    if (grad) {
        // logits(i,k) = z_i.z_k / tau
        *grad = (coef * Z + coef.transpose() * Z) / tau;
    }
    return loss;
}

double rnc_loss(const MatrixXd& V, const VectorXd& y, double tau, MatrixXd* grad) {
    const Eigen::Index n = V.rows();
    require(n >= 2, "rank contrast needs at least 2 samples");
    require(y.size() == n, "label count mismatch");
    require(tau > 0.0, "temperature must be positive");
    require_finite(V, "embeddings");
    require(y.allFinite(), "labels contain non-finite values");

    const double pair_count = static_cast<double>(n) * static_cast<double>(n - 1);

    // sim(i,k) = -||v_i - v_k||^2
    const VectorXd sq = V.rowwise().squaredNorm();
    const MatrixXd sim =
        -(sq.replicate(1, n) + sq.transpose().replicate(n, 1) - 2.0 * V * V.transpose());

    MatrixXd coef;  // dL/dsim(i,k)
    if (grad) coef = MatrixXd::Zero(n, n);

    double loss = 0.0;
    std::vector<Eigen::Index> order(n - 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        // Candidates sorted by label distance, farthest first; the candidate
        // set for pair (i,j) is the prefix through j's tie group.
        Eigen::Index m = 0;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k != i) order[m++] = k;
        }
        std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
            return std::abs(y(i) - y(a)) > std::abs(y(i) - y(b));
        });

        double max_sim = -std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k != i) max_sim = std::max(max_sim, sim(i, k));
        }
        double cum = 0.0;
        std::size_t pos = 0;
        while (pos < order.size()) {
            // Extend the prefix by one tie group.
            std::size_t group_end = pos;
            const double dist = std::abs(y(i) - y(order[pos]));
            while (group_end < order.size() && std::abs(y(i) - y(order[group_end])) == dist) {
                cum += std::exp((sim(i, order[group_end]) - max_sim) / tau);
                ++group_end;
            }
            const double log_denom = std::log(cum) + max_sim / tau;
            const double group_size = static_cast<double>(group_end - pos);
            for (std::size_t idx = pos; idx < group_end; ++idx) {
                loss += (log_denom - sim(i, order[idx]) / tau) / pair_count;
            }
            if (grad) {
                for (std::size_t idx = pos; idx < group_end; ++idx) {
                    coef(i, order[idx]) -= 1.0 / (tau * pair_count);
                }
                // Each of the group's pairs shares this prefix as its candidate set.
                for (std::size_t idx = 0; idx < group_end; ++idx) {
                    const double wgt = std::exp((sim(i, order[idx]) - max_sim) / tau) / cum;
                    coef(i, order[idx]) += group_size * wgt / (tau * pair_count);
                }
            }
            pos = group_end;
        }
    }

    if (grad) {
        // sim(i,k) = -||v_i - v_k||^2: dsim/dv_i = -2(v_i - v_k), dsim/dv_k = 2(v_i - v_k)
        const MatrixXd w = coef + coef.transpose();
        const VectorXd row_sum = w.rowwise().sum();
        *grad = -2.0 * (row_sum.asDiagonal() * V - w * V);
    }
    return loss;
}

double pairwise_hinge_loss(double f_pos, double f_neg, double margin) {
    require(margin >= 0.0, "margin must be nonnegative");
    return std::max(0.0, f_pos - f_neg + margin);
}

double classic_contrastive_loss(double d, bool same_class, double margin) {
    require(d >= 0.0, "embedding distance must be nonnegative");
    require(margin > 0.0, "margin must be positive");
    if (same_class) return 0.5 * d * d;
    return 0.5 * std::max(0.0, margin - d * d);
}

}  // namespace jema::losses
