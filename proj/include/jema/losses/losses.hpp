#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

namespace jema::losses {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Similarity used inside the contrastive-regression loss. "cosine" is the
// un-normalized form 1 - x_i.x_j (the embeddings are deliberately left
// un-normalized, so no division by vector norms takes place).
enum class SimilarityKind { cosine, l2, l1 };

const char* to_string(SimilarityKind kind);
std::optional<SimilarityKind> similarity_from_string(const std::string& s);

struct LossWeights {
    double alpha = 1.0;  // contrastive terms
    double beta = 1.0;   // regression terms

    void validate() const;  // alpha, beta >= 0 and not both zero
};

// Pairwise similarity matrix over embedding rows:
//   cosine: sim(i,j) = 1 - x_i.x_j
//   l2:     sim(i,j) = ||x_i - x_j||^2
//   l1:     sim(i,j) = sum_k |x_ik - x_jk|
// Diagonal entries are computed but callers exclude them.
MatrixXd pairwise_similarity(const MatrixXd& X, SimilarityKind kind);

// D(i,j) = (u_i - u_j)^2 for metadata values u normalized to [0,1].
MatrixXd label_sqdiff_matrix(const VectorXd& u);

// Contrastive-regression loss:
//   L = (1/N) * sum_{i != j} [sim(i,j) - D(i,j)]^2
// Both diagonals are excluded. If grad is non-null it receives dL/dX.
double contrastive_regression_loss(const MatrixXd& X, const VectorXd& u, SimilarityKind kind,
                                   MatrixXd* grad = nullptr);

// Mean squared error (1/N) sum (y_i - yhat_i)^2; grad is w.r.t. yhat.
double regression_mse(const VectorXd& y, const VectorXd& yhat, VectorXd* grad = nullptr);

// Weighted combination alpha*(lcr_p + lcr_v) + beta*(lreg_l + lreg_h).
// All four terms are sums of squares, so negative inputs are rejected.
double combined_loss(double lcr_p, double lcr_v, double lreg_l, double lreg_h,
                     const LossWeights& w);

// Supervised contrastive loss with dot-product logits:
//   L = -sum_i (1/|P(i)|) sum_{j in P(i)} log( exp(z_i.z_j/tau)
//                                             / sum_{k != i} exp(z_i.z_k/tau) )
// where P(i) = { j != i : labels_j == labels_i }. Every anchor must have at
// least one positive; the per-anchor normalizer is its positive count, which
// plays the role the augmented-pair count plays in the two-view formulation.
double supcon_loss(const MatrixXd& Z, const std::vector<int>& labels, double tau,
                   MatrixXd* grad = nullptr);

// Rank-consistent contrastive loss for continuous targets:
//   L = mean_{i, j != i} -log( exp(sim(v_i,v_j)/tau)
//                             / sum_{k in S_ij} exp(sim(v_i,v_k)/tau) )
// with sim(a,b) = -||a - b||^2 and S_ij = { k != i : |y_i-y_k| >= |y_i-y_j| }.
// Ties in label distance keep both candidates in S_ij.
double rnc_loss(const MatrixXd& V, const VectorXd& y, double tau, MatrixXd* grad = nullptr);

// max(0, f_pos - f_neg + margin): pushes the energy of the training sample
// below the contrastive sample by at least the margin.
double pairwise_hinge_loss(double f_pos, double f_neg, double margin);

// Pair loss on an embedding distance d: same-class pairs contribute d^2/2,
// different-class pairs max(0, margin - d^2)/2.
double classic_contrastive_loss(double d, bool same_class, double margin);

}  // namespace jema::losses
