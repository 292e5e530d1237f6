#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "jema/io/image.hpp"
#include "jema/model/jema_model.hpp"

namespace jema::analysis {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------- PCA ----------------

enum class PcaMode { two_components, variance_95 };

struct PcaResult {
    MatrixXd basis;            // d x k, orthonormal columns ordered by variance
    VectorXd explained_ratio;  // k entries
    VectorXd mean;             // feature mean removed before projection
    int retained = 0;

    MatrixXd project(const MatrixXd& x) const;       // n x k scores
    MatrixXd reconstruct(const MatrixXd& scores) const;
};

PcaResult pca_fit(const MatrixXd& embeddings, PcaMode mode);
// Minimal component count whose cumulative explained variance reaches the
// threshold (variance_95 uses 0.95).
PcaResult pca_fit(const MatrixXd& embeddings, double variance_threshold);

// ---------------- t-SNE ----------------

struct TsneOptions {
    double perplexity = 30.0;
    int iterations = 400;
    double learning_rate = 200.0;
    std::uint64_t seed = 0;
};

// Exact (quadratic) 2-D stochastic neighbor embedding; visualization only.
MatrixXd tsne_embed(const MatrixXd& embeddings, std::uint64_t seed);
MatrixXd tsne_embed(const MatrixXd& embeddings, const TsneOptions& opts);

// ---------------- linear probes ----------------

struct ProbeResult {
    VectorXd coefficients;
    double intercept = 0.0;
    double r2 = 0.0;
    bool used_pseudoinverse = false;  // normal equations were singular
};

// Ordinary least squares with intercept; r2 on the fitting data (diagnostic
// probe, not a predictive claim).
ProbeResult linear_probe(const MatrixXd& features, const VectorXd& target);

struct ComponentImportance {
    std::string target;
    VectorXd weight;  // |standardized OLS coefficient| per component
};

ComponentImportance component_importance(const MatrixXd& pca_features, const VectorXd& target,
                                         const std::string& target_name);

// ---------------- attention overlays ----------------

enum class HeadReduce { mean, max };

struct AttentionOverlay {
    Image heatmap;     // same size as the input, min-max normalized to [0,1]
    ImageRgb blended;  // heatmap colormapped and alpha-blended onto the input
};

// CLS-row attention over patch tokens, head-reduced, upsampled to the image
// grid. An all-equal map normalizes to a flat 0.5.
AttentionOverlay attention_overlay(const Image& image, const model::AttentionTensor& attn,
                                   HeadReduce reduce);

}  // namespace jema::analysis
