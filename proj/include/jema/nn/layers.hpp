#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "jema/util/rng.hpp"

namespace jema::nn {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

// A weight tensor plus its gradient accumulator. Training code accumulates
// into grad during backward passes and the optimizer consumes it.
struct Parameter {
    std::string name;
    MatrixXd value;
    MatrixXd grad;

    Parameter() = default;
    Parameter(std::string n, Eigen::Index rows, Eigen::Index cols)
        : name(std::move(n)), value(MatrixXd::Zero(rows, cols)), grad(MatrixXd::Zero(rows, cols)) {}

    void init_normal(Rng& rng, double stddev) {
        for (Eigen::Index i = 0; i < value.rows(); ++i) {
            for (Eigen::Index j = 0; j < value.cols(); ++j) value(i, j) = rng.normal(0.0, stddev);
        }
    }
    void zero_grad() { grad.setZero(); }
};

// Forward passes are const and thread-safe: activations needed by backward
// are written into caller-owned cache structs, so evaluation can share one
// model across threads by simply not passing a cache.

struct LinearCache {
    MatrixXd input;
};

class Linear {
public:
    Linear() = default;
    Linear(int in_dim, int out_dim, const std::string& name, Rng& rng, double init_std = 0.02);

    MatrixXd forward(const MatrixXd& x, LinearCache* cache = nullptr) const;
    MatrixXd backward(const MatrixXd& dout, const LinearCache& cache);

    void collect(std::vector<Parameter*>& out);
    const Parameter& weight() const { return w_; }
    Parameter& weight() { return w_; }
    Parameter& bias() { return b_; }

private:
    Parameter w_;  // in x out
    Parameter b_;  // 1 x out
};

struct LayerNormCache {
    MatrixXd xhat;
    VectorXd inv_std;
};

class LayerNorm {
public:
    LayerNorm() = default;
    LayerNorm(int dim, const std::string& name);

    MatrixXd forward(const MatrixXd& x, LayerNormCache* cache = nullptr) const;
    MatrixXd backward(const MatrixXd& dout, const LayerNormCache& cache);

    void collect(std::vector<Parameter*>& out);

private:
    Parameter gamma_, beta_;
    static constexpr double kEps = 1e-6;
};

struct GeluCache {
    MatrixXd input;
};

// Exact (erf-based) GELU.
MatrixXd gelu_forward(const MatrixXd& x, GeluCache* cache = nullptr);
MatrixXd gelu_backward(const MatrixXd& dout, const GeluCache& cache);

struct AttentionCache {
    MatrixXd input;                // (B*T) x W
    MatrixXd q, k, v;              // (B*T) x W
    std::vector<MatrixXd> probs;   // B*heads softmax matrices, each T x T
    int batch = 0;
    int tokens = 0;
};

// Per-layer Q/K capture for attention-map visualization.
struct QkCapture {
    std::vector<MatrixXd> q;  // one (B*T) x W matrix per layer
    std::vector<MatrixXd> k;
    int batch = 0;
    int tokens = 0;
};

class MultiHeadSelfAttention {
public:
    MultiHeadSelfAttention() = default;
    MultiHeadSelfAttention(int width, int heads, bool causal_mask, const std::string& name,
                           Rng& rng);

    // x is a stack of `batch` sequences of `tokens` rows each.
    MatrixXd forward(const MatrixXd& x, int batch, int tokens, AttentionCache* cache = nullptr,
                     MatrixXd* q_out = nullptr, MatrixXd* k_out = nullptr) const;
    MatrixXd backward(const MatrixXd& dout, const AttentionCache& cache);

    void collect(std::vector<Parameter*>& out);
    int heads() const { return heads_; }
    int head_dim() const { return head_dim_; }

private:
    Parameter wq_, wk_, wv_, wo_;
    Parameter bq_, bk_, bv_, bo_;
    int width_ = 0;
    int heads_ = 0;
    int head_dim_ = 0;
    bool causal_ = false;
};

// Row-wise softmax with max subtraction.
MatrixXd softmax_rows(const MatrixXd& logits);

struct BlockCache {
    LayerNormCache ln1;
    AttentionCache attn;
    LayerNormCache ln2;
    LinearCache fc1;
    GeluCache act;
    LinearCache fc2;
};

// Pre-norm transformer block: x + MHSA(LN(x)), then x + MLP(LN(x)).
class TransformerBlock {
public:
    TransformerBlock() = default;
    TransformerBlock(int width, int heads, int mlp_hidden, bool causal_mask,
                     const std::string& name, Rng& rng);

    MatrixXd forward(const MatrixXd& x, int batch, int tokens, BlockCache* cache = nullptr,
                     MatrixXd* q_out = nullptr, MatrixXd* k_out = nullptr) const;
    MatrixXd backward(const MatrixXd& dout, const BlockCache& cache);

    void collect(std::vector<Parameter*>& out);

private:
    LayerNorm ln1_, ln2_;
    MultiHeadSelfAttention attn_;
    Linear fc1_, fc2_;
};

}  // namespace jema::nn
