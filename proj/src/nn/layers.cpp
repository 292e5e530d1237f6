#include "jema/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace jema::nn {

Linear::Linear(int in_dim, int out_dim, const std::string& name, Rng& rng, double init_std)
    : w_(name + ".w", in_dim, out_dim), b_(name + ".b", 1, out_dim) {
    w_.init_normal(rng, init_std);
}

MatrixXd Linear::forward(const MatrixXd& x, LinearCache* cache) const {
    if (cache) cache->input = x;
    return (x * w_.value).rowwise() + RowVectorXd(b_.value.row(0));
}

MatrixXd Linear::backward(const MatrixXd& dout, const LinearCache& cache) {
    w_.grad.noalias() += cache.input.transpose() * dout;
    b_.grad.row(0) += dout.colwise().sum();
    return dout * w_.value.transpose();
}

void Linear::collect(std::vector<Parameter*>& out) {
    out.push_back(&w_);
    out.push_back(&b_);
}

LayerNorm::LayerNorm(int dim, const std::string& name)
    : gamma_(name + ".gamma", 1, dim), beta_(name + ".beta", 1, dim) {
    gamma_.value.setOnes();
}

MatrixXd LayerNorm::forward(const MatrixXd& x, LayerNormCache* cache) const {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    MatrixXd xhat(n, d);
    VectorXd inv_std(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mean = x.row(i).mean();
        const double var = (x.row(i).array() - mean).square().mean();
        const double is = 1.0 / std::sqrt(var + kEps);
        xhat.row(i) = (x.row(i).array() - mean) * is;
        inv_std(i) = is;
    }
    MatrixXd out =
        (xhat.array().rowwise() * gamma_.value.row(0).array()).rowwise() + beta_.value.row(0).array();
    if (cache) {
        cache->xhat = std::move(xhat);
        cache->inv_std = std::move(inv_std);
    }
    return out;
}

MatrixXd LayerNorm::backward(const MatrixXd& dout, const LayerNormCache& cache) {
    const Eigen::Index n = dout.rows();
    gamma_.grad.row(0) += (dout.array() * cache.xhat.array()).colwise().sum().matrix();
    beta_.grad.row(0) += dout.colwise().sum();

    MatrixXd dx(n, dout.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto dxhat = (dout.row(i).array() * gamma_.value.row(0).array()).eval();
        const double m1 = dxhat.mean();
        const double m2 = (dxhat * cache.xhat.row(i).array()).mean();
        dx.row(i) = ((dxhat - m1 - cache.xhat.row(i).array() * m2) * cache.inv_std(i)).matrix();
    }
    return dx;
}

void LayerNorm::collect(std::vector<Parameter*>& out) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
}

MatrixXd gelu_forward(const MatrixXd& x, GeluCache* cache) {
    if (cache) cache->input = x;
    return x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2)); });
}

MatrixXd gelu_backward(const MatrixXd& dout, const GeluCache& cache) {
    static const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * M_PI);
    const MatrixXd deriv = cache.input.unaryExpr([](double v) {
        return 0.5 * (1.0 + std::erf(v * M_SQRT1_2)) + v * std::exp(-0.5 * v * v) * kInvSqrt2Pi;
    });
    return dout.cwiseProduct(deriv);
}

MatrixXd softmax_rows(const MatrixXd& logits) {
    MatrixXd out(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double mx = logits.row(i).maxCoeff();
        Eigen::ArrayXd e = (logits.row(i).array() - mx).exp();
        out.row(i) = (e / e.sum()).matrix();
    }
    return out;
}

MultiHeadSelfAttention::MultiHeadSelfAttention(int width, int heads, bool causal_mask,
                                               const std::string& name, Rng& rng)
    : wq_(name + ".wq", width, width),
      wk_(name + ".wk", width, width),
      wv_(name + ".wv", width, width),
      wo_(name + ".wo", width, width),
      bq_(name + ".bq", 1, width),
      bk_(name + ".bk", 1, width),
      bv_(name + ".bv", 1, width),
      bo_(name + ".bo", 1, width),
      width_(width),
      heads_(heads),
      head_dim_(width / heads),
      causal_(causal_mask) {
    if (width % heads != 0) throw std::invalid_argument("width must be divisible by heads");
    wq_.init_normal(rng, 0.02);
    wk_.init_normal(rng, 0.02);
    wv_.init_normal(rng, 0.02);
    wo_.init_normal(rng, 0.02);
}

MatrixXd MultiHeadSelfAttention::forward(const MatrixXd& x, int batch, int tokens,
                                         AttentionCache* cache, MatrixXd* q_out,
                                         MatrixXd* k_out) const {
    if (x.rows() != static_cast<Eigen::Index>(batch) * tokens) {
        throw std::invalid_argument("attention input rows must equal batch*tokens");
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim_));

    MatrixXd q = (x * wq_.value).rowwise() + RowVectorXd(bq_.value.row(0));
    MatrixXd k = (x * wk_.value).rowwise() + RowVectorXd(bk_.value.row(0));
    MatrixXd v = (x * wv_.value).rowwise() + RowVectorXd(bv_.value.row(0));
    if (q_out) *q_out = q;
    if (k_out) *k_out = k;

    MatrixXd concat(x.rows(), width_);
    std::vector<MatrixXd> probs;
    if (cache) probs.reserve(static_cast<std::size_t>(batch) * heads_);

    for (int b = 0; b < batch; ++b) {
        const Eigen::Index row0 = static_cast<Eigen::Index>(b) * tokens;
        for (int h = 0; h < heads_; ++h) {
            const Eigen::Index col0 = static_cast<Eigen::Index>(h) * head_dim_;
            const auto qb = q.block(row0, col0, tokens, head_dim_);
            const auto kb = k.block(row0, col0, tokens, head_dim_);
            const auto vb = v.block(row0, col0, tokens, head_dim_);
            MatrixXd logits = qb * kb.transpose() * scale;
            if (causal_) {
                for (int i = 0; i < tokens; ++i) {
                    for (int j = i + 1; j < tokens; ++j) logits(i, j) = -1e30;
                }
            }
            MatrixXd p = softmax_rows(logits);
            concat.block(row0, col0, tokens, head_dim_) = p * vb;
            if (cache) probs.push_back(std::move(p));
        }
    }

    if (cache) {
        cache->input = x;
        cache->q = std::move(q);
        cache->k = std::move(k);
        cache->v = std::move(v);
        cache->probs = std::move(probs);
        cache->batch = batch;
        cache->tokens = tokens;
    }
    return (concat * wo_.value).rowwise() + RowVectorXd(bo_.value.row(0));
}

MatrixXd MultiHeadSelfAttention::backward(const MatrixXd& dout, const AttentionCache& cache) {
    const int batch = cache.batch;
    const int tokens = cache.tokens;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim_));

    // Rebuild the concatenated head outputs for the output-projection grads.
    MatrixXd concat(dout.rows(), width_);
    for (int b = 0; b < batch; ++b) {
        const Eigen::Index row0 = static_cast<Eigen::Index>(b) * tokens;
        for (int h = 0; h < heads_; ++h) {
            const Eigen::Index col0 = static_cast<Eigen::Index>(h) * head_dim_;
            concat.block(row0, col0, tokens, head_dim_) =
                cache.probs[static_cast<std::size_t>(b) * heads_ + h] *
                cache.v.block(row0, col0, tokens, head_dim_);
        }
    }
    wo_.grad.noalias() += concat.transpose() * dout;
    bo_.grad.row(0) += dout.colwise().sum();
    const MatrixXd dconcat = dout * wo_.value.transpose();

    MatrixXd dq = MatrixXd::Zero(dout.rows(), width_);
    MatrixXd dk = MatrixXd::Zero(dout.rows(), width_);
    MatrixXd dv = MatrixXd::Zero(dout.rows(), width_);

    for (int b = 0; b < batch; ++b) {
        const Eigen::Index row0 = static_cast<Eigen::Index>(b) * tokens;
        for (int h = 0; h < heads_; ++h) {
            const Eigen::Index col0 = static_cast<Eigen::Index>(h) * head_dim_;
            const MatrixXd& p = cache.probs[static_cast<std::size_t>(b) * heads_ + h];
            const auto qb = cache.q.block(row0, col0, tokens, head_dim_);
            const auto kb = cache.k.block(row0, col0, tokens, head_dim_);
            const auto vb = cache.v.block(row0, col0, tokens, head_dim_);
            const auto db = dconcat.block(row0, col0, tokens, head_dim_);

            const MatrixXd dp = db * vb.transpose();
            dv.block(row0, col0, tokens, head_dim_).noalias() = p.transpose() * db;

            // Softmax backward row-wise: ds = p .* (dp - rowsum(dp .* p))
            MatrixXd ds(tokens, tokens);
            for (int i = 0; i < tokens; ++i) {
                const double dot = dp.row(i).dot(p.row(i));
                ds.row(i) = (p.row(i).array() * (dp.row(i).array() - dot)).matrix();
            }
            ds *= scale;
            dq.block(row0, col0, tokens, head_dim_).noalias() = ds * kb;
            dk.block(row0, col0, tokens, head_dim_).noalias() = ds.transpose() * qb;
        }
    }

    wq_.grad.noalias() += cache.input.transpose() * dq;
    wk_.grad.noalias() += cache.input.transpose() * dk;
    wv_.grad.noalias() += cache.input.transpose() * dv;
    bq_.grad.row(0) += dq.colwise().sum();
    bk_.grad.row(0) += dk.colwise().sum();
    bv_.grad.row(0) += dv.colwise().sum();

    return dq * wq_.value.transpose() + dk * wk_.value.transpose() + dv * wv_.value.transpose();
}

void MultiHeadSelfAttention::collect(std::vector<Parameter*>& out) {
    for (Parameter* p : {&wq_, &bq_, &wk_, &bk_, &wv_, &bv_, &wo_, &bo_}) out.push_back(p);
}

TransformerBlock::TransformerBlock(int width, int heads, int mlp_hidden, bool causal_mask,
                                   const std::string& name, Rng& rng)
    : ln1_(width, name + ".ln1"),
      ln2_(width, name + ".ln2"),
      attn_(width, heads, causal_mask, name + ".attn", rng),
      fc1_(width, mlp_hidden, name + ".fc1", rng),
      fc2_(mlp_hidden, width, name + ".fc2", rng) {}

MatrixXd TransformerBlock::forward(const MatrixXd& x, int batch, int tokens, BlockCache* cache,
                                   MatrixXd* q_out, MatrixXd* k_out) const {
    const MatrixXd y = ln1_.forward(x, cache ? &cache->ln1 : nullptr);
    const MatrixXd a = attn_.forward(y, batch, tokens, cache ? &cache->attn : nullptr, q_out, k_out);
    const MatrixXd x1 = x + a;
    const MatrixXd z = ln2_.forward(x1, cache ? &cache->ln2 : nullptr);
    const MatrixXd h1 = fc1_.forward(z, cache ? &cache->fc1 : nullptr);
    const MatrixXd h2 = gelu_forward(h1, cache ? &cache->act : nullptr);
    const MatrixXd h3 = fc2_.forward(h2, cache ? &cache->fc2 : nullptr);
    return x1 + h3;
}

MatrixXd TransformerBlock::backward(const MatrixXd& dout, const BlockCache& cache) {
    const MatrixXd dh2 = fc2_.backward(dout, cache.fc2);
    const MatrixXd dh1 = gelu_backward(dh2, cache.act);
    const MatrixXd dz = fc1_.backward(dh1, cache.fc1);
    const MatrixXd dx1 = dout + ln2_.backward(dz, cache.ln2);
    const MatrixXd dy = attn_.backward(dx1, cache.attn);
    return dx1 + ln1_.backward(dy, cache.ln1);
}

void TransformerBlock::collect(std::vector<Parameter*>& out) {
    ln1_.collect(out);
    attn_.collect(out);
    ln2_.collect(out);
    fc1_.collect(out);
    fc2_.collect(out);
}

}  // namespace jema::nn
