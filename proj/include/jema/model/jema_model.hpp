#pragma once

#include <cstdint>
#include <vector>

#include "jema/core/types.hpp"
#include "jema/nn/vit.hpp"

namespace jema::model {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nn::EncoderConfig;

// Metadata-aligned embeddings for one sample: s_p tracks laser power, s_v
// tracks velocity, fused is their concatenation.
struct EmbeddingPair {
    VectorXd s_p;
    VectorXd s_v;
    VectorXd fused;
};

struct Predictions {
    double length = 0.0;  // normalized
    double height = 0.0;
};

struct HeadCache {
    nn::LinearCache fc1;
    nn::GeluCache act;
    nn::LinearCache fc2;
};

// Two-layer nonlinear embedding head (width -> e -> e with GELU between).
class EmbedHead {
public:
    EmbedHead() = default;
    EmbedHead(int in_dim, int out_dim, const std::string& name, Rng& rng);

    MatrixXd forward(const MatrixXd& x, HeadCache* cache = nullptr) const;
    MatrixXd backward(const MatrixXd& dout, const HeadCache& cache);
    void collect(std::vector<nn::Parameter*>& out);

private:
    nn::Linear fc1_, fc2_;
};

// Activations of one modality's encoder + heads over a batch. Holding the
// caches here keeps evaluation thread-safe (each caller owns its own).
struct ModalityActivations {
    nn::VitCache vit;
    HeadCache head_p, head_v;
    MatrixXd cls;    // batch x width
    MatrixXd s_p;    // batch x embed
    MatrixXd s_v;    // batch x embed
    MatrixXd fused;  // batch x 2*embed
};

struct MultimodalResult {
    EmbeddingPair on_axis;
    EmbeddingPair off_axis;
    VectorXd fused_joint;  // element-wise mean of the two fused vectors
    Predictions pred;
};

struct UnimodalResult {
    EmbeddingPair embedding;
    Predictions pred;
};

// One T x T attention matrix per head.
using AttentionTensor = std::vector<MatrixXd>;

// Dual vision-transformer model: one encoder plus embedding-head pair per
// modality and a single shared linear prediction head consumed by both the
// multimodal and unimodal paths.
class JemaModel {
public:
    JemaModel(const EncoderConfig& cfg, std::uint64_t seed);

    const EncoderConfig& config() const { return cfg_; }
    int embed_dim() const { return cfg_.embed_head_width; }
    int fused_dim() const { return 2 * cfg_.embed_head_width; }

    // --- batch paths (training and evaluation) ---
    ModalityActivations forward_modality(const std::vector<Image>& images, Modality m,
                                         bool with_cache) const;
    // d_s_p / d_s_v are gradients on the embedding heads' outputs, d_fused on
    // the concatenated vector (pass empty matrices for unused slots).
    void backward_modality(const ModalityActivations& acts, Modality m, const MatrixXd& d_s_p,
                           const MatrixXd& d_s_v, const MatrixXd& d_fused);
    MatrixXd predict(const MatrixXd& fused, nn::LinearCache* cache = nullptr) const;  // batch x 2
    MatrixXd predict_backward(const MatrixXd& d_pred, const nn::LinearCache& cache);

    // --- single-sample paths ---
    VectorXd encode(const Image& image, Modality m) const;
    EmbeddingPair embed_heads(const VectorXd& cls, Modality m) const;
    MultimodalResult forward_multimodal(const Image& on_axis, const Image& off_axis) const;
    UnimodalResult forward_unimodal(const Image& image, Modality m) const;

    // Visualization-only attention weights softmax(Q K^T) * scale_s for the
    // given layer; rows of the softmax sum to 1, so each returned row sums to
    // scale_s. The model's own attention path keeps the usual 1/sqrt(d)
    // scaling. layer -1 selects the last layer.
    AttentionTensor extract_attention(int layer, const Image& image, Modality m,
                                      double scale_s = 1.0) const;

    // Raw per-layer Q/K tensors for one image, for independent recomputation
    // of the attention weights.
    nn::QkCapture capture_qk(const Image& image, Modality m) const;

    std::vector<nn::Parameter*> parameters();
    std::vector<nn::Parameter*> embed_head_parameters(Modality m, bool power_head);
    std::vector<nn::Parameter*> prediction_head_parameters();
    void zero_grad();

private:
    const nn::VitEncoder& encoder(Modality m) const {
        return m == Modality::on_axis ? enc_on_ : enc_off_;
    }
    nn::VitEncoder& encoder(Modality m) { return m == Modality::on_axis ? enc_on_ : enc_off_; }
    const EmbedHead& head(Modality m, bool power) const;
    EmbedHead& head(Modality m, bool power);

    EncoderConfig cfg_;
    nn::VitEncoder enc_on_, enc_off_;
    EmbedHead head_p_on_, head_v_on_, head_p_off_, head_v_off_;
    nn::Linear predict_head_;
};

}  // namespace jema::model
