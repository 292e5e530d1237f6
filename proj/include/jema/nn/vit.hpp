#pragma once

#include <vector>

#include "jema/io/image.hpp"
#include "jema/nn/layers.hpp"

namespace jema::nn {

struct EncoderConfig {
    int image_size = 32;
    int patch_size = 8;
    int depth = 2;
    int width = 64;
    int heads = 4;
    int embed_head_width = 128;  // neurons per embedding-head layer
    bool causal_mask = false;    // masked self-attention variant; off for images

    int patches_per_side() const { return image_size / patch_size; }
    int patch_count() const { return patches_per_side() * patches_per_side(); }
    int tokens() const { return patch_count() + 1; }  // + CLS
    int mlp_hidden() const { return 4 * width; }

    void validate() const;

    // Runs on a laptop CPU in minutes; used by all tests.
    static EncoderConfig desk() { return EncoderConfig{}; }
    // ViT-Base geometry with 16x16 patches on 224x224 inputs.
    static EncoderConfig paper() { return EncoderConfig{224, 16, 12, 768, 12, 128, false}; }
};

struct VitCache {
    LinearCache patch_proj;
    std::vector<BlockCache> blocks;
    LayerNormCache final_ln;
    int batch = 0;
    int tokens = 0;
};

// Patch-embedding vision transformer returning the CLS-token representation.
class VitEncoder {
public:
    VitEncoder() = default;
    VitEncoder(const EncoderConfig& cfg, const std::string& name, Rng& rng);

    // images: batch of image_size x image_size grayscale inputs in [0,1].
    // Returns the post-norm CLS representations, batch x width.
    MatrixXd forward(const std::vector<Image>& images, VitCache* cache = nullptr,
                     QkCapture* capture = nullptr) const;

    // d_cls: batch x width. Gradients accumulate into the parameters.
    void backward(const MatrixXd& d_cls, const VitCache& cache);

    void collect(std::vector<Parameter*>& out);
    const EncoderConfig& config() const { return cfg_; }

private:
    MatrixXd patches_of(const std::vector<Image>& images) const;

    EncoderConfig cfg_;
    Linear patch_proj_;
    Parameter cls_;  // 1 x width
    Parameter pos_;  // tokens x width
    std::vector<TransformerBlock> blocks_;
    LayerNorm final_ln_;
};

}  // namespace jema::nn
