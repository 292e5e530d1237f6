#include "jema/nn/vit.hpp"

#include <stdexcept>

namespace jema::nn {

void EncoderConfig::validate() const {
    if (image_size < 1 || patch_size < 1 || depth < 1 || width < 1 || heads < 1 ||
        embed_head_width < 1) {
        throw std::invalid_argument("encoder config counts must be >= 1");
    }
    if (image_size % patch_size != 0) {
        throw std::invalid_argument("image_size must be divisible by patch_size");
    }
    if (width % heads != 0) {
        throw std::invalid_argument("width must be divisible by heads");
    }
}

VitEncoder::VitEncoder(const EncoderConfig& cfg, const std::string& name, Rng& rng)
    : cfg_(cfg),
      patch_proj_(cfg.patch_size * cfg.patch_size, cfg.width, name + ".patch_proj", rng),
      cls_(name + ".cls", 1, cfg.width),
      pos_(name + ".pos", cfg.tokens(), cfg.width),
      final_ln_(cfg.width, name + ".final_ln") {
    cfg_.validate();
    cls_.init_normal(rng, 0.02);
    pos_.init_normal(rng, 0.02);
    blocks_.reserve(cfg.depth);
    for (int i = 0; i < cfg.depth; ++i) {
        blocks_.emplace_back(cfg.width, cfg.heads, cfg.mlp_hidden(), cfg.causal_mask,
                             name + ".block" + std::to_string(i), rng);
    }
}

MatrixXd VitEncoder::patches_of(const std::vector<Image>& images) const {
    const int ps = cfg_.patch_size;
    const int side = cfg_.patches_per_side();
    const int np = cfg_.patch_count();
    MatrixXd patches(static_cast<Eigen::Index>(images.size()) * np, ps * ps);
    for (std::size_t b = 0; b < images.size(); ++b) {
        const Image& img = images[b];
        if (img.rows() != cfg_.image_size || img.cols() != cfg_.image_size) {
            throw std::invalid_argument("image dimensions do not match encoder config");
        }
        for (int pr = 0; pr < side; ++pr) {
            for (int pc = 0; pc < side; ++pc) {
                const Eigen::Index row = static_cast<Eigen::Index>(b) * np + pr * side + pc;
                for (int y = 0; y < ps; ++y) {
                    for (int x = 0; x < ps; ++x) {
                        patches(row, y * ps + x) = img(pr * ps + y, pc * ps + x);
                    }
                }
            }
        }
    }
    return patches;
}

MatrixXd VitEncoder::forward(const std::vector<Image>& images, VitCache* cache,
                             QkCapture* capture) const {
    const int batch = static_cast<int>(images.size());
    const int np = cfg_.patch_count();
    const int tokens = cfg_.tokens();

    const MatrixXd patches = patches_of(images);
    const MatrixXd proj = patch_proj_.forward(patches, cache ? &cache->patch_proj : nullptr);

    MatrixXd x(static_cast<Eigen::Index>(batch) * tokens, cfg_.width);
    for (int b = 0; b < batch; ++b) {
        const Eigen::Index row0 = static_cast<Eigen::Index>(b) * tokens;
        x.row(row0) = cls_.value.row(0) + pos_.value.row(0);
        for (int i = 0; i < np; ++i) {
            x.row(row0 + 1 + i) =
                proj.row(static_cast<Eigen::Index>(b) * np + i) + pos_.value.row(1 + i);
        }
    }

    if (cache) {
        cache->blocks.resize(blocks_.size());
        cache->batch = batch;
        cache->tokens = tokens;
    }
    if (capture) {
        capture->q.resize(blocks_.size());
        capture->k.resize(blocks_.size());
        capture->batch = batch;
        capture->tokens = tokens;
    }
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        x = blocks_[i].forward(x, batch, tokens, cache ? &cache->blocks[i] : nullptr,
                               capture ? &capture->q[i] : nullptr,
                               capture ? &capture->k[i] : nullptr);
    }

    MatrixXd cls_rows(batch, cfg_.width);
    for (int b = 0; b < batch; ++b) {
        cls_rows.row(b) = x.row(static_cast<Eigen::Index>(b) * tokens);
    }
    return final_ln_.forward(cls_rows, cache ? &cache->final_ln : nullptr);
}

void VitEncoder::backward(const MatrixXd& d_cls, const VitCache& cache) {
    const int batch = cache.batch;
    const int tokens = cache.tokens;
    const int np = cfg_.patch_count();

    const MatrixXd d_cls_rows = final_ln_.backward(d_cls, cache.final_ln);

    MatrixXd dx = MatrixXd::Zero(static_cast<Eigen::Index>(batch) * tokens, cfg_.width);
    for (int b = 0; b < batch; ++b) {
        dx.row(static_cast<Eigen::Index>(b) * tokens) = d_cls_rows.row(b);
    }
    for (std::size_t i = blocks_.size(); i-- > 0;) {
        dx = blocks_[i].backward(dx, cache.blocks[i]);
    }

    MatrixXd d_proj(static_cast<Eigen::Index>(batch) * np, cfg_.width);
    for (int b = 0; b < batch; ++b) {
        const Eigen::Index row0 = static_cast<Eigen::Index>(b) * tokens;
        cls_.grad.row(0) += dx.row(row0);
        pos_.grad.row(0) += dx.row(row0);
        for (int i = 0; i < np; ++i) {
            pos_.grad.row(1 + i) += dx.row(row0 + 1 + i);
            d_proj.row(static_cast<Eigen::Index>(b) * np + i) = dx.row(row0 + 1 + i);
        }
    }
    patch_proj_.backward(d_proj, cache.patch_proj);  // gradient w.r.t. pixels is discarded
}

void VitEncoder::collect(std::vector<Parameter*>& out) {
    patch_proj_.collect(out);
    out.push_back(&cls_);
    out.push_back(&pos_);
    for (auto& block : blocks_) block.collect(out);
    final_ln_.collect(out);
}

}  // namespace jema::nn
