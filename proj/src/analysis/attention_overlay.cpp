#include <cmath>
#include <stdexcept>

#include "jema/analysis/analysis.hpp"
#include "jema/viz/colormap.hpp"

namespace jema::analysis {

AttentionOverlay attention_overlay(const Image& image, const model::AttentionTensor& attn,
                                   HeadReduce reduce) {
    if (attn.empty()) throw std::invalid_argument("attention tensor is empty");
    const Eigen::Index tokens = attn.front().rows();
    const int grid = static_cast<int>(std::lround(std::sqrt(static_cast<double>(tokens - 1))));
    if (static_cast<Eigen::Index>(grid) * grid + 1 != tokens) {
        throw std::invalid_argument("token count does not form a square patch grid");
    }
    if (image.rows() != image.cols() || image.rows() % grid != 0) {
        throw std::invalid_argument("image size does not match the patch grid");
    }

    // CLS-row attention over patch tokens, reduced across heads.
    Image patch_map(grid, grid);
    for (int pr = 0; pr < grid; ++pr) {
        for (int pc = 0; pc < grid; ++pc) {
            const Eigen::Index token = 1 + pr * grid + pc;
            double value = reduce == HeadReduce::max ? -std::numeric_limits<double>::infinity()
                                                     : 0.0;
            for (const auto& head : attn) {
                if (head.rows() != tokens || head.cols() != tokens) {
                    throw std::invalid_argument("ragged attention tensor");
                }
                const double w = head(0, token);
                value = reduce == HeadReduce::max ? std::max(value, w) : value + w;
            }
            if (reduce == HeadReduce::mean) value /= static_cast<double>(attn.size());
            patch_map(pr, pc) = value;
        }
    }

    AttentionOverlay overlay;
    overlay.heatmap = resize_bilinear(patch_map, static_cast<int>(image.rows()),
                                      static_cast<int>(image.cols()));
    const double lo = overlay.heatmap.minCoeff();
    const double hi = overlay.heatmap.maxCoeff();
    if (hi - lo < 1e-12) {
        overlay.heatmap.setConstant(0.5);  // degenerate all-equal map
    } else {
        overlay.heatmap = (overlay.heatmap.array() - lo) / (hi - lo);
    }

    const int h = static_cast<int>(image.rows());
    const int w = static_cast<int>(image.cols());
    overlay.blended = ImageRgb(w, h);
    constexpr double kAlpha = 0.45;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto color = viz::heat_color(overlay.heatmap(y, x));
            const double base = std::clamp(image(y, x), 0.0, 1.0) * 255.0;
            overlay.blended.set(
                x, y, static_cast<std::uint8_t>((1 - kAlpha) * base + kAlpha * color[0]),
                static_cast<std::uint8_t>((1 - kAlpha) * base + kAlpha * color[1]),
                static_cast<std::uint8_t>((1 - kAlpha) * base + kAlpha * color[2]));
        }
    }
    return overlay;
}

}  // namespace jema::analysis
