#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace jema {

// Grayscale image, row-major logical layout: (row, col) = (y, x).
using Image = Eigen::MatrixXd;

struct ImageRgb {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // 3 bytes per pixel, row-major

    ImageRgb() = default;
    ImageRgb(int w, int h) : width(w), height(h), pixels(3u * w * h, 0) {}

    std::uint8_t* at(int x, int y) { return &pixels[3u * (static_cast<std::size_t>(y) * width + x)]; }
    const std::uint8_t* at(int x, int y) const {
        return &pixels[3u * (static_cast<std::size_t>(y) * width + x)];
    }
    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        if (x < 0 || y < 0 || x >= width || y >= height) return;
        auto* p = at(x, y);
        p[0] = r;
        p[1] = g;
        p[2] = b;
    }
};

namespace io {

// 8-bit grayscale PNG. Values are clamped to [0,1] and quantized on write;
// read returns values in [0,1].
void write_png_gray(const std::string& path, const Image& img);
Image read_png_gray(const std::string& path);

void write_png_rgb(const std::string& path, const ImageRgb& img);

}  // namespace io

// Bilinear sample with zero padding outside the image.
double bilinear_sample(const Image& img, double x, double y);
// Bilinear sample with edge replication.
double bilinear_sample_clamped(const Image& img, double x, double y);

// Resize to (out_h, out_w) with center-aligned bilinear sampling and
// edge-replicated borders (a constant image stays constant).
Image resize_bilinear(const Image& img, int out_h, int out_w);

// Inverse-map affine warp: for each output pixel (x, y), samples the input at
// A * (x - cx, y - cy) + (cx + tx, cy + ty) where A encodes rotation/flips and
// (cx, cy) is the output center. Used by the augmentation pipeline.
struct AffineMap {
    double m00 = 1.0, m01 = 0.0, m10 = 0.0, m11 = 1.0;  // output->input linear part
    double tx = 0.0, ty = 0.0;                          // input-space translation
};
Image warp_affine(const Image& img, const AffineMap& map, int out_h, int out_w);

}  // namespace jema
