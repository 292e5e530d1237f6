#include "jema/io/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace jema {

namespace io {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::uint8_t quantize01(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

}  // namespace

void write_png_gray(const std::string& path, const Image& img) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("png: cannot open for write: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw std::runtime_error("png: allocation failure");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("png: write error: " + path);
    }

    const int h = static_cast<int>(img.rows());
    const int w = static_cast<int>(img.cols());
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<std::uint8_t> row(w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) row[x] = quantize01(img(y, x));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image read_png_gray(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("png: cannot open for read: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw std::runtime_error("png: allocation failure");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("png: read error: " + path);
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    // Normalize any input to 8-bit grayscale.
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    const int color_type = png_get_color_type(png, info);
    if (color_type & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray(png, 1, -1.0, -1.0);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);

    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));

    Image img(h, w);
    std::vector<std::uint8_t> row(png_get_rowbytes(png, info));
    for (int y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < w; ++x) img(y, x) = row[x] / 255.0;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png_rgb(const std::string& path, const ImageRgb& img) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("png: cannot open for write: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw std::runtime_error("png: allocation failure");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("png: write error: " + path);
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y) {
        png_write_row(png, const_cast<png_bytep>(img.at(0, y)));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace io

double bilinear_sample(const Image& img, double x, double y) {
    const int h = static_cast<int>(img.rows());
    const int w = static_cast<int>(img.cols());
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;

    auto at = [&](int xx, int yy) -> double {
        if (xx < 0 || yy < 0 || xx >= w || yy >= h) return 0.0;
        return img(yy, xx);
    };
    return (1 - fx) * (1 - fy) * at(x0, y0) + fx * (1 - fy) * at(x0 + 1, y0) +
           (1 - fx) * fy * at(x0, y0 + 1) + fx * fy * at(x0 + 1, y0 + 1);
}

double bilinear_sample_clamped(const Image& img, double x, double y) {
    const int h = static_cast<int>(img.rows());
    const int w = static_cast<int>(img.cols());
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;

    auto at = [&](int xx, int yy) -> double {
        return img(std::clamp(yy, 0, h - 1), std::clamp(xx, 0, w - 1));
    };
    return (1 - fx) * (1 - fy) * at(x0, y0) + fx * (1 - fy) * at(x0 + 1, y0) +
           (1 - fx) * fy * at(x0, y0 + 1) + fx * fy * at(x0 + 1, y0 + 1);
}

Image resize_bilinear(const Image& img, int out_h, int out_w) {
    Image out(out_h, out_w);
    const double sx = static_cast<double>(img.cols()) / out_w;
    const double sy = static_cast<double>(img.rows()) / out_h;
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            out(y, x) = bilinear_sample_clamped(img, (x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5);
        }
    }
    return out;
}

Image warp_affine(const Image& img, const AffineMap& map, int out_h, int out_w) {
    Image out(out_h, out_w);
    const double ocx = 0.5 * (out_w - 1);
    const double ocy = 0.5 * (out_h - 1);
    const double icx = 0.5 * (img.cols() - 1);
    const double icy = 0.5 * (img.rows() - 1);
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            const double dx = x - ocx;
            const double dy = y - ocy;
            const double sx = map.m00 * dx + map.m01 * dy + icx + map.tx;
            const double sy = map.m10 * dx + map.m11 * dy + icy + map.ty;
            out(y, x) = bilinear_sample(img, sx, sy);
        }
    }
    return out;
}

}  // namespace jema
