#include "jema/viz/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "jema/viz/colormap.hpp"

namespace jema::viz {

namespace {

// Column bitmasks (LSB = top) for the characters tick labels need.
struct Glyph {
    char ch;
    std::uint8_t cols[5];
};
constexpr Glyph kGlyphs[] = {
    {'0', {0x3E, 0x51, 0x49, 0x45, 0x3E}}, {'1', {0x00, 0x42, 0x7F, 0x40, 0x00}},
    {'2', {0x42, 0x61, 0x51, 0x49, 0x46}}, {'3', {0x21, 0x41, 0x45, 0x4B, 0x31}},
    {'4', {0x18, 0x14, 0x12, 0x7F, 0x10}}, {'5', {0x27, 0x45, 0x45, 0x45, 0x39}},
    {'6', {0x3C, 0x4A, 0x49, 0x49, 0x30}}, {'7', {0x01, 0x71, 0x09, 0x05, 0x03}},
    {'8', {0x36, 0x49, 0x49, 0x49, 0x36}}, {'9', {0x06, 0x49, 0x49, 0x29, 0x1E}},
    {'-', {0x08, 0x08, 0x08, 0x08, 0x08}}, {'.', {0x00, 0x60, 0x60, 0x00, 0x00}},
    {'+', {0x08, 0x08, 0x3E, 0x08, 0x08}}, {'e', {0x38, 0x54, 0x54, 0x54, 0x18}},
};

const Glyph* find_glyph(char c) {
    for (const auto& g : kGlyphs) {
        if (g.ch == c) return &g;
    }
    return nullptr;
}

constexpr int kMarginLeft = 64;
constexpr int kMarginRight = 24;
constexpr int kMarginTop = 24;
constexpr int kMarginBottom = 44;

struct Frame {
    double x0, x1, y0, y1;
    int width, height;

    int px(double x) const {
        return kMarginLeft +
               static_cast<int>(std::lround((x - x0) / (x1 - x0) *
                                            (width - kMarginLeft - kMarginRight)));
    }
    int py(double y) const {
        return height - kMarginBottom -
               static_cast<int>(std::lround((y - y0) / (y1 - y0) *
                                            (height - kMarginTop - kMarginBottom)));
    }
};

void fill_background(ImageRgb& img) {
    std::fill(img.pixels.begin(), img.pixels.end(), std::uint8_t{255});
}

void draw_marker(ImageRgb& img, int cx, int cy, int size, std::array<std::uint8_t, 3> color) {
    const int r = std::max(1, size / 2);
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            if (dx * dx + dy * dy <= r * r) img.set(cx + dx, cy + dy, color[0], color[1], color[2]);
        }
    }
}

void draw_line(ImageRgb& img, int x0, int y0, int x1, int y1,
               std::array<std::uint8_t, 3> color) {
    const int steps = std::max({std::abs(x1 - x0), std::abs(y1 - y0), 1});
    for (int s = 0; s <= steps; ++s) {
        const double t = static_cast<double>(s) / steps;
        img.set(static_cast<int>(std::lround(x0 + t * (x1 - x0))),
                static_cast<int>(std::lround(y0 + t * (y1 - y0))), color[0], color[1], color[2]);
    }
}

std::string format_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

Frame setup_axes(ImageRgb& img, double x0, double x1, double y0, double y1) {
    if (x1 - x0 < 1e-12) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if (y1 - y0 < 1e-12) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    const double mx = 0.05 * (x1 - x0);
    const double my = 0.05 * (y1 - y0);
    Frame frame{x0 - mx, x1 + mx, y0 - my, y1 + my, img.width, img.height};

    const std::array<std::uint8_t, 3> axis = {60, 60, 60};
    const std::array<std::uint8_t, 3> grid = {225, 225, 225};
    const int bottom = img.height - kMarginBottom;

    for (int tick = 0; tick <= 4; ++tick) {
        const double fx = frame.x0 + tick * (frame.x1 - frame.x0) / 4.0;
        const double fy = frame.y0 + tick * (frame.y1 - frame.y0) / 4.0;
        draw_line(img, frame.px(fx), kMarginTop, frame.px(fx), bottom, grid);
        draw_line(img, kMarginLeft, frame.py(fy), img.width - kMarginRight, frame.py(fy), grid);
        draw_text(img, frame.px(fx) - 10, bottom + 8, format_tick(fx), axis);
        draw_text(img, 6, frame.py(fy) - 3, format_tick(fy), axis);
    }
    draw_line(img, kMarginLeft, kMarginTop, kMarginLeft, bottom, axis);
    draw_line(img, kMarginLeft, bottom, img.width - kMarginRight, bottom, axis);
    return frame;
}

}  // namespace

void draw_text(ImageRgb& img, int x, int y, const std::string& text,
               std::array<std::uint8_t, 3> color) {
    int cx = x;
    for (char c : text) {
        const Glyph* g = find_glyph(c);
        if (g) {
            for (int col = 0; col < 5; ++col) {
                for (int row = 0; row < 7; ++row) {
                    if (g->cols[col] & (1 << row)) {
                        img.set(cx + col, y + row, color[0], color[1], color[2]);
                    }
                }
            }
        }
        cx += 6;
    }
}

ImageRgb render_plot(const std::vector<Series>& series, const PlotSpec& spec) {
    ImageRgb img(spec.width, spec.height);
    fill_background(img);

    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& s : series) {
        for (double v : s.x) {
            x0 = std::min(x0, v);
            x1 = std::max(x1, v);
        }
        for (double v : s.y) {
            y0 = std::min(y0, v);
            y1 = std::max(y1, v);
        }
    }
    if (x0 > x1) {
        x0 = 0;
        x1 = 1;
        y0 = 0;
        y1 = 1;
    }
    if (spec.x_min) x0 = *spec.x_min;
    if (spec.x_max) x1 = *spec.x_max;
    if (spec.y_min) y0 = *spec.y_min;
    if (spec.y_max) y1 = *spec.y_max;

    const Frame frame = setup_axes(img, x0, x1, y0, y1);
    if (spec.diagonal) {
        const double lo = std::max(frame.x0, frame.y0);
        const double hi = std::min(frame.x1, frame.y1);
        if (lo < hi) {
            draw_line(img, frame.px(lo), frame.py(lo), frame.px(hi), frame.py(hi),
                      {160, 160, 160});
        }
    }
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (s.connect && i > 0) {
                draw_line(img, frame.px(s.x[i - 1]), frame.py(s.y[i - 1]), frame.px(s.x[i]),
                          frame.py(s.y[i]), s.color);
            }
            draw_marker(img, frame.px(s.x[i]), frame.py(s.y[i]), s.marker_px, s.color);
        }
    }
    return img;
}

ImageRgb render_colored_scatter(const ColoredSeries& series, const PlotSpec& spec) {
    ImageRgb img(spec.width, spec.height);
    fill_background(img);

    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (double v : series.x) {
        x0 = std::min(x0, v);
        x1 = std::max(x1, v);
    }
    for (double v : series.y) {
        y0 = std::min(y0, v);
        y1 = std::max(y1, v);
    }
    if (x0 > x1) {
        x0 = 0;
        x1 = 1;
        y0 = 0;
        y1 = 1;
    }
    const Frame frame = setup_axes(img, x0, x1, y0, y1);

    double v0 = 1e300, v1 = -1e300;
    for (double v : series.value) {
        v0 = std::min(v0, v);
        v1 = std::max(v1, v);
    }
    const double span = v1 > v0 ? v1 - v0 : 1.0;
    for (std::size_t i = 0; i < series.x.size(); ++i) {
        const auto color = heat_color((series.value[i] - v0) / span);
        draw_marker(img, frame.px(series.x[i]), frame.py(series.y[i]), series.marker_px, color);
    }
    return img;
}

ImageRgb render_bars(const std::vector<double>& values, const PlotSpec& spec) {
    ImageRgb img(spec.width, spec.height);
    fill_background(img);

    double hi = 0.0;
    for (double v : values) hi = std::max(hi, v);
    if (hi <= 0.0) hi = 1.0;
    const Frame frame =
        setup_axes(img, 0.0, static_cast<double>(values.size()), 0.0, hi);

    for (std::size_t i = 0; i < values.size(); ++i) {
        const int xl = frame.px(i + 0.15);
        const int xr = frame.px(i + 0.85);
        const int yb = frame.py(0.0);
        const int yt = frame.py(values[i]);
        for (int x = xl; x <= xr; ++x) draw_line(img, x, yt, x, yb, {70, 130, 180});
        draw_text(img, (xl + xr) / 2 - 3, yb + 8, format_tick(static_cast<double>(i + 1)),
                  {60, 60, 60});
    }
    return img;
}

}  // namespace jema::viz
