#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jema/io/image.hpp"

namespace jema::viz {

struct Series {
    std::vector<double> x;
    std::vector<double> y;
    std::array<std::uint8_t, 3> color = {31, 119, 180};
    bool connect = false;  // draw line segments between consecutive points
    int marker_px = 4;
};

// Per-point scalar mapped through the heat colormap (metadata coloring).
struct ColoredSeries {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> value;
    int marker_px = 4;
};

struct PlotSpec {
    int width = 720;
    int height = 540;
    bool diagonal = false;  // y = x reference line
    std::optional<double> x_min, x_max, y_min, y_max;
};

ImageRgb render_plot(const std::vector<Series>& series, const PlotSpec& spec = {});
ImageRgb render_colored_scatter(const ColoredSeries& series, const PlotSpec& spec = {});
// One bar per value, left to right (component importance style).
ImageRgb render_bars(const std::vector<double>& values, const PlotSpec& spec = {});

// 5x7 numeric glyphs; used for tick labels.
void draw_text(ImageRgb& img, int x, int y, const std::string& text,
               std::array<std::uint8_t, 3> color);

}  // namespace jema::viz
