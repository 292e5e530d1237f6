#pragma once

#include <algorithm>
#include <array>
#include <cstdint>

namespace jema::viz {

// Compact viridis-like gradient (dark blue -> teal -> yellow) evaluated by
// piecewise-linear interpolation of anchor colors.
inline std::array<std::uint8_t, 3> heat_color(double t) {
    static constexpr double anchors[7][3] = {
        {68, 1, 84},  {71, 44, 122}, {59, 81, 139},  {44, 113, 142},
        {33, 144, 141}, {94, 201, 98}, {253, 231, 37},
    };
    t = std::clamp(t, 0.0, 1.0);
    const double pos = t * 6.0;
    const int lo = std::min(5, static_cast<int>(pos));
    const double f = pos - lo;
    std::array<std::uint8_t, 3> c;
    for (int i = 0; i < 3; ++i) {
        c[i] = static_cast<std::uint8_t>(anchors[lo][i] + f * (anchors[lo + 1][i] - anchors[lo][i]));
    }
    return c;
}

}  // namespace jema::viz
