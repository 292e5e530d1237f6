#include "jema/vision/meltpool.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace jema::vision {

ThermalFrame median_filter(const ThermalFrame& frame, int kernel) {
    if (kernel < 1 || kernel % 2 == 0) {
        throw std::invalid_argument("median filter kernel must be odd and >= 1");
    }
    if (kernel == 1) return frame;

    const int h = static_cast<int>(frame.rows());
    const int w = static_cast<int>(frame.cols());
    const int r = kernel / 2;

    ThermalFrame out(h, w);
    std::vector<double> window;
    window.reserve(static_cast<std::size_t>(kernel) * kernel);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            window.clear();
            for (int dy = -r; dy <= r; ++dy) {
                const int yy = std::clamp(y + dy, 0, h - 1);
                for (int dx = -r; dx <= r; ++dx) {
                    const int xx = std::clamp(x + dx, 0, w - 1);
                    window.push_back(frame(yy, xx));
                }
            }
            auto mid = window.begin() + window.size() / 2;
            std::nth_element(window.begin(), mid, window.end());
            out(y, x) = *mid;
        }
    }
    return out;
}

namespace {

// Label 8-connected components; returns label matrix (-1 background) and
// writes per-component pixel counts.
Eigen::MatrixXi label_components(const Mask& mask, std::vector<long>& areas) {
    const int h = static_cast<int>(mask.rows());
    const int w = static_cast<int>(mask.cols());
    Eigen::MatrixXi labels = Eigen::MatrixXi::Constant(h, w, -1);
    areas.clear();

    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask(y, x) || labels(y, x) >= 0) continue;
            const int id = static_cast<int>(areas.size());
            areas.push_back(0);
            stack.push_back({y, x});
            labels(y, x) = id;
            while (!stack.empty()) {
                auto [cy, cx] = stack.back();
                stack.pop_back();
                ++areas[id];
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int ny = cy + dy;
                        const int nx = cx + dx;
                        if (ny < 0 || nx < 0 || ny >= h || nx >= w) continue;
                        if (!mask(ny, nx) || labels(ny, nx) >= 0) continue;
                        labels(ny, nx) = id;
                        stack.push_back({ny, nx});
                    }
                }
            }
        }
    }
    return labels;
}

// Fill holes: background pixels not reachable (4-connected) from the border
// become foreground.
void fill_holes(Mask& mask) {
    const int h = static_cast<int>(mask.rows());
    const int w = static_cast<int>(mask.cols());
    Mask outside = Mask::Constant(h, w, false);

    std::vector<std::pair<int, int>> stack;
    auto push = [&](int y, int x) {
        if (y < 0 || x < 0 || y >= h || x >= w) return;
        if (mask(y, x) || outside(y, x)) return;
        outside(y, x) = true;
        stack.push_back({y, x});
    };
    for (int x = 0; x < w; ++x) {
        push(0, x);
        push(h - 1, x);
    }
    for (int y = 0; y < h; ++y) {
        push(y, 0);
        push(y, w - 1);
    }
    while (!stack.empty()) {
        auto [y, x] = stack.back();
        stack.pop_back();
        push(y - 1, x);
        push(y + 1, x);
        push(y, x - 1);
        push(y, x + 1);
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask(y, x) && !outside(y, x)) mask(y, x) = true;
        }
    }
}

}  // namespace

Mask threshold_mask(const ThermalFrame& frame, double threshold_c) {
    const int h = static_cast<int>(frame.rows());
    const int w = static_cast<int>(frame.cols());
    Mask mask(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) mask(y, x) = frame(y, x) >= threshold_c;
    }

    std::vector<long> areas;
    const Eigen::MatrixXi labels = label_components(mask, areas);
    if (areas.empty()) return mask;  // all cold

    const int keep =
        static_cast<int>(std::max_element(areas.begin(), areas.end()) - areas.begin());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) mask(y, x) = labels(y, x) == keep;
    }
    fill_holes(mask);
    return mask;
}

MeltPoolMeasurement measure_lh(const Mask& mask) {
    int min_x = -1, max_x = -1, min_y = -1, max_y = -1;
    long area = 0;
    for (int y = 0; y < mask.rows(); ++y) {
        for (int x = 0; x < mask.cols(); ++x) {
            if (!mask(y, x)) continue;
            ++area;
            if (min_x < 0 || x < min_x) min_x = x;
            if (x > max_x) max_x = x;
            if (min_y < 0 || y < min_y) min_y = y;
            if (y > max_y) max_y = y;
        }
    }
    if (area == 0) return {};
    MeltPoolMeasurement m;
    m.length_px = static_cast<double>(max_x - min_x + 1);
    m.height_px = static_cast<double>(max_y - min_y + 1);
    m.mask_area_px = area;
    return m;
}

std::vector<CellSample> remove_outliers(const std::vector<CellSample>& cell, double sigma) {
    if (cell.size() < 2) {
        throw std::invalid_argument("outlier removal needs at least 2 samples per cell");
    }
    const double n = static_cast<double>(cell.size());

    double mean_l = 0.0, mean_h = 0.0;
    for (const auto& s : cell) {
        mean_l += s.length_px;
        mean_h += s.height_px;
    }
    mean_l /= n;
    mean_h /= n;

    double var_l = 0.0, var_h = 0.0;
    for (const auto& s : cell) {
        var_l += (s.length_px - mean_l) * (s.length_px - mean_l);
        var_h += (s.height_px - mean_h) * (s.height_px - mean_h);
    }
    // Population std: the cell is the full population of that parameter set.
    const double std_l = std::sqrt(var_l / n);
    const double std_h = std::sqrt(var_h / n);

    // Removal rule is |z| >= sigma; the small slack keeps values sitting
    // exactly on the boundary on the removed side despite round-off.
    const double cut = sigma * (1.0 - 1e-9);
    std::vector<CellSample> kept;
    kept.reserve(cell.size());
    for (const auto& s : cell) {
        const double zl = std_l > 0.0 ? std::abs(s.length_px - mean_l) / std_l : 0.0;
        const double zh = std_h > 0.0 ? std::abs(s.height_px - mean_h) / std_h : 0.0;
        if (zl < cut && zh < cut) kept.push_back(s);
    }
    return kept;
}

std::map<DoeCellKey, DoeCellStats> aggregate_doe(
    const std::map<DoeCellKey, std::vector<CellSample>>& cells, double sigma) {
    std::map<DoeCellKey, DoeCellStats> out;
    for (const auto& [key, samples] : cells) {
        DoeCellStats stats;
        if (samples.empty()) {
            stats.missing = true;
            out[key] = stats;
            continue;
        }
        const std::vector<CellSample> kept =
            samples.size() >= 2 ? remove_outliers(samples, sigma) : samples;
        stats.n_kept = static_cast<long>(kept.size());
        stats.n_removed = static_cast<long>(samples.size() - kept.size());
        if (kept.empty()) {
            stats.missing = true;
        } else {
            for (const auto& s : kept) {
                stats.mean_length_px += s.length_px;
                stats.mean_height_px += s.height_px;
            }
            stats.mean_length_px /= static_cast<double>(kept.size());
            stats.mean_height_px /= static_cast<double>(kept.size());
        }
        out[key] = stats;
    }
    return out;
}

}  // namespace jema::vision
