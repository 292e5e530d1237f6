#pragma once

#include <Eigen/Core>
#include <map>
#include <utility>
#include <vector>

namespace jema::vision {

// Thermal frame in degrees Celsius.
using ThermalFrame = Eigen::MatrixXd;
using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Synthetic thermal PNGs store round(celsius / kCelsiusPerGray) per pixel.
inline constexpr double kCelsiusPerGray = 10.0;
inline constexpr double kDefaultThresholdCelsius = 1250.0;

struct MeltPoolMeasurement {
    double length_px = 0.0;  // horizontal extent of the mask
    double height_px = 0.0;  // vertical extent of the mask
    long mask_area_px = 0;
};

// Per-pixel median over a kernel x kernel neighborhood with edge replication.
// Kernel must be odd; kernel 1 is the identity.
ThermalFrame median_filter(const ThermalFrame& frame, int kernel);

// temps >= threshold, then keep only the largest 8-connected component and
// fill any holes inside it (emissivity dips make melt-pool centers read
// cooler than the rim). An empty mask is a valid result.
Mask threshold_mask(const ThermalFrame& frame, double threshold_c = kDefaultThresholdCelsius);

// Bounding-box extents of the mask; empty mask measures (0, 0, 0).
MeltPoolMeasurement measure_lh(const Mask& mask);

struct CellSample {
    double length_px = 0.0;
    double height_px = 0.0;
};

// Drop samples whose L or H z-score (against the cell's population std)
// reaches sigma. Single pass: statistics come from the full input, no
// re-iteration after removals. Zero-std dimensions remove nothing.
std::vector<CellSample> remove_outliers(const std::vector<CellSample>& cell, double sigma = 3.0);

struct DoeCellKey {
    double power_w = 0.0;
    double velocity_mm_s = 0.0;
    bool operator<(const DoeCellKey& o) const {
        if (power_w != o.power_w) return power_w < o.power_w;
        return velocity_mm_s < o.velocity_mm_s;
    }
};

struct DoeCellStats {
    double mean_length_px = 0.0;
    double mean_height_px = 0.0;
    long n_kept = 0;
    long n_removed = 0;
    bool missing = false;  // cell present in the key set but emptied out
};

// Outlier removal followed by per-cell arithmetic means.
std::map<DoeCellKey, DoeCellStats> aggregate_doe(
    const std::map<DoeCellKey, std::vector<CellSample>>& cells, double sigma = 3.0);

}  // namespace jema::vision
