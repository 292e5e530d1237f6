#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jema/synth/synth.hpp"

namespace jema::synth {

struct FrameRecord {
    std::string frame_id;
    std::string on_axis_path;   // relative to the manifest directory
    std::string off_axis_path;
    double power_w = 0.0;
    double velocity_mm_s = 0.0;
    double length_px = 0.0;
    double height_px = 0.0;
};

struct NormalizationConstants {
    double p_min = 0.0, p_max = 0.0;
    double v_min = 0.0, v_max = 0.0;
    double l_max = 0.0, h_max = 0.0;

    void validate() const;  // max > min, l_max/h_max > 0
};

struct NormalizedSample {
    double u_p = 0.0;  // (p - p_min) / (p_max - p_min)
    double u_v = 0.0;
    double y_l = 0.0;  // length / l_max
    double y_h = 0.0;
};

// Min-max for the process parameters, divide-by-max for the targets.
// Out-of-range values raise an error naming the offending field.
NormalizedSample normalize(const FrameRecord& record, const NormalizationConstants& c);
double denormalize_length(double y_l, const NormalizationConstants& c);
double denormalize_height(double y_h, const NormalizationConstants& c);

struct Manifest {
    std::string dir;  // directory containing manifest.csv; image paths resolve against it
    std::vector<FrameRecord> records;
    NormalizationConstants norm;
    DoeGrid grid;

    std::string resolve(const std::string& rel_path) const;
};

inline constexpr const char* kManifestCsvName = "manifest.csv";
inline constexpr const char* kNormSidecarName = "norm.json";

// Columns exactly: frame_id,on_axis_path,off_axis_path,power_w,velocity_mm_s,length_px,height_px
void write_manifest(const Manifest& manifest);
Manifest read_manifest(const std::string& manifest_csv_path);

struct DatasetOptions {
    double label_noise_sigma = 0.03;  // multiplicative on L and H
    double outlier_fraction = 0.0;    // fraction of frames given gross label errors
    double outlier_factor = 1.6;      // multiplier applied to an outlier's dims
    RenderOptions render;
};

// Writes images/ plus manifest.csv and norm.json under out_dir. Fully
// deterministic under (grid, frames_per_cell, seed): each frame's rng stream
// is derived from (seed, frame_id), so generation order does not matter.
Manifest generate_dataset(const DoeGrid& grid, int frames_per_cell, const std::string& out_dir,
                          std::uint64_t seed, const DatasetOptions& opts = {});

}  // namespace jema::synth
