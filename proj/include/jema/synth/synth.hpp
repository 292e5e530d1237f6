#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "jema/core/types.hpp"
#include "jema/io/image.hpp"
#include "jema/util/rng.hpp"

namespace jema::synth {

// Full-factorial process-parameter grid.
struct DoeGrid {
    std::vector<double> velocities_mm_s;
    std::vector<double> powers_w;

    void validate() const;  // nonempty, strictly increasing
    std::size_t cell_count() const { return velocities_mm_s.size() * powers_w.size(); }
    // Index of the nearest grid cell for (possibly jittered) parameters.
    int nearest_cell(double power_w, double velocity_mm_s) const;

    static DoeGrid standard();  // v in {4,6,8,10}, P in {800,...,2000}
};

struct MeltPoolDims {
    double length_px = 0.0;
    double height_px = 0.0;
};

// Ground-truth melt-pool geometry. Monotone power law: length grows with
// power and shrinks with velocity; height is velocity-dominated with a weak
// power dependence. Constants are frozen in the golden test file.
MeltPoolDims response_surface(double power_w, double velocity_mm_s);

struct RenderOptions {
    int size_px = 320;
    double peak_c = 1800.0;
    double ambient_c = 25.0;
    double thermal_noise_c = 15.0;    // off-axis additive noise (degrees C)
    double intensity_noise = 0.02;    // on-axis additive noise (intensity)
    int max_center_jitter_px = 10;    // integer jitter, same for both views
    // Render with these dimensions instead of the response surface, so a
    // frame's image always matches its (possibly noisy) recorded label.
    std::optional<MeltPoolDims> override_dims;

    RenderOptions noise_free() const {
        RenderOptions o = *this;
        o.thermal_noise_c = 0.0;
        o.intensity_noise = 0.0;
        return o;
    }
};

// Deterministic 320x320 grayscale frame in [0,1] for the given parameters.
// The off-axis view is a thermal image whose 1250-degree iso-line is the
// melt-pool ellipse; the on-axis view is a ring-plus-tail rendering of the
// same geometry. Identical (p, v, seed) yield identical pixels.
Image render_frame(double power_w, double velocity_mm_s, Modality modality,
                   std::uint64_t rng_seed, const RenderOptions& opts = {});

struct AugmentParams {
    bool hflip = false;
    bool vflip = false;
    double rotation_deg = 0.0;
    double shift_x_frac = 0.0;  // fraction of input width
    double shift_y_frac = 0.0;
};

AugmentParams draw_augment_params(Rng& rng);

// Random resize-to-224 pipeline: flips (p=0.5 each), rotation in +-20 deg,
// shift up to 5% of width/height. Input must be 320x320; output is 224x224
// with values in [0,1].
Image augment(const Image& img, Rng& rng);
Image augment_with_params(const Image& img, const AugmentParams& params);

inline constexpr int kRenderSize = 320;
inline constexpr int kAugmentSize = 224;

}  // namespace jema::synth
