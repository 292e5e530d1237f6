#include "jema/synth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace jema::synth {

void DoeGrid::validate() const {
    auto check = [](const std::vector<double>& v, const char* name) {
        if (v.empty()) throw std::invalid_argument(std::string(name) + " list is empty");
        for (std::size_t i = 1; i < v.size(); ++i) {
            if (v[i] <= v[i - 1]) {
                throw std::invalid_argument(std::string(name) + " must be strictly increasing");
            }
        }
    };
    check(velocities_mm_s, "velocity");
    check(powers_w, "power");
}

int DoeGrid::nearest_cell(double power_w, double velocity_mm_s) const {
    auto nearest = [](const std::vector<double>& v, double x) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < v.size(); ++i) {
            if (std::abs(v[i] - x) < std::abs(v[best] - x)) best = i;
        }
        return best;
    };
    const std::size_t pi = nearest(powers_w, power_w);
    const std::size_t vi = nearest(velocities_mm_s, velocity_mm_s);
    return static_cast<int>(pi * velocities_mm_s.size() + vi);
}

DoeGrid DoeGrid::standard() {
    return DoeGrid{{4.0, 6.0, 8.0, 10.0},
                   {800.0, 1000.0, 1200.0, 1400.0, 1600.0, 1800.0, 2000.0}};
}

namespace {

constexpr double kLengthScale = 3.0;
constexpr double kLengthPowerExp = 0.6;
constexpr double kLengthVelExp = 0.4;
constexpr double kHeightScale = 55.0;
constexpr double kHeightPowerExp = 0.15;
constexpr double kHeightVelExp = 0.7;

constexpr double kThresholdCelsius = 1250.0;
constexpr double kCelsiusPerGray = 10.0;

}  // namespace

MeltPoolDims response_surface(double power_w, double velocity_mm_s) {
    if (power_w <= 0.0 || velocity_mm_s <= 0.0) {
        throw std::invalid_argument("process parameters must be positive");
    }
    MeltPoolDims dims;
    dims.length_px =
        kLengthScale * std::pow(power_w, kLengthPowerExp) / std::pow(velocity_mm_s, kLengthVelExp);
    dims.height_px =
        kHeightScale * std::pow(power_w, kHeightPowerExp) / std::pow(velocity_mm_s, kHeightVelExp);
    return dims;
}

Image render_frame(double power_w, double velocity_mm_s, Modality modality,
                   std::uint64_t rng_seed, const RenderOptions& opts) {
    const MeltPoolDims dims =
        opts.override_dims ? *opts.override_dims : response_surface(power_w, velocity_mm_s);
    const int size = opts.size_px;
    const double a = 0.5 * dims.length_px;  // ellipse semi-axes
    const double b = 0.5 * dims.height_px;
    if (a < 1.0 || b < 1.0) throw std::invalid_argument("melt pool too small to render");

    // Integer center jitter drawn before any modality-specific stream so both
    // views of one frame share the melt-pool position.
    Rng geom_rng(Rng::derive_seed(rng_seed, "geom"));
    const int jitter = opts.max_center_jitter_px;
    const int cx = size / 2 + (jitter > 0 ? static_cast<int>(geom_rng.uniform_index(2 * jitter + 1)) - jitter : 0);
    const int cy = size / 2 + (jitter > 0 ? static_cast<int>(geom_rng.uniform_index(2 * jitter + 1)) - jitter : 0);

    Rng noise_rng(Rng::derive_seed(rng_seed, to_string(modality)));

    Image img(size, size);
    if (modality == Modality::off_axis) {
        // Thermal field whose 1250-degree iso-line is exactly the ellipse
        // r = 1: T(r) = peak * (1250/peak)^(r^2).
        const double k = std::log(opts.peak_c / kThresholdCelsius);
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                const double rx = (x - cx) / a;
                const double ry = (y - cy) / b;
                double t = opts.peak_c * std::exp(-k * (rx * rx + ry * ry));
                t = std::max(t, opts.ambient_c);
                if (opts.thermal_noise_c > 0.0) t += noise_rng.normal(0.0, opts.thermal_noise_c);
                // Floor quantization so gray >= 125 is exactly T >= 1250.
                const double gray = std::clamp(std::floor(t / kCelsiusPerGray), 0.0, 255.0);
                img(y, x) = gray / 255.0;
            }
        }
    } else {
        // Ring around the melt-pool boundary plus a trailing tail and a dim
        // center glow; same geometry, different appearance.
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                const double rx = (x - cx) / a;
                const double ry = (y - cy) / b;
                const double r = std::sqrt(rx * rx + ry * ry);
                const double ring = std::exp(-std::pow((r - 1.0) / 0.12, 2.0));
                const double glow = 0.35 * std::exp(-3.0 * r * r);
                const double trail = std::max(0.0, static_cast<double>(cx - x) / a);
                const double tail =
                    0.55 * std::exp(-std::pow(trail / 1.8, 2.0) - std::pow(ry / 0.6, 2.0)) *
                    (trail > 0.0 ? 1.0 : 0.0);
                double v = ring + glow + tail;
                if (opts.intensity_noise > 0.0) v += noise_rng.normal(0.0, opts.intensity_noise);
                img(y, x) = std::clamp(v, 0.0, 1.0);
            }
        }
    }
    return img;
}

AugmentParams draw_augment_params(Rng& rng) {
    AugmentParams p;
    p.hflip = rng.bernoulli(0.5);
    p.vflip = rng.bernoulli(0.5);
    p.rotation_deg = rng.uniform(-20.0, 20.0);
    p.shift_x_frac = rng.uniform(-0.05, 0.05);
    p.shift_y_frac = rng.uniform(-0.05, 0.05);
    return p;
}

Image augment_with_params(const Image& img, const AugmentParams& params) {
    if (img.rows() != kRenderSize || img.cols() != kRenderSize) {
        throw std::invalid_argument("augment expects a 320x320 input image");
    }
    const double scale = static_cast<double>(kRenderSize) / kAugmentSize;
    const double theta = params.rotation_deg * M_PI / 180.0;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double fx = params.hflip ? -1.0 : 1.0;
    const double fy = params.vflip ? -1.0 : 1.0;

    // Output->input: inverse rotation, then flips, then up-scaling.
    AffineMap map;
    map.m00 = scale * fx * c;
    map.m01 = scale * fx * s;
    map.m10 = scale * fy * -s;
    map.m11 = scale * fy * c;
    map.tx = params.shift_x_frac * kRenderSize;
    map.ty = params.shift_y_frac * kRenderSize;
    return warp_affine(img, map, kAugmentSize, kAugmentSize);
}

Image augment(const Image& img, Rng& rng) {
    return augment_with_params(img, draw_augment_params(rng));
}

}  // namespace jema::synth
