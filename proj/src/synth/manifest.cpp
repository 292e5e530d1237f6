#include "jema/synth/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "jema/util/csv.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace jema::synth {

void NormalizationConstants::validate() const {
    if (!(p_max > p_min)) throw std::invalid_argument("norm constants: p_max must exceed p_min");
    if (!(v_max > v_min)) throw std::invalid_argument("norm constants: v_max must exceed v_min");
    if (!(l_max > 0.0)) throw std::invalid_argument("norm constants: l_max must be positive");
    if (!(h_max > 0.0)) throw std::invalid_argument("norm constants: h_max must be positive");
}

NormalizedSample normalize(const FrameRecord& r, const NormalizationConstants& c) {
    c.validate();
    auto in_range = [](double x, double lo, double hi, const char* field) {
        if (x < lo || x > hi) {
            throw std::out_of_range(std::string(field) + " value " + std::to_string(x) +
                                    " outside normalization range [" + std::to_string(lo) + ", " +
                                    std::to_string(hi) + "]");
        }
    };
    in_range(r.power_w, c.p_min, c.p_max, "power_w");
    in_range(r.velocity_mm_s, c.v_min, c.v_max, "velocity_mm_s");
    in_range(r.length_px, 0.0, c.l_max, "length_px");
    in_range(r.height_px, 0.0, c.h_max, "height_px");

    NormalizedSample s;
    s.u_p = (r.power_w - c.p_min) / (c.p_max - c.p_min);
    s.u_v = (r.velocity_mm_s - c.v_min) / (c.v_max - c.v_min);
    s.y_l = r.length_px / c.l_max;
    s.y_h = r.height_px / c.h_max;
    return s;
}

double denormalize_length(double y_l, const NormalizationConstants& c) { return y_l * c.l_max; }
double denormalize_height(double y_h, const NormalizationConstants& c) { return y_h * c.h_max; }

std::string Manifest::resolve(const std::string& rel_path) const {
    return (fs::path(dir) / rel_path).string();
}

namespace {

std::string format_double(double v, const char* fmt) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

DoeGrid grid_from_records(const std::vector<FrameRecord>& records) {
    std::set<double> powers, velocities;
    for (const auto& r : records) {
        powers.insert(r.power_w);
        velocities.insert(r.velocity_mm_s);
    }
    DoeGrid grid;
    grid.powers_w.assign(powers.begin(), powers.end());
    grid.velocities_mm_s.assign(velocities.begin(), velocities.end());
    return grid;
}

}  // namespace

void write_manifest(const Manifest& manifest) {
    csv::Table table;
    table.header = {"frame_id",      "on_axis_path", "off_axis_path", "power_w",
                    "velocity_mm_s", "length_px",    "height_px"};
    for (const auto& r : manifest.records) {
        table.rows.push_back({r.frame_id, r.on_axis_path, r.off_axis_path,
                              format_double(r.power_w, "%.10g"),
                              format_double(r.velocity_mm_s, "%.10g"),
                              format_double(r.length_px, "%.6f"),
                              format_double(r.height_px, "%.6f")});
    }
    csv::write_file((fs::path(manifest.dir) / kManifestCsvName).string(), table);

    const json sidecar = {{"p_min", manifest.norm.p_min}, {"p_max", manifest.norm.p_max},
                          {"v_min", manifest.norm.v_min}, {"v_max", manifest.norm.v_max},
                          {"l_max", manifest.norm.l_max}, {"h_max", manifest.norm.h_max}};
    std::ofstream out(fs::path(manifest.dir) / kNormSidecarName);
    if (!out) throw std::runtime_error("cannot write norm sidecar in " + manifest.dir);
    out << sidecar.dump(2) << '\n';
}

Manifest read_manifest(const std::string& manifest_csv_path) {
    Manifest m;
    m.dir = fs::path(manifest_csv_path).parent_path().string();
    if (m.dir.empty()) m.dir = ".";

    const csv::Table table = csv::read_file(manifest_csv_path);
    const std::vector<std::string> expected = {"frame_id",      "on_axis_path", "off_axis_path",
                                               "power_w",       "velocity_mm_s", "length_px",
                                               "height_px"};
    if (table.header != expected) {
        throw std::runtime_error("manifest has unexpected columns: " + manifest_csv_path);
    }
    for (const auto& row : table.rows) {
        FrameRecord r;
        r.frame_id = row[0];
        r.on_axis_path = row[1];
        r.off_axis_path = row[2];
        r.power_w = std::stod(row[3]);
        r.velocity_mm_s = std::stod(row[4]);
        r.length_px = std::stod(row[5]);
        r.height_px = std::stod(row[6]);
        m.records.push_back(std::move(r));
    }

    std::ifstream in(fs::path(m.dir) / kNormSidecarName);
    if (!in) throw std::runtime_error("missing norm sidecar next to " + manifest_csv_path);
    json sidecar = json::parse(in);
    m.norm.p_min = sidecar.at("p_min").get<double>();
    m.norm.p_max = sidecar.at("p_max").get<double>();
    m.norm.v_min = sidecar.at("v_min").get<double>();
    m.norm.v_max = sidecar.at("v_max").get<double>();
    m.norm.l_max = sidecar.at("l_max").get<double>();
    m.norm.h_max = sidecar.at("h_max").get<double>();
    m.norm.validate();

    m.grid = grid_from_records(m.records);
    return m;
}

Manifest generate_dataset(const DoeGrid& grid, int frames_per_cell, const std::string& out_dir,
                          std::uint64_t seed, const DatasetOptions& opts) {
    grid.validate();
    if (frames_per_cell < 1) throw std::invalid_argument("frames_per_cell must be >= 1");

    const fs::path root(out_dir);
    const fs::path image_dir = root / "images";
    std::error_code ec;
    fs::create_directories(image_dir, ec);
    if (ec) throw std::runtime_error("cannot create dataset directory " + image_dir.string());

    Manifest manifest;
    manifest.dir = root.string();
    manifest.grid = grid;

    for (double p : grid.powers_w) {
        for (double v : grid.velocities_mm_s) {
            for (int k = 0; k < frames_per_cell; ++k) {
                char id[96];
                std::snprintf(id, sizeof(id), "p%g_v%g_%03d", p, v, k);
                const std::uint64_t frame_seed = Rng::derive_seed(seed, id);

                // Labels: clean surface value plus multiplicative noise, with
                // an optional gross-outlier corruption.
                const MeltPoolDims clean = response_surface(p, v);
                Rng label_rng(Rng::derive_seed(frame_seed, "label"));
                MeltPoolDims dims;
                dims.length_px = clean.length_px * (1.0 + opts.label_noise_sigma * label_rng.normal());
                dims.height_px = clean.height_px * (1.0 + opts.label_noise_sigma * label_rng.normal());
                if (opts.outlier_fraction > 0.0 && label_rng.bernoulli(opts.outlier_fraction)) {
                    dims.length_px *= opts.outlier_factor;
                    dims.height_px *= opts.outlier_factor;
                }
                // Quantize to the manifest's write precision so reloaded
                // labels match the stored normalization constants exactly.
                dims.length_px = std::round(dims.length_px * 1e6) / 1e6;
                dims.height_px = std::round(dims.height_px * 1e6) / 1e6;

                RenderOptions render = opts.render;
                render.override_dims = dims;
                const Image on = render_frame(p, v, Modality::on_axis, frame_seed, render);
                const Image off = render_frame(p, v, Modality::off_axis, frame_seed, render);

                FrameRecord rec;
                rec.frame_id = id;
                rec.on_axis_path = (fs::path("images") / (std::string(id) + "_on.png")).string();
                rec.off_axis_path = (fs::path("images") / (std::string(id) + "_off.png")).string();
                rec.power_w = p;
                rec.velocity_mm_s = v;
                rec.length_px = dims.length_px;
                rec.height_px = dims.height_px;

                io::write_png_gray(manifest.resolve(rec.on_axis_path), on);
                io::write_png_gray(manifest.resolve(rec.off_axis_path), off);
                manifest.records.push_back(std::move(rec));
            }
        }
    }

    manifest.norm.p_min = grid.powers_w.front();
    manifest.norm.p_max = grid.powers_w.back();
    manifest.norm.v_min = grid.velocities_mm_s.front();
    manifest.norm.v_max = grid.velocities_mm_s.back();
    manifest.norm.l_max = 0.0;
    manifest.norm.h_max = 0.0;
    for (const auto& r : manifest.records) {
        manifest.norm.l_max = std::max(manifest.norm.l_max, r.length_px);
        manifest.norm.h_max = std::max(manifest.norm.h_max, r.height_px);
    }
    write_manifest(manifest);
    return manifest;
}

}  // namespace jema::synth
