// Command-line front end: data generation, preprocessing, training,
// evaluation, probing, attention rendering and report emission.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "jema/analysis/analysis.hpp"
#include "jema/model/checkpoint.hpp"
#include "jema/synth/manifest.hpp"
#include "jema/train/report.hpp"
#include "jema/train/trainer.hpp"
#include "jema/util/csv.hpp"
#include "jema/vision/meltpool.hpp"
#include "jema/viz/plot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace jema;

namespace {

struct CliError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CliError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw CliError("config parse failure: " + std::string(e.what()));
    }
}

// key=value with dotted paths; the key must already exist in the config.
void apply_override(json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw CliError("override must look like key=value: " + assignment);
    }
    const std::string key = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);

    json* node = &config;
    std::istringstream parts(key);
    std::string part;
    std::vector<std::string> path;
    while (std::getline(parts, part, '.')) path.push_back(part);
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        if (!node->contains(path[i])) throw CliError("override references unknown key: " + key);
        node = &(*node)[path[i]];
    }
    if (path.empty() || !node->contains(path.back())) {
        throw CliError("override references unknown key: " + key);
    }
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        parsed = value;  // plain string
    }
    (*node)[path.back()] = parsed;
}

std::string timestamp_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    localtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
    return buf;
}

// runs/<timestamp>-seed<seed>/ with the fixed artifact layout.
fs::path make_run_dir(const json& config) {
    std::string root = config.value("run_root", std::string("runs"));
    if (const char* env = std::getenv("JEMA_RUN_ROOT")) root = env;
    const std::uint64_t seed = config.contains("train")
                                   ? config["train"].value("seed", std::uint64_t{7})
                                   : config.value("data", json::object()).value("seed", std::uint64_t{7});
    fs::path dir = fs::path(root) / (timestamp_now() + "-seed" + std::to_string(seed));
    for (int k = 2; fs::exists(dir); ++k) {
        dir = fs::path(root) / (timestamp_now() + "-seed" + std::to_string(seed) + "-" +
                                std::to_string(k));
    }
    fs::create_directories(dir / "metrics");
    fs::create_directories(dir / "checkpoints");
    fs::create_directories(dir / "figures");
    return dir;
}

void write_snapshot(const fs::path& run_dir, const json& config) {
    std::ofstream out(run_dir / "config.snapshot");
    out << config.dump(2) << '\n';
}

const json& require_section(const json& config, const char* name) {
    if (!config.contains(name)) throw CliError(std::string("config is missing section: ") + name);
    return config.at(name);
}

synth::Manifest load_manifest(const json& config) {
    const json& data = require_section(config, "data");
    std::string manifest_path;
    if (data.contains("manifest")) {
        manifest_path = data.at("manifest").get<std::string>();
    } else if (data.contains("out_dir")) {
        manifest_path =
            (fs::path(data.at("out_dir").get<std::string>()) / synth::kManifestCsvName).string();
    } else {
        throw CliError("config data section needs 'manifest' or 'out_dir'");
    }
    return synth::read_manifest(manifest_path);
}

double json_num(const json& j, const char* key, double fallback) {
    return j.value(key, fallback);
}

// ---------------- verbs ----------------

int cmd_gen_data(const json& config, const fs::path& run_dir) {
    const json& data = require_section(config, "data");
    if (!data.contains("out_dir")) throw CliError("data.out_dir is required for gen-data");

    synth::DoeGrid grid = synth::DoeGrid::standard();
    if (data.contains("grid")) {
        grid.velocities_mm_s = data["grid"].value("velocities", grid.velocities_mm_s);
        grid.powers_w = data["grid"].value("powers", grid.powers_w);
    }
    synth::DatasetOptions opts;
    opts.label_noise_sigma = json_num(data, "label_noise_sigma", opts.label_noise_sigma);
    opts.outlier_fraction = json_num(data, "outlier_fraction", opts.outlier_fraction);
    opts.outlier_factor = json_num(data, "outlier_factor", opts.outlier_factor);

    const auto manifest = synth::generate_dataset(grid, data.value("frames_per_cell", 40),
                                                  data.at("out_dir").get<std::string>(),
                                                  data.value("seed", std::uint64_t{7}), opts);
    std::cout << "wrote " << manifest.records.size() << " frames under " << manifest.dir << "\n"
              << "manifest: " << (fs::path(manifest.dir) / synth::kManifestCsvName).string()
              << "\n";
    (void)run_dir;
    return 0;
}

int cmd_preprocess(const json& config, const fs::path& run_dir) {
    const synth::Manifest manifest = load_manifest(config);
    const json pre = config.value("preprocess", json::object());
    const int kernel = pre.value("median_kernel", 5);
    const double threshold = json_num(pre, "threshold_c", vision::kDefaultThresholdCelsius);
    const double sigma = json_num(pre, "outlier_sigma", 3.0);

    csv::Table measurements;
    measurements.header = {"frame_id", "power_w", "velocity_mm_s", "measured_length_px",
                           "measured_height_px", "mask_area_px"};
    std::map<vision::DoeCellKey, std::vector<vision::CellSample>> cells;
    for (const auto& rec : manifest.records) {
        const Image img = io::read_png_gray(manifest.resolve(rec.off_axis_path));
        vision::ThermalFrame frame(img.rows(), img.cols());
        for (Eigen::Index y = 0; y < img.rows(); ++y) {
            for (Eigen::Index x = 0; x < img.cols(); ++x) {
                frame(y, x) = std::round(img(y, x) * 255.0) * vision::kCelsiusPerGray;
            }
        }
        const auto mask = vision::threshold_mask(vision::median_filter(frame, kernel), threshold);
        const auto meas = vision::measure_lh(mask);
        cells[{rec.power_w, rec.velocity_mm_s}].push_back({meas.length_px, meas.height_px});
        measurements.rows.push_back({rec.frame_id, std::to_string(rec.power_w),
                                     std::to_string(rec.velocity_mm_s),
                                     std::to_string(meas.length_px),
                                     std::to_string(meas.height_px),
                                     std::to_string(meas.mask_area_px)});
    }
    csv::write_file((run_dir / "metrics" / "measurements.csv").string(), measurements);

    const auto table = vision::aggregate_doe(cells, sigma);
    csv::Table agg;
    agg.header = {"power_w", "velocity_mm_s", "mean_length_px", "mean_height_px", "n_kept",
                  "n_removed"};
    for (const auto& [key, stats] : table) {
        agg.rows.push_back({std::to_string(key.power_w), std::to_string(key.velocity_mm_s),
                            stats.missing ? "missing" : std::to_string(stats.mean_length_px),
                            stats.missing ? "missing" : std::to_string(stats.mean_height_px),
                            std::to_string(stats.n_kept), std::to_string(stats.n_removed)});
    }
    csv::write_file((run_dir / "metrics" / "doe_aggregate.csv").string(), agg);
    std::cout << "preprocessed " << manifest.records.size() << " frames into "
              << (run_dir / "metrics").string() << "\n";
    return 0;
}

int cmd_train(const json& config, const fs::path& run_dir) {
    const train::TrainConfig cfg =
        train::train_config_from_json(require_section(config, "train"));
    const synth::Manifest manifest = load_manifest(config);

    train::Trainer trainer(cfg, manifest);

    csv::Table metrics;
    metrics.header = {"epoch",      "loss_cr_p", "loss_cr_v", "loss_reg_l",
                      "loss_reg_h", "loss_total", "lr"};
    std::ofstream log(run_dir / "metrics" / "train_log.jsonl");
    const auto history = trainer.train([&](const train::EpochMetrics& m) {
        char row[256];
        std::snprintf(row, sizeof(row), "%.12g", m.loss_total);
        metrics.rows.push_back({std::to_string(m.epoch), std::to_string(m.loss_cr_p),
                                std::to_string(m.loss_cr_v), std::to_string(m.loss_reg_l),
                                std::to_string(m.loss_reg_h), row, std::to_string(m.lr)});
        const json line = {{"epoch", m.epoch},
                           {"loss_cr_p", m.loss_cr_p},
                           {"loss_cr_v", m.loss_cr_v},
                           {"loss_reg_l", m.loss_reg_l},
                           {"loss_reg_h", m.loss_reg_h},
                           {"loss_total", m.loss_total},
                           {"lr", m.lr},
                           {"wall_seconds", m.wall_seconds},
                           {"batches", m.batches},
                           {"skipped_batches", m.skipped_batches}};
        log << line.dump() << '\n';
        std::cout << "epoch " << m.epoch << " loss " << m.loss_total << "\n";
    });
    csv::write_file((run_dir / "metrics" / "train_metrics.csv").string(), metrics);

    json meta = train::train_config_to_json(cfg);
    meta["final_loss"] = history.back().loss_total;
    meta["initial_loss"] = history.front().loss_total;
    const std::string ckpt = (run_dir / "checkpoints" / "model.ckpt").string();
    model::save_checkpoint(ckpt, trainer.model(), manifest.norm, meta);
    std::cout << "checkpoint: " << ckpt << "\n";
    return 0;
}

struct LoadedRun {
    model::LoadedCheckpoint ckpt;
    train::TrainConfig cfg;
    synth::Manifest manifest;
    std::unique_ptr<train::FrameDataset> dataset;
};

LoadedRun load_run(const json& config, const char* section_name) {
    const json& section = require_section(config, section_name);
    if (!section.contains("checkpoint")) {
        throw CliError(std::string(section_name) + ".checkpoint is required");
    }
    LoadedRun run;
    run.ckpt = model::load_checkpoint(section.at("checkpoint").get<std::string>());
    run.cfg = train::train_config_from_json(run.ckpt.metadata);
    run.manifest = load_manifest(config);
    run.dataset = std::make_unique<train::FrameDataset>(
        run.manifest, run.ckpt.config.image_size, run.cfg.seed, run.cfg.val_fraction,
        run.cfg.test_fraction);
    return run;
}

void write_scatter_csv(const fs::path& path, const std::vector<train::ScatterPoint>& points) {
    csv::Table table;
    table.header = {"frame_id", "true_length_px", "pred_length_px", "true_height_px",
                    "pred_height_px"};
    for (const auto& p : points) {
        table.rows.push_back({p.frame_id, std::to_string(p.true_length_px),
                              std::to_string(p.pred_length_px), std::to_string(p.true_height_px),
                              std::to_string(p.pred_height_px)});
    }
    csv::write_file(path.string(), table);
}

int cmd_eval(const json& config, const fs::path& run_dir) {
    LoadedRun run = load_run(config, "eval");
    const std::string setting = config.at("eval").value("setting", std::string("both"));

    csv::Table table;
    table.header = {"setting", "mse", "mse_length", "mse_height", "samples"};
    auto add_row = [&](train::EvalSetting s, const char* name) {
        const auto rep = train::evaluate(*run.ckpt.model, *run.dataset, train::Split::test, s);
        table.rows.push_back({name, std::to_string(rep.mse), std::to_string(rep.mse_l),
                              std::to_string(rep.mse_h), std::to_string(rep.samples)});
        write_scatter_csv(run_dir / "metrics" / (std::string("predictions_") + name + ".csv"),
                          train::predict_scatter(*run.ckpt.model, *run.dataset,
                                                 train::Split::test, s));
    };
    if (setting == "multimodal" || setting == "both") {
        add_row(train::EvalSetting::multimodal, "multimodal");
    }
    if (setting == "unimodal_on_axis" || setting == "both") {
        add_row(train::EvalSetting::unimodal_on_axis, "unimodal_on_axis");
    }
    if (table.rows.empty()) throw CliError("eval.setting not recognized: " + setting);
    csv::write_file((run_dir / "metrics" / "eval_report.csv").string(), table);
    std::cout << "evaluation written to " << (run_dir / "metrics" / "eval_report.csv").string()
              << "\n";
    return 0;
}

// Held-out embeddings (validation + test) of one modality.
train::EmbeddingDump heldout_embeddings(const model::JemaModel& model,
                                        const train::FrameDataset& dataset, Modality modality) {
    const auto val = train::collect_embeddings(model, dataset, train::Split::val, modality);
    const auto test = train::collect_embeddings(model, dataset, train::Split::test, modality);
    train::EmbeddingDump dump;
    const auto vstack = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
        Eigen::MatrixXd out(a.rows() + b.rows(), a.cols());
        out << a, b;
        return out;
    };
    const auto cat = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        Eigen::VectorXd out(a.size() + b.size());
        out << a, b;
        return out;
    };
    dump.s_p = vstack(val.s_p, test.s_p);
    dump.s_v = vstack(val.s_v, test.s_v);
    dump.u_p = cat(val.u_p, test.u_p);
    dump.u_v = cat(val.u_v, test.u_v);
    dump.y_l = cat(val.y_l, test.y_l);
    dump.y_h = cat(val.y_h, test.y_h);
    dump.cells = val.cells;
    dump.cells.insert(dump.cells.end(), test.cells.begin(), test.cells.end());
    dump.frame_ids = val.frame_ids;
    dump.frame_ids.insert(dump.frame_ids.end(), test.frame_ids.begin(), test.frame_ids.end());
    return dump;
}

int cmd_probe(const json& config, const fs::path& run_dir) {
    LoadedRun run = load_run(config, "probe");
    const json& section = config.at("probe");
    const std::uint64_t tsne_seed = section.value("tsne_seed", run.cfg.seed);

    csv::Table probes;
    probes.header = {"modality", "embedding", "target", "r2", "intercept", "pseudoinverse"};
    csv::Table importances;
    importances.header = {"modality", "target", "component", "weight"};

    for (Modality modality : {Modality::on_axis, Modality::off_axis}) {
        const auto dump = heldout_embeddings(*run.ckpt.model, *run.dataset, modality);
        const std::vector<std::pair<std::string, Eigen::VectorXd>> targets = {
            {"power", dump.u_p}, {"velocity", dump.u_v}, {"length", dump.y_l},
            {"height", dump.y_h}};

        // Raw-embedding probes: power head and velocity head separately.
        // Ordinary least squares needs more samples than features; small
        // held-out sets fall back to variance-95 PCA scores.
        for (const auto& [emb_name, emb] :
             {std::pair<std::string, const Eigen::MatrixXd*>{"s_p", &dump.s_p},
              std::pair<std::string, const Eigen::MatrixXd*>{"s_v", &dump.s_v}}) {
            Eigen::MatrixXd features = *emb;
            std::string feature_name = emb_name;
            if (features.rows() <= features.cols()) {
                const auto reduced = analysis::pca_fit(*emb, analysis::PcaMode::variance_95);
                features = reduced.project(*emb);
                feature_name += "_pca";
            }
            for (const auto& [target_name, target] : targets) {
                const auto probe = analysis::linear_probe(features, target);
                probes.rows.push_back({to_string(modality), feature_name, target_name,
                                       std::to_string(probe.r2), std::to_string(probe.intercept),
                                       probe.used_pseudoinverse ? "1" : "0"});
            }
        }

        // Fused-embedding PCA: 2-component scatter plus variance-95
        // component importances.
        Eigen::MatrixXd fused(dump.s_p.rows(), dump.s_p.cols() + dump.s_v.cols());
        fused << dump.s_p, dump.s_v;
        const auto pca2 = analysis::pca_fit(fused, analysis::PcaMode::two_components);
        const Eigen::MatrixXd scores2 = pca2.project(fused);
        csv::Table scatter;
        scatter.header = {"frame_id", "pc1", "pc2", "u_p", "u_v", "y_l", "y_h"};
        for (int i = 0; i < scores2.rows(); ++i) {
            scatter.rows.push_back({dump.frame_ids[i], std::to_string(scores2(i, 0)),
                                    std::to_string(scores2(i, 1)), std::to_string(dump.u_p(i)),
                                    std::to_string(dump.u_v(i)), std::to_string(dump.y_l(i)),
                                    std::to_string(dump.y_h(i))});
        }
        csv::write_file(
            (run_dir / "metrics" / (std::string("pca_scatter_") + to_string(modality) + ".csv"))
                .string(),
            scatter);

        const auto pca95 = analysis::pca_fit(fused, analysis::PcaMode::variance_95);
        const Eigen::MatrixXd scores95 = pca95.project(fused);
        for (const auto& [target_name, target] : targets) {
            const auto imp = analysis::component_importance(scores95, target, target_name);
            for (int c = 0; c < imp.weight.size(); ++c) {
                importances.rows.push_back({to_string(modality), target_name,
                                            std::to_string(c + 1),
                                            std::to_string(imp.weight(c))});
            }
        }

        if (fused.rows() >= 10) {
            const Eigen::MatrixXd coords = analysis::tsne_embed(fused, tsne_seed);
            csv::Table tsne;
            tsne.header = {"frame_id", "dim1", "dim2", "u_p", "u_v"};
            for (int i = 0; i < coords.rows(); ++i) {
                tsne.rows.push_back({dump.frame_ids[i], std::to_string(coords(i, 0)),
                                     std::to_string(coords(i, 1)), std::to_string(dump.u_p(i)),
                                     std::to_string(dump.u_v(i))});
            }
            csv::write_file(
                (run_dir / "metrics" / (std::string("tsne_") + to_string(modality) + ".csv"))
                    .string(),
                tsne);
        } else {
            std::cout << "skipping 2-d neighbor embedding for " << to_string(modality)
                      << ": held-out split has fewer than 10 samples\n";
        }
    }
    csv::write_file((run_dir / "metrics" / "probes.csv").string(), probes);
    csv::write_file((run_dir / "metrics" / "component_importance.csv").string(), importances);
    std::cout << "probe artifacts in " << (run_dir / "metrics").string() << "\n";
    return 0;
}

int cmd_attn(const json& config, const fs::path& run_dir) {
    LoadedRun run = load_run(config, "attn");
    const json& section = config.at("attn");
    const int layer = section.value("layer", -1);
    const double scale_s = json_num(section, "scale_s", 1.0);
    const int count = section.value("count", 8);
    const std::string reduce_name = section.value("head_reduce", std::string("mean"));
    const auto reduce =
        reduce_name == "max" ? analysis::HeadReduce::max : analysis::HeadReduce::mean;

    const auto& test_idx = run.dataset->indices(train::Split::test);
    const int n = std::min<int>(count, static_cast<int>(test_idx.size()));
    for (int i = 0; i < n; ++i) {
        const int idx = test_idx[i];
        for (Modality modality : {Modality::on_axis, Modality::off_axis}) {
            const Image& img = run.dataset->input(idx, modality);
            const auto attn = run.ckpt.model->extract_attention(layer, img, modality, scale_s);
            const auto overlay = analysis::attention_overlay(img, attn, reduce);
            const std::string stem =
                run.dataset->record(idx).frame_id + "_" + to_string(modality);
            io::write_png_gray((run_dir / "figures" / (stem + "_input.png")).string(), img);
            io::write_png_rgb((run_dir / "figures" / (stem + "_attention.png")).string(),
                              overlay.blended);
        }
    }
    std::cout << "attention maps for " << n << " frames in " << (run_dir / "figures").string()
              << "\n";
    return 0;
}

// Figures rendered out of previously emitted CSVs.
void render_report_figures(const json& section, const fs::path& run_dir) {
    if (section.contains("predictions_csv")) {
        const auto table = csv::read_file(section.at("predictions_csv").get<std::string>());
        viz::Series length_pts, height_pts;
        length_pts.color = {31, 119, 180};
        height_pts.color = {214, 89, 40};
        for (const auto& row : table.rows) {
            length_pts.x.push_back(std::stod(row[1]));
            length_pts.y.push_back(std::stod(row[2]));
            height_pts.x.push_back(std::stod(row[3]));
            height_pts.y.push_back(std::stod(row[4]));
        }
        viz::PlotSpec spec;
        spec.diagonal = true;
        io::write_png_rgb((run_dir / "figures" / "pred_vs_true.png").string(),
                          viz::render_plot({length_pts, height_pts}, spec));
    }
    if (section.contains("doe_aggregate_csv")) {
        const auto table = csv::read_file(section.at("doe_aggregate_csv").get<std::string>());
        // Mean melt-pool length against power, one polyline per velocity.
        std::map<double, viz::Series> by_velocity;
        int shade = 0;
        for (const auto& row : table.rows) {
            if (row[2] == "missing") continue;
            auto& series = by_velocity[std::stod(row[1])];
            series.connect = true;
            series.x.push_back(std::stod(row[0]));
            series.y.push_back(std::stod(row[2]));
        }
        std::vector<viz::Series> all;
        for (auto& [v, series] : by_velocity) {
            const std::uint8_t tone = static_cast<std::uint8_t>(40 + 50 * (shade++ % 5));
            series.color = {tone, 90, static_cast<std::uint8_t>(200 - tone / 2)};
            all.push_back(series);
        }
        io::write_png_rgb((run_dir / "figures" / "doe_means.png").string(),
                          viz::render_plot(all));
    }
    if (section.contains("pca_scatter_csv")) {
        const auto table = csv::read_file(section.at("pca_scatter_csv").get<std::string>());
        viz::ColoredSeries by_power, by_velocity;
        for (const auto& row : table.rows) {
            by_power.x.push_back(std::stod(row[1]));
            by_power.y.push_back(std::stod(row[2]));
            by_power.value.push_back(std::stod(row[3]));
            by_velocity.x.push_back(std::stod(row[1]));
            by_velocity.y.push_back(std::stod(row[2]));
            by_velocity.value.push_back(std::stod(row[4]));
        }
        io::write_png_rgb((run_dir / "figures" / "pca_by_power.png").string(),
                          viz::render_colored_scatter(by_power));
        io::write_png_rgb((run_dir / "figures" / "pca_by_velocity.png").string(),
                          viz::render_colored_scatter(by_velocity));
    }
    if (section.contains("importance_csv")) {
        const auto table = csv::read_file(section.at("importance_csv").get<std::string>());
        std::map<std::string, std::vector<double>> per_target;  // on-axis rows only
        for (const auto& row : table.rows) {
            if (row[0] != "on_axis") continue;
            per_target[row[1]].push_back(std::stod(row[3]));
        }
        for (const auto& [target, weights] : per_target) {
            io::write_png_rgb(
                (run_dir / "figures" / ("importance_" + target + ".png")).string(),
                viz::render_bars(weights));
        }
    }
}

int cmd_report(const json& config, const fs::path& run_dir) {
    const json section = config.value("report", json::object());

    if (section.contains("mse_table")) {
        // External per-loss MSE pairs (columns: loss,mse_multi,mse_uni).
        const auto table = csv::read_file(section.at("mse_table").get<std::string>());
        std::map<train::LossKind, train::EvalPair> reports;
        for (const auto& row : table.rows) {
            train::LossKind kind;
            bool found = false;
            for (train::LossKind k :
                 {train::LossKind::reg, train::LossKind::supcon, train::LossKind::rnc,
                  train::LossKind::jema_cosine, train::LossKind::jema_l2,
                  train::LossKind::jema_l1}) {
                if (row[0] == train::table_label(k) || row[0] == train::to_string(k)) {
                    kind = k;
                    found = true;
                    break;
                }
            }
            if (!found) throw CliError("unknown loss label in mse_table: " + row[0]);
            train::EvalPair pair;
            pair.mse_multi = std::stod(row[1]);
            pair.mse_uni = std::stod(row[2]);
            reports[kind] = pair;
        }
        const auto rows = train::build_report_table(reports);
        std::ofstream csv_out(run_dir / "metrics" / "results_table.csv");
        csv_out << train::report_table_csv(rows);
        std::ofstream txt_out(run_dir / "metrics" / "results_table.txt");
        txt_out << train::report_table_text(rows);
        std::cout << train::report_table_text(rows);
    }

    render_report_figures(section, run_dir);
    std::cout << "report artifacts in " << run_dir.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"melt-pool co-learning toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    const std::vector<std::pair<std::string, int (*)(const json&, const fs::path&)>> verbs = {
        {"gen-data", cmd_gen_data}, {"preprocess", cmd_preprocess}, {"train", cmd_train},
        {"eval", cmd_eval},         {"probe", cmd_probe},           {"attn", cmd_attn},
        {"report", cmd_report}};

    for (const auto& [name, fn] : verbs) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("overrides", overrides, "key=value config overrides");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: usage: " << e.what() << "\n";
        std::cerr << app.help();
        return 2;
    }

    const std::string verb = app.get_subcommands().front()->get_name();
    try {
        json config = load_config(config_path);
        for (const std::string& assignment : overrides) apply_override(config, assignment);

        const fs::path run_dir = make_run_dir(config);
        write_snapshot(run_dir, config);
        std::cout << "run dir: " << run_dir.string() << "\n";

        for (const auto& [name, fn] : verbs) {
            if (name == verb) return fn(config, run_dir);
        }
        std::cerr << "error: unknown verb: " << verb << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << verb << ": " << e.what() << "\n";
        return 1;
    }
}
