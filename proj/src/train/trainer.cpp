#include "jema/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <set>
#include <stdexcept>

#include "jema/train/adam.hpp"

namespace jema::train {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using model::ModalityActivations;

const char* to_string(LossKind kind) {
    switch (kind) {
        case LossKind::reg: return "reg";
        case LossKind::supcon: return "supcon";
        case LossKind::rnc: return "rnc";
        case LossKind::jema_cosine: return "jema_cosine";
        case LossKind::jema_l2: return "jema_l2";
        case LossKind::jema_l1: return "jema_l1";
    }
    return "?";
}

std::optional<LossKind> loss_kind_from_string(const std::string& s) {
    for (LossKind k : {LossKind::reg, LossKind::supcon, LossKind::rnc, LossKind::jema_cosine,
                       LossKind::jema_l2, LossKind::jema_l1}) {
        if (s == to_string(k)) return k;
    }
    return std::nullopt;
}

const char* table_label(LossKind kind) {
    switch (kind) {
        case LossKind::reg: return "Reg";
        case LossKind::supcon: return "SupCon";
        case LossKind::rnc: return "RnC";
        case LossKind::jema_cosine: return "Cosine";
        case LossKind::jema_l2: return "L2-distance";
        case LossKind::jema_l1: return "L1-distance";
    }
    return "?";
}

std::optional<losses::SimilarityKind> similarity_of(LossKind kind) {
    switch (kind) {
        case LossKind::jema_cosine: return losses::SimilarityKind::cosine;
        case LossKind::jema_l2: return losses::SimilarityKind::l2;
        case LossKind::jema_l1: return losses::SimilarityKind::l1;
        default: return std::nullopt;
    }
}

void TrainConfig::validate() const {
    weights.validate();
    if (batch_size < 2) throw std::invalid_argument("batch_size must be >= 2 for pairwise losses");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (lr <= 0.0) throw std::invalid_argument("learning rate must be positive");
    if (tau < 0.0) throw std::invalid_argument("temperature must be positive (or 0 for default)");
    if (val_fraction < 0.0 || test_fraction <= 0.0 || val_fraction + test_fraction >= 1.0) {
        throw std::invalid_argument("invalid split fractions");
    }
}

nlohmann::json train_config_to_json(const TrainConfig& cfg) {
    return nlohmann::json{{"loss_kind", to_string(cfg.loss_kind)},
                          {"alpha", cfg.weights.alpha},
                          {"beta", cfg.weights.beta},
                          {"tau", cfg.tau},
                          {"epochs", cfg.epochs},
                          {"batch_size", cfg.batch_size},
                          {"lr", cfg.lr},
                          {"seed", cfg.seed},
                          {"preset", cfg.preset == ModelPreset::paper ? "paper" : "desk"},
                          {"augment", cfg.augment},
                          {"val_fraction", cfg.val_fraction},
                          {"test_fraction", cfg.test_fraction}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig cfg;
    if (j.contains("loss_kind")) {
        const auto kind = loss_kind_from_string(j.at("loss_kind").get<std::string>());
        if (!kind) {
            throw std::invalid_argument("unknown loss_kind: " +
                                        j.at("loss_kind").get<std::string>());
        }
        cfg.loss_kind = *kind;
    }
    cfg.weights.alpha = j.value("alpha", cfg.weights.alpha);
    cfg.weights.beta = j.value("beta", cfg.weights.beta);
    cfg.tau = j.value("tau", cfg.tau);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.lr = j.value("lr", cfg.lr);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("preset")) {
        const std::string p = j.at("preset").get<std::string>();
        if (p == "paper") {
            cfg.preset = ModelPreset::paper;
        } else if (p == "desk") {
            cfg.preset = ModelPreset::desk;
        } else {
            throw std::invalid_argument("unknown preset: " + p);
        }
    }
    cfg.augment = j.value("augment", cfg.augment);
    cfg.val_fraction = j.value("val_fraction", cfg.val_fraction);
    cfg.test_fraction = j.value("test_fraction", cfg.test_fraction);
    cfg.validate();
    return cfg;
}

Trainer::Trainer(const TrainConfig& cfg, const synth::Manifest& manifest)
    : cfg_(cfg),
      manifest_(manifest),
      dataset_(manifest, cfg.encoder().image_size, cfg.seed, cfg.val_fraction, cfg.test_fraction),
      model_(cfg.encoder(), cfg.seed) {
    cfg_.validate();
    optimizer_ = std::make_unique<Adam>(model_.parameters(), cfg_.lr);
}

Trainer::~Trainer() = default;

std::optional<LossReport> Trainer::run_batch(const std::vector<int>& frame_indices, bool update,
                                             Rng* aug_rng) {
    const int b = static_cast<int>(frame_indices.size());
    if (b < 2) throw std::invalid_argument("batches need at least 2 frames");
    const int e = model_.embed_dim();

    std::vector<Image> on(b), off(b);
    VectorXd u_p(2 * b), u_v(2 * b), y_l(b), y_h(b);
    std::vector<int> cells(2 * b);
    for (int i = 0; i < b; ++i) {
        const int idx = frame_indices[i];
        if (aug_rng) {
            on[i] = dataset_.augmented_input(idx, Modality::on_axis, *aug_rng);
            off[i] = dataset_.augmented_input(idx, Modality::off_axis, *aug_rng);
        } else {
            on[i] = dataset_.input(idx, Modality::on_axis);
            off[i] = dataset_.input(idx, Modality::off_axis);
        }
        const auto& lab = dataset_.labels(idx);
        u_p(i) = u_p(b + i) = lab.u_p;
        u_v(i) = u_v(b + i) = lab.u_v;
        y_l(i) = lab.y_l;
        y_h(i) = lab.y_h;
        cells[i] = cells[b + i] = dataset_.cell(idx);
    }

    if (cfg_.loss_kind == LossKind::supcon &&
        std::set<int>(cells.begin(), cells.end()).size() < 2) {
        if (!warned_single_cell_) {
            std::cerr << "warning: skipping batch with a single distinct DOE cell "
                         "(no contrastive structure for supcon)\n";
            warned_single_cell_ = true;
        }
        return std::nullopt;
    }

    const ModalityActivations acts_on = model_.forward_modality(on, Modality::on_axis, update);
    const ModalityActivations acts_off = model_.forward_modality(off, Modality::off_axis, update);

    // Cross-modal stacks: both modalities' embeddings with duplicated
    // metadata, so same-parameter pairs across views get pulled together.
    LossReport report;
    MatrixXd grad_p, grad_v;
    MatrixXd* gp = update ? &grad_p : nullptr;
    MatrixXd* gv = update ? &grad_v : nullptr;
    const double alpha = cfg_.weights.alpha;
    const double beta = cfg_.weights.beta;

    if (alpha > 0.0 && cfg_.loss_kind != LossKind::reg) {
        MatrixXd stack_p(2 * b, e), stack_v(2 * b, e);
        stack_p << acts_on.s_p, acts_off.s_p;
        stack_v << acts_on.s_v, acts_off.s_v;
        switch (cfg_.loss_kind) {
            case LossKind::supcon:
                report.cr_p = losses::supcon_loss(stack_p, cells, cfg_.resolved_tau(), gp);
                report.cr_v = losses::supcon_loss(stack_v, cells, cfg_.resolved_tau(), gv);
                break;
            case LossKind::rnc:
                report.cr_p = losses::rnc_loss(stack_p, u_p, cfg_.resolved_tau(), gp);
                report.cr_v = losses::rnc_loss(stack_v, u_v, cfg_.resolved_tau(), gv);
                break;
            default: {
                const auto kind = *similarity_of(cfg_.loss_kind);
                report.cr_p = losses::contrastive_regression_loss(stack_p, u_p, kind, gp);
                report.cr_v = losses::contrastive_regression_loss(stack_v, u_v, kind, gv);
                break;
            }
        }
    }

    const MatrixXd fused_joint = 0.5 * (acts_on.fused + acts_off.fused);
    nn::LinearCache predict_cache;
    const MatrixXd pred = model_.predict(fused_joint, update ? &predict_cache : nullptr);
    VectorXd grad_l, grad_h;
    report.reg_l = losses::regression_mse(y_l, pred.col(0), update ? &grad_l : nullptr);
    report.reg_h = losses::regression_mse(y_h, pred.col(1), update ? &grad_h : nullptr);
    report.total = losses::combined_loss(report.cr_p, report.cr_v, report.reg_l, report.reg_h,
                                         cfg_.weights);

    if (update) {
        model_.zero_grad();
        MatrixXd d_fused;
        if (beta > 0.0) {
            MatrixXd d_pred(b, 2);
            d_pred.col(0) = beta * grad_l;
            d_pred.col(1) = beta * grad_h;
            d_fused = 0.5 * model_.predict_backward(d_pred, predict_cache);
        }
        MatrixXd d_sp_on, d_sv_on, d_sp_off, d_sv_off;
        if (grad_p.size()) {
            d_sp_on = alpha * grad_p.topRows(b);
            d_sp_off = alpha * grad_p.bottomRows(b);
            d_sv_on = alpha * grad_v.topRows(b);
            d_sv_off = alpha * grad_v.bottomRows(b);
        }
        model_.backward_modality(acts_on, Modality::on_axis, d_sp_on, d_sv_on, d_fused);
        model_.backward_modality(acts_off, Modality::off_axis, d_sp_off, d_sv_off, d_fused);
        optimizer_->step();
    }
    return report;
}

std::vector<EpochMetrics> Trainer::train(const EpochCallback& on_epoch) {
    const std::vector<int>& train_idx = dataset_.indices(Split::train);
    if (train_idx.size() < 2) throw std::runtime_error("training split is empty");

    std::vector<EpochMetrics> history;
    auto run_epoch = [&](int epoch, bool update) {
        const auto start = std::chrono::steady_clock::now();
        std::vector<int> order = train_idx;
        if (update) {
            Rng shuffle_rng(
                Rng::derive_seed(cfg_.seed, "epoch" + std::to_string(epoch)));
            shuffle_rng.shuffle(order);
        }
        Rng aug_rng(Rng::derive_seed(cfg_.seed, "aug" + std::to_string(epoch)));

        EpochMetrics m;
        m.epoch = epoch;
        m.lr = cfg_.lr;
        for (std::size_t pos = 0; pos + 1 < order.size(); pos += cfg_.batch_size) {
            const std::size_t end = std::min(order.size(), pos + cfg_.batch_size);
            if (end - pos < 2) break;
            const std::vector<int> chunk(order.begin() + pos, order.begin() + end);
            const auto rep =
                run_batch(chunk, update, (update && cfg_.augment) ? &aug_rng : nullptr);
            if (!rep) {
                ++m.skipped_batches;
                continue;
            }
            m.loss_cr_p += rep->cr_p;
            m.loss_cr_v += rep->cr_v;
            m.loss_reg_l += rep->reg_l;
            m.loss_reg_h += rep->reg_h;
            m.loss_total += rep->total;
            ++m.batches;
        }
        if (m.batches > 0) {
            m.loss_cr_p /= m.batches;
            m.loss_cr_v /= m.batches;
            m.loss_reg_l /= m.batches;
            m.loss_reg_h /= m.batches;
            m.loss_total /= m.batches;
        }
        m.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        history.push_back(m);
        if (on_epoch) on_epoch(m);
    };

    run_epoch(0, false);  // objective at initialization
    for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) run_epoch(epoch, true);
    return history;
}

namespace {

struct Accumulator {
    double se_l = 0.0, se_h = 0.0;
    int n = 0;
};

template <typename PredFn>
Accumulator accumulate_errors(const FrameDataset& dataset, const std::vector<int>& indices,
                              PredFn&& fn) {
    Accumulator acc;
    for (int idx : indices) {
        const auto [pl, ph] = fn(idx);
        const auto& lab = dataset.labels(idx);
        acc.se_l += (pl - lab.y_l) * (pl - lab.y_l);
        acc.se_h += (ph - lab.y_h) * (ph - lab.y_h);
        ++acc.n;
    }
    return acc;
}

}  // namespace

EvalReport evaluate(const model::JemaModel& model, const FrameDataset& dataset, Split split,
                    EvalSetting setting) {
    const auto& indices = dataset.indices(split);
    if (indices.empty()) throw std::runtime_error("evaluation split is empty");

    const Accumulator acc = accumulate_errors(dataset, indices, [&](int idx) {
        if (setting == EvalSetting::multimodal) {
            const auto res = model.forward_multimodal(dataset.input(idx, Modality::on_axis),
                                                      dataset.input(idx, Modality::off_axis));
            return std::pair<double, double>{res.pred.length, res.pred.height};
        }
        const auto res =
            model.forward_unimodal(dataset.input(idx, Modality::on_axis), Modality::on_axis);
        return std::pair<double, double>{res.pred.length, res.pred.height};
    });

    EvalReport report;
    report.setting = setting;
    report.samples = acc.n;
    report.mse_l = acc.se_l / acc.n;
    report.mse_h = acc.se_h / acc.n;
    report.mse = 0.5 * (report.mse_l + report.mse_h);
    return report;
}

EvalPair evaluate_both(const model::JemaModel& model, const FrameDataset& dataset, Split split) {
    const EvalReport multi = evaluate(model, dataset, split, EvalSetting::multimodal);
    const EvalReport uni = evaluate(model, dataset, split, EvalSetting::unimodal_on_axis);
    EvalPair pair;
    pair.mse_multi = multi.mse;
    pair.mse_uni = uni.mse;
    pair.mse_l_multi = multi.mse_l;
    pair.mse_h_multi = multi.mse_h;
    pair.mse_l_uni = uni.mse_l;
    pair.mse_h_uni = uni.mse_h;
    return pair;
}

std::vector<ScatterPoint> predict_scatter(const model::JemaModel& model,
                                          const FrameDataset& dataset, Split split,
                                          EvalSetting setting) {
    const auto& norm = dataset.manifest().norm;
    std::vector<ScatterPoint> points;
    for (int idx : dataset.indices(split)) {
        model::Predictions pred;
        if (setting == EvalSetting::multimodal) {
            pred = model
                       .forward_multimodal(dataset.input(idx, Modality::on_axis),
                                           dataset.input(idx, Modality::off_axis))
                       .pred;
        } else {
            pred = model.forward_unimodal(dataset.input(idx, Modality::on_axis), Modality::on_axis)
                       .pred;
        }
        ScatterPoint p;
        p.frame_id = dataset.record(idx).frame_id;
        p.true_length_px = dataset.record(idx).length_px;
        p.true_height_px = dataset.record(idx).height_px;
        p.pred_length_px = synth::denormalize_length(pred.length, norm);
        p.pred_height_px = synth::denormalize_height(pred.height, norm);
        points.push_back(std::move(p));
    }
    return points;
}

EmbeddingDump collect_embeddings(const model::JemaModel& model, const FrameDataset& dataset,
                                 Split split, Modality modality) {
    const auto& indices = dataset.indices(split);
    const int n = static_cast<int>(indices.size());
    const int e = model.embed_dim();

    EmbeddingDump dump;
    dump.s_p.resize(n, e);
    dump.s_v.resize(n, e);
    dump.u_p.resize(n);
    dump.u_v.resize(n);
    dump.y_l.resize(n);
    dump.y_h.resize(n);
    for (int i = 0; i < n; ++i) {
        const int idx = indices[i];
        const auto pair = model.embed_heads(model.encode(dataset.input(idx, modality), modality),
                                            modality);
        dump.s_p.row(i) = pair.s_p;
        dump.s_v.row(i) = pair.s_v;
        const auto& lab = dataset.labels(idx);
        dump.u_p(i) = lab.u_p;
        dump.u_v(i) = lab.u_v;
        dump.y_l(i) = lab.y_l;
        dump.y_h(i) = lab.y_h;
        dump.cells.push_back(dataset.cell(idx));
        dump.frame_ids.push_back(dataset.record(idx).frame_id);
    }
    return dump;
}

double mean_cross_modal_distance(const model::JemaModel& model, const FrameDataset& dataset,
                                 Split split) {
    const auto& indices = dataset.indices(split);
    if (indices.empty()) throw std::runtime_error("split is empty");
    double total = 0.0;
    for (int idx : indices) {
        const auto on = model.embed_heads(
            model.encode(dataset.input(idx, Modality::on_axis), Modality::on_axis),
            Modality::on_axis);
        const auto off = model.embed_heads(
            model.encode(dataset.input(idx, Modality::off_axis), Modality::off_axis),
            Modality::off_axis);
        const double dist_p = 1.0 - on.s_p.dot(off.s_p);
        const double dist_v = 1.0 - on.s_v.dot(off.s_v);
        total += 0.5 * (dist_p + dist_v);
    }
    return total / static_cast<double>(indices.size());
}

}  // namespace jema::train
