#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jema/model/jema_model.hpp"
#include "jema/train/config.hpp"
#include "jema/train/dataset.hpp"

namespace jema::train {

struct EpochMetrics {
    int epoch = 0;  // 0 is the pre-training evaluation of the objective
    double loss_cr_p = 0.0;
    double loss_cr_v = 0.0;
    double loss_reg_l = 0.0;
    double loss_reg_h = 0.0;
    double loss_total = 0.0;
    double lr = 0.0;
    double wall_seconds = 0.0;
    int batches = 0;
    int skipped_batches = 0;
};

// Scalar loss terms for one batch.
struct LossReport {
    double cr_p = 0.0;
    double cr_v = 0.0;
    double reg_l = 0.0;
    double reg_h = 0.0;
    double total = 0.0;
};

enum class EvalSetting { multimodal, unimodal_on_axis };

struct EvalReport {
    double mse = 0.0;  // mean of the per-target MSEs on normalized targets
    double mse_l = 0.0;
    double mse_h = 0.0;
    int samples = 0;
    EvalSetting setting = EvalSetting::multimodal;
};

// Both settings evaluated from one checkpoint, as reported in the results
// table, plus variations filled in against the Reg multimodal baseline.
struct EvalPair {
    double mse_multi = 0.0;
    double mse_uni = 0.0;
    double mse_l_multi = 0.0, mse_h_multi = 0.0;
    double mse_l_uni = 0.0, mse_h_uni = 0.0;
};

struct ScatterPoint {
    std::string frame_id;
    double true_length_px = 0.0, pred_length_px = 0.0;
    double true_height_px = 0.0, pred_height_px = 0.0;
};

struct EmbeddingDump {
    Eigen::MatrixXd s_p;  // n x embed
    Eigen::MatrixXd s_v;
    Eigen::VectorXd u_p, u_v, y_l, y_h;
    std::vector<int> cells;
    std::vector<std::string> frame_ids;
};

class Trainer {
public:
    Trainer(const TrainConfig& cfg, const synth::Manifest& manifest);
    ~Trainer();

    // Runs the configured number of epochs. history[0] holds the objective
    // evaluated before any update; per-epoch rows follow. The callback, when
    // set, receives each row as it is produced.
    using EpochCallback = std::function<void(const EpochMetrics&)>;
    std::vector<EpochMetrics> train(const EpochCallback& on_epoch = {});

    model::JemaModel& model() { return model_; }
    FrameDataset& dataset() { return dataset_; }
    const TrainConfig& config() const { return cfg_; }

    // Per-batch objective + gradient wiring; exposed for the degeneration
    // and determinism tests. Empty result means the batch was skipped
    // (supcon with a single distinct DOE cell has no negative structure).
    std::optional<LossReport> run_batch(const std::vector<int>& frame_indices, bool update,
                                        Rng* aug_rng);

private:
    TrainConfig cfg_;
    synth::Manifest manifest_;
    FrameDataset dataset_;
    model::JemaModel model_;
    std::unique_ptr<class Adam> optimizer_;
    bool warned_single_cell_ = false;
};

// MSE of normalized melt-pool targets over a split.
EvalReport evaluate(const model::JemaModel& model, const FrameDataset& dataset, Split split,
                    EvalSetting setting);
EvalPair evaluate_both(const model::JemaModel& model, const FrameDataset& dataset, Split split);

// Per-sample (true, predicted) series in pixel units for scatter plots.
std::vector<ScatterPoint> predict_scatter(const model::JemaModel& model,
                                          const FrameDataset& dataset, Split split,
                                          EvalSetting setting);

// Frozen embeddings of one modality over a split.
EmbeddingDump collect_embeddings(const model::JemaModel& model, const FrameDataset& dataset,
                                 Split split, Modality modality);

// Mean un-normalized cosine distance (1 - dot) between the two modalities'
// embeddings of the same frame, averaged over both embedding spaces. Falls
// as cross-modal alignment improves.
double mean_cross_modal_distance(const model::JemaModel& model, const FrameDataset& dataset,
                                 Split split);

}  // namespace jema::train
