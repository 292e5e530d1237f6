#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "jema/model/checkpoint.hpp"
#include "jema/train/report.hpp"
#include "jema/train/trainer.hpp"

using namespace jema;
using namespace jema::train;
namespace fs = std::filesystem;

namespace {

// One small dataset shared by the training tests (2x2 grid, 6 frames/cell).
const synth::Manifest& shared_manifest() {
    static const synth::Manifest manifest = [] {
        const fs::path dir = fs::temp_directory_path() / "jema_trainer_data";
        fs::remove_all(dir);
        synth::DoeGrid grid{{4, 10}, {800, 2000}};
        return synth::generate_dataset(grid, 6, dir.string(), 123);
    }();
    return manifest;
}

TrainConfig small_config(LossKind kind) {
    TrainConfig cfg;
    cfg.loss_kind = kind;
    cfg.epochs = 2;
    cfg.batch_size = 8;
    cfg.lr = 1e-3;
    cfg.seed = 5;
    cfg.val_fraction = 0.15;
    cfg.test_fraction = 0.2;
    return cfg;
}

}  // namespace

// ---------------- variation percentages (published grid) ----------------

TEST(VariationPctTest, PublishedGridReproducedExactly) {
    const double baseline = 3.27e-4;
    EXPECT_EQ(variation_pct(baseline, 3.27e-4), 0);
    EXPECT_EQ(variation_pct(baseline, 4.22e-4), -29);
    EXPECT_EQ(variation_pct(baseline, 2.57e-4), 21);
    EXPECT_EQ(variation_pct(baseline, 3.44e-4), -5);
    EXPECT_EQ(variation_pct(baseline, 2.60e-4), 20);
    EXPECT_EQ(variation_pct(baseline, 3.93e-4), -20);
    EXPECT_EQ(variation_pct(baseline, 2.32e-4), 29);
    EXPECT_EQ(variation_pct(baseline, 3.39e-4), -4);
    EXPECT_EQ(variation_pct(baseline, 2.53e-4), 23);
    EXPECT_EQ(variation_pct(baseline, 3.63e-4), -11);
    EXPECT_EQ(variation_pct(baseline, 3.87e-4), -18);
    EXPECT_EQ(variation_pct(baseline, 4.85e-4), -48);
}

TEST(VariationPctTest, IdentityAndErrors) {
    EXPECT_EQ(variation_pct(0.5, 0.5), 0);
    EXPECT_EQ(variation_pct(1e-9, 1e-9), 0);
    EXPECT_THROW(variation_pct(0.0, 0.1), std::invalid_argument);
    EXPECT_THROW(variation_pct(-1.0, 0.1), std::invalid_argument);
}

// ---------------- results table ----------------

TEST(ReportTableTest, PublishedTableRowsAndVariations) {
    std::map<LossKind, EvalPair> reports;
    auto pair = [](double multi, double uni) {
        EvalPair p;
        p.mse_multi = multi;
        p.mse_uni = uni;
        return p;
    };
    reports[LossKind::reg] = pair(3.27e-4, 4.22e-4);
    reports[LossKind::supcon] = pair(2.57e-4, 3.44e-4);
    reports[LossKind::rnc] = pair(2.60e-4, 3.93e-4);
    reports[LossKind::jema_cosine] = pair(2.32e-4, 3.39e-4);
    reports[LossKind::jema_l2] = pair(2.53e-4, 3.63e-4);
    reports[LossKind::jema_l1] = pair(3.87e-4, 4.85e-4);

    const auto rows = build_report_table(reports);
    ASSERT_EQ(rows.size(), 6u);
    const long expect_multi[] = {0, 21, 20, 29, 23, -18};
    const long expect_uni[] = {-29, -5, -20, -4, -11, -48};
    const char* names[] = {"Reg", "SupCon", "RnC", "Cosine", "L2-distance", "L1-distance"};
    for (int i = 0; i < 6; ++i) {
        EXPECT_STREQ(table_label(rows[i].kind), names[i]);
        EXPECT_EQ(rows[i].var_multi, expect_multi[i]) << names[i];
        EXPECT_EQ(rows[i].var_uni, expect_uni[i]) << names[i];
    }
}

TEST(ReportTableTest, SingleRegRowIsValid) {
    std::map<LossKind, EvalPair> reports;
    EvalPair p;
    p.mse_multi = 3.27e-4;
    p.mse_uni = 4.22e-4;
    reports[LossKind::reg] = p;
    const auto rows = build_report_table(reports);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].var_multi, 0);
    EXPECT_EQ(rows[0].var_uni, -29);
}

TEST(ReportTableTest, MissingBaselineRejected) {
    std::map<LossKind, EvalPair> reports;
    reports[LossKind::supcon] = EvalPair{};
    EXPECT_THROW(build_report_table(reports), std::invalid_argument);
}

TEST(ReportTableTest, CsvHasFiveColumns) {
    std::map<LossKind, EvalPair> reports;
    EvalPair p;
    p.mse_multi = 3.27e-4;
    p.mse_uni = 4.22e-4;
    reports[LossKind::reg] = p;
    const std::string csv = report_table_csv(build_report_table(reports));

    std::istringstream lines(csv);
    std::string line;
    while (std::getline(lines, line)) {
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), 4) << line;
    }
    EXPECT_NE(csv.find("Reg,3.27,4.22,0,-29"), std::string::npos) << csv;
}

// ---------------- dataset and splits ----------------

TEST(DatasetTest, SplitIsDisjointCompleteAndStratified) {
    FrameDataset ds(shared_manifest(), 32, 99, 0.15, 0.2);
    const auto& train = ds.indices(Split::train);
    const auto& val = ds.indices(Split::val);
    const auto& test = ds.indices(Split::test);

    std::set<int> all(train.begin(), train.end());
    all.insert(val.begin(), val.end());
    all.insert(test.begin(), test.end());
    EXPECT_EQ(static_cast<int>(all.size()), ds.size());
    EXPECT_EQ(train.size() + val.size() + test.size(), static_cast<std::size_t>(ds.size()));

    // Every DOE cell shows up in train and test.
    std::set<int> train_cells, test_cells;
    for (int i : train) train_cells.insert(ds.cell(i));
    for (int i : test) test_cells.insert(ds.cell(i));
    EXPECT_EQ(static_cast<int>(train_cells.size()), ds.cell_count());
    EXPECT_EQ(static_cast<int>(test_cells.size()), ds.cell_count());
}

TEST(DatasetTest, SplitDeterministicUnderSeed) {
    FrameDataset a(shared_manifest(), 32, 42);
    FrameDataset b(shared_manifest(), 32, 42);
    EXPECT_EQ(a.indices(Split::test), b.indices(Split::test));

    FrameDataset c(shared_manifest(), 32, 43);
    EXPECT_NE(a.indices(Split::test), c.indices(Split::test));
}

TEST(DatasetTest, InputResizedAndCached) {
    FrameDataset ds(shared_manifest(), 32, 1);
    const Image& img = ds.input(0, Modality::on_axis);
    EXPECT_EQ(img.rows(), 32);
    EXPECT_EQ(img.cols(), 32);
    EXPECT_EQ(ds.file_reads(Modality::on_axis), 1);
    ds.input(0, Modality::on_axis);
    EXPECT_EQ(ds.file_reads(Modality::on_axis), 1);  // cached
}

// ---------------- evaluation ----------------

TEST(EvaluateTest, MatchesPerSampleOracle) {
    FrameDataset ds(shared_manifest(), 32, 11);
    model::JemaModel model(nn::EncoderConfig::desk(), 3);

    const EvalReport rep = evaluate(model, ds, Split::test, EvalSetting::multimodal);
    double se_l = 0.0, se_h = 0.0;
    for (int idx : ds.indices(Split::test)) {
        const auto res = model.forward_multimodal(ds.input(idx, Modality::on_axis),
                                                  ds.input(idx, Modality::off_axis));
        se_l += std::pow(res.pred.length - ds.labels(idx).y_l, 2);
        se_h += std::pow(res.pred.height - ds.labels(idx).y_h, 2);
    }
    const int n = static_cast<int>(ds.indices(Split::test).size());
    EXPECT_DOUBLE_EQ(rep.mse_l, se_l / n);
    EXPECT_DOUBLE_EQ(rep.mse_h, se_h / n);
    EXPECT_DOUBLE_EQ(rep.mse, 0.5 * (rep.mse_l + rep.mse_h));
    EXPECT_EQ(rep.samples, n);
}

TEST(EvaluateTest, RepeatedEvaluationIdentical) {
    FrameDataset ds(shared_manifest(), 32, 11);
    model::JemaModel model(nn::EncoderConfig::desk(), 3);
    const EvalReport a = evaluate(model, ds, Split::test, EvalSetting::unimodal_on_axis);
    const EvalReport b = evaluate(model, ds, Split::test, EvalSetting::unimodal_on_axis);
    EXPECT_EQ(a.mse, b.mse);
}

TEST(EvaluateTest, UnimodalNeverReadsOffAxisFiles) {
    FrameDataset ds(shared_manifest(), 32, 11);
    model::JemaModel model(nn::EncoderConfig::desk(), 3);
    evaluate(model, ds, Split::test, EvalSetting::unimodal_on_axis);
    EXPECT_EQ(ds.file_reads(Modality::off_axis), 0);
    EXPECT_GT(ds.file_reads(Modality::on_axis), 0);

    evaluate(model, ds, Split::test, EvalSetting::multimodal);
    EXPECT_GT(ds.file_reads(Modality::off_axis), 0);
}

TEST(PredictScatterTest, SeriesLengthAndDenormalization) {
    FrameDataset ds(shared_manifest(), 32, 11);
    model::JemaModel model(nn::EncoderConfig::desk(), 3);
    const auto points = predict_scatter(model, ds, Split::test, EvalSetting::multimodal);
    ASSERT_EQ(points.size(), ds.indices(Split::test).size());

    const auto& norm = ds.manifest().norm;
    const int idx = ds.indices(Split::test)[0];
    const auto res = model.forward_multimodal(ds.input(idx, Modality::on_axis),
                                              ds.input(idx, Modality::off_axis));
    EXPECT_DOUBLE_EQ(points[0].pred_length_px, res.pred.length * norm.l_max);
    EXPECT_DOUBLE_EQ(points[0].true_length_px, ds.record(idx).length_px);
}

// ---------------- training ----------------

TEST(TrainerTest, AlphaZeroMatchesRegTrajectoryExactly) {
    TrainConfig jema_cfg = small_config(LossKind::jema_cosine);
    jema_cfg.weights = {0.0, 1.0};
    TrainConfig reg_cfg = small_config(LossKind::reg);
    reg_cfg.weights = {0.0, 1.0};

    Trainer a(jema_cfg, shared_manifest());
    Trainer b(reg_cfg, shared_manifest());
    const auto ha = a.train();
    const auto hb = b.train();
    ASSERT_EQ(ha.size(), hb.size());
    for (std::size_t i = 0; i < ha.size(); ++i) {
        EXPECT_EQ(ha[i].loss_total, hb[i].loss_total) << "epoch " << i;  // bitwise equal
        EXPECT_EQ(ha[i].loss_reg_l, hb[i].loss_reg_l);
    }
}

TEST(TrainerTest, DeterministicHistoryUnderSeed) {
    const TrainConfig cfg = small_config(LossKind::jema_cosine);
    Trainer a(cfg, shared_manifest());
    Trainer b(cfg, shared_manifest());
    const auto ha = a.train();
    const auto hb = b.train();
    ASSERT_EQ(ha.size(), hb.size());
    for (std::size_t i = 0; i < ha.size(); ++i) {
        EXPECT_EQ(ha[i].loss_total, hb[i].loss_total);
    }
}

TEST(TrainerTest, ObjectiveDecreasesOnSmallRun) {
    TrainConfig cfg = small_config(LossKind::jema_cosine);
    cfg.epochs = 5;
    Trainer trainer(cfg, shared_manifest());
    const auto history = trainer.train();
    ASSERT_EQ(history.size(), 6u);  // init eval + 5 epochs
    EXPECT_LT(history.back().loss_total, history.front().loss_total);
}

TEST(TrainerTest, SupConSkipsSingleCellBatches) {
    // A batch whose frames all share one DOE cell has no negatives, so the
    // supcon objective skips it; a mixed batch goes through.
    TrainConfig cfg = small_config(LossKind::supcon);
    Trainer trainer(cfg, shared_manifest());
    FrameDataset& ds = trainer.dataset();

    std::vector<int> same_cell, other_cell;
    const int target_cell = ds.cell(0);
    for (int i = 0; i < ds.size(); ++i) {
        if (ds.cell(i) == target_cell && same_cell.size() < 4) {
            same_cell.push_back(i);
        } else if (ds.cell(i) != target_cell && other_cell.size() < 2) {
            other_cell.push_back(i);
        }
    }
    ASSERT_EQ(same_cell.size(), 4u);
    ASSERT_EQ(other_cell.size(), 2u);

    EXPECT_FALSE(trainer.run_batch(same_cell, false, nullptr).has_value());

    std::vector<int> mixed = {same_cell[0], same_cell[1], other_cell[0], other_cell[1]};
    EXPECT_TRUE(trainer.run_batch(mixed, false, nullptr).has_value());
}

TEST(EvaluateTest, EmptySplitRejected) {
    // Zero validation fraction leaves that split empty.
    FrameDataset ds(shared_manifest(), 32, 11, 0.0, 0.2);
    ASSERT_TRUE(ds.indices(Split::val).empty());
    model::JemaModel model(nn::EncoderConfig::desk(), 3);
    EXPECT_THROW(evaluate(model, ds, Split::val, EvalSetting::multimodal), std::runtime_error);
}

TEST(TrainerTest, AugmentedTrainingRunsAndDiffersFromClean) {
    TrainConfig clean_cfg = small_config(LossKind::jema_cosine);
    clean_cfg.epochs = 1;
    TrainConfig aug_cfg = clean_cfg;
    aug_cfg.augment = true;

    Trainer clean(clean_cfg, shared_manifest());
    Trainer augmented(aug_cfg, shared_manifest());
    const auto hc = clean.train();
    const auto ha = augmented.train();
    EXPECT_TRUE(std::isfinite(ha.back().loss_total));
    // Randomized inputs change the realized batches, hence the losses.
    EXPECT_NE(hc.back().loss_total, ha.back().loss_total);

    // Augmentation stays deterministic under the seed.
    Trainer augmented_again(aug_cfg, shared_manifest());
    const auto hb = augmented_again.train();
    EXPECT_EQ(ha.back().loss_total, hb.back().loss_total);
}

TEST(TrainerTest, RnCAndSupConRunAndProduceFiniteLosses) {
    for (LossKind kind : {LossKind::supcon, LossKind::rnc}) {
        TrainConfig cfg = small_config(kind);
        cfg.epochs = 1;
        Trainer trainer(cfg, shared_manifest());
        const auto history = trainer.train();
        EXPECT_TRUE(std::isfinite(history.back().loss_total)) << to_string(kind);
        EXPECT_GT(history.back().loss_cr_p, 0.0) << to_string(kind);
    }
}

TEST(TrainerTest, CheckpointReloadGivesIdenticalMetrics) {
    const fs::path dir = fs::temp_directory_path() / "jema_trainer_ckpt";
    fs::create_directories(dir);
    const std::string path = (dir / "model.ckpt").string();

    TrainConfig cfg = small_config(LossKind::jema_cosine);
    cfg.epochs = 1;
    Trainer trainer(cfg, shared_manifest());
    trainer.train();

    model::save_checkpoint(path, trainer.model(), shared_manifest().norm,
                           train_config_to_json(cfg));
    const auto loaded = model::load_checkpoint(path);

    FrameDataset ds(shared_manifest(), cfg.encoder().image_size, cfg.seed, cfg.val_fraction,
                    cfg.test_fraction);
    const EvalPair before = evaluate_both(trainer.model(), ds, Split::test);
    const EvalPair after = evaluate_both(*loaded.model, ds, Split::test);
    EXPECT_EQ(before.mse_multi, after.mse_multi);
    EXPECT_EQ(before.mse_uni, after.mse_uni);
    fs::remove_all(dir);
}

TEST(TrainerTest, CrossModalDistanceIsFiniteAndReactsToTraining) {
    TrainConfig cfg = small_config(LossKind::jema_cosine);
    cfg.epochs = 4;
    Trainer trainer(cfg, shared_manifest());
    const double before =
        mean_cross_modal_distance(trainer.model(), trainer.dataset(), Split::test);
    trainer.train();
    const double after =
        mean_cross_modal_distance(trainer.model(), trainer.dataset(), Split::test);
    EXPECT_TRUE(std::isfinite(before));
    EXPECT_TRUE(std::isfinite(after));
    EXPECT_LT(after, before);  // alignment pulls same-frame views together
}

TEST(TrainConfigTest, JsonRoundTripAndValidation) {
    TrainConfig cfg = small_config(LossKind::jema_l2);
    cfg.tau = 0.7;
    cfg.augment = true;
    const TrainConfig back = train_config_from_json(train_config_to_json(cfg));
    EXPECT_EQ(back.loss_kind, LossKind::jema_l2);
    EXPECT_DOUBLE_EQ(back.tau, 0.7);
    EXPECT_TRUE(back.augment);
    EXPECT_EQ(back.batch_size, cfg.batch_size);

    nlohmann::json bad = train_config_to_json(cfg);
    bad["batch_size"] = 1;
    EXPECT_THROW(train_config_from_json(bad), std::invalid_argument);
    bad = train_config_to_json(cfg);
    bad["loss_kind"] = "nope";
    EXPECT_THROW(train_config_from_json(bad), std::invalid_argument);
}

TEST(TrainConfigTest, TauDefaultsPerMethod) {
    TrainConfig cfg;
    cfg.loss_kind = LossKind::supcon;
    EXPECT_DOUBLE_EQ(cfg.resolved_tau(), 0.1);
    cfg.loss_kind = LossKind::rnc;
    EXPECT_DOUBLE_EQ(cfg.resolved_tau(), 2.0);
    cfg.tau = 0.5;
    EXPECT_DOUBLE_EQ(cfg.resolved_tau(), 0.5);
}
