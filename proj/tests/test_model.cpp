#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "jema/model/checkpoint.hpp"
#include "jema/model/jema_model.hpp"
#include "jema/util/rng.hpp"

using namespace jema;
using namespace jema::model;
using Eigen::MatrixXd;
using Eigen::VectorXd;
namespace fs = std::filesystem;

namespace {

// Small enough that the finite-difference sweep stays fast.
EncoderConfig tiny_config() {
    EncoderConfig cfg;
    cfg.image_size = 16;
    cfg.patch_size = 8;
    cfg.depth = 2;
    cfg.width = 16;
    cfg.heads = 2;
    cfg.embed_head_width = 8;
    return cfg;
}

Image random_image(Rng& rng, int size) {
    Image img(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) img(y, x) = rng.uniform();
    }
    return img;
}

nn::Parameter* find_param(JemaModel& model, const std::string& name) {
    for (nn::Parameter* p : model.parameters()) {
        if (p->name == name) return p;
    }
    return nullptr;
}

}  // namespace

// ---------------- shape and determinism contracts ----------------

TEST(ModelShapeTest, DeskPresetShapes) {
    const EncoderConfig cfg = EncoderConfig::desk();
    JemaModel model(cfg, 1);
    Rng rng(2);
    const Image img = random_image(rng, cfg.image_size);

    const VectorXd cls = model.encode(img, Modality::on_axis);
    EXPECT_EQ(cls.size(), cfg.width);

    const EmbeddingPair pair = model.embed_heads(cls, Modality::on_axis);
    EXPECT_EQ(pair.s_p.size(), 128);
    EXPECT_EQ(pair.s_v.size(), 128);
    EXPECT_EQ(pair.fused.size(), 256);
}

TEST(ModelShapeTest, PaperPresetShapes) {
    const EncoderConfig cfg = EncoderConfig::paper();
    EXPECT_EQ(cfg.width, 768);
    EXPECT_EQ(cfg.tokens(), 197);
    JemaModel model(cfg, 1);
    Rng rng(3);
    const Image img = random_image(rng, 224);
    const UnimodalResult res = model.forward_unimodal(img, Modality::on_axis);
    EXPECT_EQ(res.embedding.s_p.size(), 128);
    EXPECT_EQ(res.embedding.fused.size(), 256);
    EXPECT_TRUE(std::isfinite(res.pred.length));
    EXPECT_TRUE(std::isfinite(res.pred.height));
}

TEST(ModelShapeTest, ImageSizeMismatchRejected) {
    JemaModel model(tiny_config(), 1);
    EXPECT_THROW(model.encode(Image::Zero(8, 8), Modality::on_axis), std::invalid_argument);
}

TEST(ModelShapeTest, InvalidEncoderConfigRejected) {
    EncoderConfig indivisible = tiny_config();
    indivisible.image_size = 30;  // not a multiple of patch_size 8
    EXPECT_THROW(indivisible.validate(), std::invalid_argument);

    EncoderConfig bad_heads = tiny_config();
    bad_heads.width = 15;  // not divisible by heads
    EXPECT_THROW(bad_heads.validate(), std::invalid_argument);

    EncoderConfig zero_depth = tiny_config();
    zero_depth.depth = 0;
    EXPECT_THROW(zero_depth.validate(), std::invalid_argument);
}

TEST(ModelDeterminismTest, IdenticalInputsIdenticalOutputs) {
    JemaModel model(tiny_config(), 5);
    Rng rng(7);
    const Image img = random_image(rng, 16);
    const VectorXd a = model.encode(img, Modality::off_axis);
    const VectorXd b = model.encode(img, Modality::off_axis);
    EXPECT_TRUE(a.isApprox(b, 0.0));  // bitwise
}

TEST(ModelDeterminismTest, DistinctInputsDistinctCls) {
    JemaModel model(tiny_config(), 5);
    const VectorXd zeros = model.encode(Image::Zero(16, 16), Modality::on_axis);
    const VectorXd ones = model.encode(Image::Constant(16, 16, 1.0), Modality::on_axis);
    EXPECT_GT((zeros - ones).norm(), 1e-8);
}

// ---------------- embedding heads ----------------

TEST(EmbedHeadsTest, FusedIsExactConcatenation) {
    JemaModel model(tiny_config(), 9);
    Rng rng(11);
    const VectorXd cls = model.encode(random_image(rng, 16), Modality::on_axis);
    const EmbeddingPair pair = model.embed_heads(cls, Modality::on_axis);
    EXPECT_TRUE(pair.fused.head(pair.s_p.size()).isApprox(pair.s_p, 0.0));
    EXPECT_TRUE(pair.fused.tail(pair.s_v.size()).isApprox(pair.s_v, 0.0));
}

TEST(EmbedHeadsTest, GradientIsolationBetweenHeads) {
    JemaModel model(tiny_config(), 13);
    Rng rng(17);
    std::vector<Image> batch = {random_image(rng, 16), random_image(rng, 16)};

    ModalityActivations acts = model.forward_modality(batch, Modality::on_axis, true);
    model.zero_grad();
    const MatrixXd d_s_p = 2.0 * acts.s_p;
    model.backward_modality(acts, Modality::on_axis, d_s_p, MatrixXd(), MatrixXd());

    for (nn::Parameter* p : model.embed_head_parameters(Modality::on_axis, false)) {
        EXPECT_TRUE(p->grad.isZero(0.0)) << p->name;  // velocity head untouched
    }
    double power_norm = 0.0, encoder_norm = 0.0;
    for (nn::Parameter* p : model.embed_head_parameters(Modality::on_axis, true)) {
        power_norm += p->grad.squaredNorm();
    }
    for (nn::Parameter* p : model.parameters()) {
        if (p->name.rfind("enc_on.", 0) == 0) encoder_norm += p->grad.squaredNorm();
    }
    EXPECT_GT(power_norm, 0.0);
    EXPECT_GT(encoder_norm, 0.0);

    // And the mirror case.
    model.zero_grad();
    model.backward_modality(acts, Modality::on_axis, MatrixXd(), 2.0 * acts.s_v, MatrixXd());
    for (nn::Parameter* p : model.embed_head_parameters(Modality::on_axis, true)) {
        EXPECT_TRUE(p->grad.isZero(0.0)) << p->name;
    }
}

// ---------------- prediction head ----------------

TEST(PredictHeadTest, ZeroInputReturnsBias) {
    JemaModel model(tiny_config(), 19);
    const MatrixXd out = model.predict(MatrixXd::Zero(1, model.fused_dim()));
    nn::Parameter* bias = find_param(model, "predict_head.b");
    ASSERT_NE(bias, nullptr);
    EXPECT_TRUE(out.row(0).isApprox(bias->value.row(0), 0.0));
}

TEST(PredictHeadTest, AffineIdentity) {
    JemaModel model(tiny_config(), 19);
    Rng rng(23);
    const int fd = model.fused_dim();
    MatrixXd z1(1, fd), z2(1, fd);
    for (int i = 0; i < fd; ++i) {
        z1(0, i) = rng.normal();
        z2(0, i) = rng.normal();
    }
    const double a = 0.7, b = -1.3;
    const MatrixXd bias = model.predict(MatrixXd::Zero(1, fd));
    const MatrixXd lhs = model.predict(a * z1 + b * z2);
    const MatrixXd rhs = a * model.predict(z1) + b * model.predict(z2) - (a + b - 1.0) * bias;
    EXPECT_TRUE(lhs.isApprox(rhs, 1e-10));
}

TEST(PredictHeadTest, SharedBetweenPaths) {
    // Updating the prediction head changes both multimodal and unimodal
    // outputs: one set of weights serves both.
    JemaModel model(tiny_config(), 29);
    Rng rng(31);
    const Image on = random_image(rng, 16);
    const Image off = random_image(rng, 16);

    const auto multi_before = model.forward_multimodal(on, off);
    const auto uni_before = model.forward_unimodal(on, Modality::on_axis);

    find_param(model, "predict_head.b")->value.array() += 0.5;

    const auto multi_after = model.forward_multimodal(on, off);
    const auto uni_after = model.forward_unimodal(on, Modality::on_axis);
    EXPECT_NEAR(multi_after.pred.length - multi_before.pred.length, 0.5, 1e-12);
    EXPECT_NEAR(uni_after.pred.length - uni_before.pred.length, 0.5, 1e-12);
}

// ---------------- multimodal / unimodal paths ----------------

TEST(ForwardPathsTest, FusedJointIsElementwiseMean) {
    JemaModel model(tiny_config(), 37);
    Rng rng(41);
    const Image on = random_image(rng, 16);
    const Image off = random_image(rng, 16);
    const MultimodalResult res = model.forward_multimodal(on, off);
    EXPECT_TRUE(res.fused_joint.isApprox(0.5 * (res.on_axis.fused + res.off_axis.fused), 1e-12));
}

TEST(ForwardPathsTest, EqualFusedVectorsMakeMultimodalMatchUnimodal) {
    JemaModel model(tiny_config(), 37);
    Rng rng(43);
    const int fd = model.fused_dim();
    MatrixXd fused(1, fd);
    for (int i = 0; i < fd; ++i) fused(0, i) = rng.normal();
    // Mean of two equal vectors is the vector itself, so the shared head sees
    // the same input on both paths.
    const MatrixXd joint = 0.5 * (fused + fused);
    EXPECT_TRUE(model.predict(joint).isApprox(model.predict(fused), 0.0));
}

TEST(ForwardPathsTest, SwappingModalitiesChangesResult) {
    JemaModel model(tiny_config(), 47);
    Rng rng(53);
    const Image a = random_image(rng, 16);
    const Image b = random_image(rng, 16);
    const auto ab = model.forward_multimodal(a, b);
    const auto ba = model.forward_multimodal(b, a);
    EXPECT_GT(std::abs(ab.pred.length - ba.pred.length) +
                  std::abs(ab.pred.height - ba.pred.height),
              1e-10);
}

// ---------------- attention extraction ----------------

TEST(AttentionTest, ZeroProjectionsGiveUniformWeights) {
    JemaModel model(tiny_config(), 59);
    for (const char* name : {"enc_on.block0.attn.wq", "enc_on.block0.attn.wk",
                             "enc_on.block0.attn.bq", "enc_on.block0.attn.bk"}) {
        nn::Parameter* p = find_param(model, name);
        ASSERT_NE(p, nullptr) << name;
        p->value.setZero();
    }
    Rng rng(61);
    const double scale_s = 2.5;
    const auto attn = model.extract_attention(0, random_image(rng, 16), Modality::on_axis, scale_s);
    const int tokens = tiny_config().tokens();
    ASSERT_EQ(attn.size(), 2u);
    for (const MatrixXd& head : attn) {
        for (int i = 0; i < tokens; ++i) {
            for (int j = 0; j < tokens; ++j) EXPECT_NEAR(head(i, j), scale_s / tokens, 1e-12);
        }
    }
}

TEST(AttentionTest, RowsSumToScale) {
    JemaModel model(tiny_config(), 67);
    Rng rng(71);
    const Image img = random_image(rng, 16);
    for (int layer = 0; layer < 2; ++layer) {
        for (double s : {1.0, 4.0}) {
            const auto attn = model.extract_attention(layer, img, Modality::off_axis, s);
            for (const MatrixXd& head : attn) {
                const VectorXd sums = head.rowwise().sum();
                for (int i = 0; i < sums.size(); ++i) EXPECT_NEAR(sums(i), s, 1e-5);
            }
        }
    }
}

TEST(AttentionTest, MatchesRecomputationFromCapturedTensors) {
    const EncoderConfig cfg = tiny_config();
    JemaModel model(cfg, 73);
    Rng rng(79);
    const Image img = random_image(rng, 16);
    const double scale_s = 1.7;

    const nn::QkCapture cap = model.capture_qk(img, Modality::on_axis);
    const int tokens = cfg.tokens();
    const int hd = cfg.width / cfg.heads;
    for (int layer = 0; layer < cfg.depth; ++layer) {
        const auto attn = model.extract_attention(layer, img, Modality::on_axis, scale_s);
        for (int h = 0; h < cfg.heads; ++h) {
            // Recompute softmax(Q K^T) * S with plain loops.
            for (int i = 0; i < tokens; ++i) {
                std::vector<double> logits(tokens);
                double mx = -1e300;
                for (int j = 0; j < tokens; ++j) {
                    double dot = 0.0;
                    for (int d = 0; d < hd; ++d) {
                        dot += cap.q[layer](i, h * hd + d) * cap.k[layer](j, h * hd + d);
                    }
                    logits[j] = dot;
                    mx = std::max(mx, dot);
                }
                double denom = 0.0;
                for (double l : logits) denom += std::exp(l - mx);
                for (int j = 0; j < tokens; ++j) {
                    const double expected = std::exp(logits[j] - mx) / denom * scale_s;
                    EXPECT_NEAR(attn[h](i, j), expected, 1e-6);
                }
            }
        }
    }
}

TEST(AttentionTest, LayerOutOfRangeRejected) {
    JemaModel model(tiny_config(), 83);
    Rng rng(89);
    const Image img = random_image(rng, 16);
    EXPECT_THROW(model.extract_attention(2, img, Modality::on_axis), std::out_of_range);
    EXPECT_NO_THROW(model.extract_attention(-1, img, Modality::on_axis));  // last layer
}

TEST(AttentionTest, CausalMaskBlindsClsToImageContent) {
    // With masked self-attention, token 0 (CLS) can only attend to itself in
    // every layer, so its representation cannot depend on the pixels.
    EncoderConfig cfg = tiny_config();
    cfg.causal_mask = true;
    JemaModel model(cfg, 97);
    Rng rng(101);
    const VectorXd a = model.encode(random_image(rng, 16), Modality::on_axis);
    const VectorXd b = model.encode(random_image(rng, 16), Modality::on_axis);
    EXPECT_TRUE(a.isApprox(b, 1e-12));

    EncoderConfig open = tiny_config();
    JemaModel unmasked(open, 97);
    const VectorXd c = unmasked.encode(random_image(rng, 16), Modality::on_axis);
    const VectorXd d = unmasked.encode(random_image(rng, 16), Modality::on_axis);
    EXPECT_GT((c - d).norm(), 1e-8);
}

// ---------------- end-to-end backward check ----------------

TEST(ModelGradientTest, BackwardMatchesFiniteDifferences) {
    const EncoderConfig cfg = tiny_config();
    JemaModel model(cfg, 103);
    Rng rng(107);
    std::vector<Image> batch = {random_image(rng, 16), random_image(rng, 16)};

    // Scalar objective touching every path: sum of squared embeddings plus
    // squared predictions from the fused mean of... a single modality here.
    auto objective = [&]() {
        const ModalityActivations acts = model.forward_modality(batch, Modality::on_axis, false);
        const MatrixXd pred = model.predict(acts.fused);
        return acts.s_p.squaredNorm() + acts.s_v.squaredNorm() + pred.squaredNorm();
    };

    model.zero_grad();
    {
        ModalityActivations acts = model.forward_modality(batch, Modality::on_axis, true);
        nn::LinearCache pc;
        const MatrixXd pred = model.predict(acts.fused, &pc);
        const MatrixXd d_fused = model.predict_backward(2.0 * pred, pc);
        model.backward_modality(acts, Modality::on_axis, 2.0 * acts.s_p, 2.0 * acts.s_v, d_fused);
    }

    // Spot-check representative parameters from every layer family.
    const std::vector<std::string> targets = {
        "enc_on.patch_proj.w", "enc_on.cls",          "enc_on.pos",
        "enc_on.block0.attn.wq", "enc_on.block0.attn.wv", "enc_on.block0.ln1.gamma",
        "enc_on.block1.fc1.w",   "enc_on.block1.fc2.b",   "enc_on.final_ln.beta",
        "head_p_on.fc1.w",       "head_v_on.fc2.b",       "predict_head.w"};
    const double h = 1e-5;
    Rng pick(109);
    for (const std::string& name : targets) {
        nn::Parameter* p = find_param(model, name);
        ASSERT_NE(p, nullptr) << name;
        for (int probe = 0; probe < 3; ++probe) {
            const Eigen::Index i = pick.uniform_index(p->value.rows());
            const Eigen::Index j = pick.uniform_index(p->value.cols());
            const double orig = p->value(i, j);
            p->value(i, j) = orig + h;
            const double fp = objective();
            p->value(i, j) = orig - h;
            const double fm = objective();
            p->value(i, j) = orig;
            const double numeric = (fp - fm) / (2.0 * h);
            const double analytic = p->grad(i, j);
            const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
            EXPECT_LT(std::abs(numeric - analytic) / denom, 1e-4)
                << name << "(" << i << "," << j << ")";
        }
    }
}

// ---------------- checkpoints ----------------

TEST(CheckpointTest, RoundTripPreservesOutputsBitwise) {
    const fs::path dir = fs::temp_directory_path() / "jema_ckpt_test";
    fs::create_directories(dir);
    const fs::path file = dir / "model.ckpt";

    const EncoderConfig cfg = tiny_config();
    JemaModel model(cfg, 113);
    synth::NormalizationConstants norm{800, 2000, 4, 10, 170.0, 68.0};
    nlohmann::json meta = {{"seed", 113}, {"loss_kind", "jema_cosine"}, {"alpha", 1.0}, {"beta", 1.0}};
    save_checkpoint(file.string(), model, norm, meta);

    LoadedCheckpoint loaded = load_checkpoint(file.string());
    EXPECT_EQ(loaded.config.width, cfg.width);
    EXPECT_DOUBLE_EQ(loaded.norm.l_max, 170.0);
    EXPECT_EQ(loaded.metadata.at("loss_kind"), "jema_cosine");

    Rng rng(127);
    const Image on = random_image(rng, 16);
    const Image off = random_image(rng, 16);
    const auto a = model.forward_multimodal(on, off);
    const auto b = loaded.model->forward_multimodal(on, off);
    EXPECT_EQ(a.pred.length, b.pred.length);
    EXPECT_EQ(a.pred.height, b.pred.height);
    EXPECT_TRUE(a.on_axis.fused.isApprox(b.on_axis.fused, 0.0));
    fs::remove_all(dir);
}

TEST(CheckpointTest, CorruptFileRejected) {
    const fs::path dir = fs::temp_directory_path() / "jema_ckpt_bad";
    fs::create_directories(dir);
    const fs::path file = dir / "bad.ckpt";
    std::ofstream(file) << "not a checkpoint";
    EXPECT_THROW(load_checkpoint(file.string()), std::runtime_error);
    fs::remove_all(dir);
}
