#include "jema/model/jema_model.hpp"

#include <stdexcept>

namespace jema::model {

EmbedHead::EmbedHead(int in_dim, int out_dim, const std::string& name, Rng& rng)
    : fc1_(in_dim, out_dim, name + ".fc1", rng), fc2_(out_dim, out_dim, name + ".fc2", rng) {}

MatrixXd EmbedHead::forward(const MatrixXd& x, HeadCache* cache) const {
    const MatrixXd h1 = fc1_.forward(x, cache ? &cache->fc1 : nullptr);
    const MatrixXd h2 = nn::gelu_forward(h1, cache ? &cache->act : nullptr);
    return fc2_.forward(h2, cache ? &cache->fc2 : nullptr);
}

MatrixXd EmbedHead::backward(const MatrixXd& dout, const HeadCache& cache) {
    const MatrixXd dh2 = fc2_.backward(dout, cache.fc2);
    const MatrixXd dh1 = nn::gelu_backward(dh2, cache.act);
    return fc1_.backward(dh1, cache.fc1);
}

void EmbedHead::collect(std::vector<nn::Parameter*>& out) {
    fc1_.collect(out);
    fc2_.collect(out);
}

namespace {

Rng derived_rng(std::uint64_t seed, const char* tag) {
    return Rng(Rng::derive_seed(seed, tag));
}

}  // namespace

JemaModel::JemaModel(const EncoderConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    {
        Rng rng = derived_rng(seed, "enc_on");
        enc_on_ = nn::VitEncoder(cfg_, "enc_on", rng);
    }
    {
        Rng rng = derived_rng(seed, "enc_off");
        enc_off_ = nn::VitEncoder(cfg_, "enc_off", rng);
    }
    const int e = cfg_.embed_head_width;
    {
        Rng rng = derived_rng(seed, "head_p_on");
        head_p_on_ = EmbedHead(cfg_.width, e, "head_p_on", rng);
    }
    {
        Rng rng = derived_rng(seed, "head_v_on");
        head_v_on_ = EmbedHead(cfg_.width, e, "head_v_on", rng);
    }
    {
        Rng rng = derived_rng(seed, "head_p_off");
        head_p_off_ = EmbedHead(cfg_.width, e, "head_p_off", rng);
    }
    {
        Rng rng = derived_rng(seed, "head_v_off");
        head_v_off_ = EmbedHead(cfg_.width, e, "head_v_off", rng);
    }
    {
        Rng rng = derived_rng(seed, "predict_head");
        predict_head_ = nn::Linear(2 * e, 2, "predict_head", rng);
    }
}

const EmbedHead& JemaModel::head(Modality m, bool power) const {
    if (m == Modality::on_axis) return power ? head_p_on_ : head_v_on_;
    return power ? head_p_off_ : head_v_off_;
}

EmbedHead& JemaModel::head(Modality m, bool power) {
    return const_cast<EmbedHead&>(const_cast<const JemaModel*>(this)->head(m, power));
}

ModalityActivations JemaModel::forward_modality(const std::vector<Image>& images, Modality m,
                                                bool with_cache) const {
    ModalityActivations acts;
    acts.cls = encoder(m).forward(images, with_cache ? &acts.vit : nullptr);
    acts.s_p = head(m, true).forward(acts.cls, with_cache ? &acts.head_p : nullptr);
    acts.s_v = head(m, false).forward(acts.cls, with_cache ? &acts.head_v : nullptr);
    acts.fused.resize(acts.s_p.rows(), acts.s_p.cols() + acts.s_v.cols());
    acts.fused << acts.s_p, acts.s_v;
    return acts;
}

void JemaModel::backward_modality(const ModalityActivations& acts, Modality m,
                                  const MatrixXd& d_s_p, const MatrixXd& d_s_v,
                                  const MatrixXd& d_fused) {
    const int e = cfg_.embed_head_width;
    MatrixXd gp = d_s_p.size() ? d_s_p : MatrixXd::Zero(acts.s_p.rows(), e);
    MatrixXd gv = d_s_v.size() ? d_s_v : MatrixXd::Zero(acts.s_v.rows(), e);
    if (d_fused.size()) {
        gp += d_fused.leftCols(e);
        gv += d_fused.rightCols(e);
    }

    MatrixXd d_cls = MatrixXd::Zero(acts.cls.rows(), acts.cls.cols());
    if (!gp.isZero(0.0)) d_cls += head(m, true).backward(gp, acts.head_p);
    if (!gv.isZero(0.0)) d_cls += head(m, false).backward(gv, acts.head_v);
    encoder(m).backward(d_cls, acts.vit);
}

MatrixXd JemaModel::predict(const MatrixXd& fused, nn::LinearCache* cache) const {
    return predict_head_.forward(fused, cache);
}

MatrixXd JemaModel::predict_backward(const MatrixXd& d_pred, const nn::LinearCache& cache) {
    return predict_head_.backward(d_pred, cache);
}

VectorXd JemaModel::encode(const Image& image, Modality m) const {
    return encoder(m).forward({image}).row(0);
}

EmbeddingPair JemaModel::embed_heads(const VectorXd& cls, Modality m) const {
    if (!cls.allFinite()) throw std::invalid_argument("CLS representation is not finite");
    const MatrixXd row = cls.transpose();
    EmbeddingPair pair;
    pair.s_p = head(m, true).forward(row).row(0);
    pair.s_v = head(m, false).forward(row).row(0);
    pair.fused.resize(pair.s_p.size() + pair.s_v.size());
    pair.fused << pair.s_p, pair.s_v;
    return pair;
}

MultimodalResult JemaModel::forward_multimodal(const Image& on_axis, const Image& off_axis) const {
    MultimodalResult res;
    res.on_axis = embed_heads(encode(on_axis, Modality::on_axis), Modality::on_axis);
    res.off_axis = embed_heads(encode(off_axis, Modality::off_axis), Modality::off_axis);
    res.fused_joint = 0.5 * (res.on_axis.fused + res.off_axis.fused);
    const MatrixXd out = predict(res.fused_joint.transpose());
    res.pred = {out(0, 0), out(0, 1)};
    return res;
}

UnimodalResult JemaModel::forward_unimodal(const Image& image, Modality m) const {
    UnimodalResult res;
    res.embedding = embed_heads(encode(image, m), m);
    const MatrixXd out = predict(res.embedding.fused.transpose());
    res.pred = {out(0, 0), out(0, 1)};
    return res;
}

AttentionTensor JemaModel::extract_attention(int layer, const Image& image, Modality m,
                                             double scale_s) const {
    if (layer < 0) layer = cfg_.depth - 1;
    if (layer >= cfg_.depth) {
        throw std::out_of_range("attention layer " + std::to_string(layer) + " out of range (depth " +
                                std::to_string(cfg_.depth) + ")");
    }
    if (scale_s <= 0.0) throw std::invalid_argument("attention scale must be positive");

    nn::QkCapture capture;
    encoder(m).forward({image}, nullptr, &capture);

    const int tokens = cfg_.tokens();
    const int heads = cfg_.heads;
    const int hd = cfg_.width / heads;
    const MatrixXd& q = capture.q[layer];
    const MatrixXd& k = capture.k[layer];

    AttentionTensor out;
    out.reserve(heads);
    for (int h = 0; h < heads; ++h) {
        const MatrixXd logits =
            q.block(0, h * hd, tokens, hd) * k.block(0, h * hd, tokens, hd).transpose();
        out.push_back(nn::softmax_rows(logits) * scale_s);
    }
    return out;
}

nn::QkCapture JemaModel::capture_qk(const Image& image, Modality m) const {
    nn::QkCapture capture;
    encoder(m).forward({image}, nullptr, &capture);
    return capture;
}

std::vector<nn::Parameter*> JemaModel::parameters() {
    std::vector<nn::Parameter*> out;
    enc_on_.collect(out);
    enc_off_.collect(out);
    head_p_on_.collect(out);
    head_v_on_.collect(out);
    head_p_off_.collect(out);
    head_v_off_.collect(out);
    predict_head_.collect(out);
    return out;
}

std::vector<nn::Parameter*> JemaModel::embed_head_parameters(Modality m, bool power_head) {
    std::vector<nn::Parameter*> out;
    head(m, power_head).collect(out);
    return out;
}

std::vector<nn::Parameter*> JemaModel::prediction_head_parameters() {
    std::vector<nn::Parameter*> out;
    predict_head_.collect(out);
    return out;
}

void JemaModel::zero_grad() {
    for (nn::Parameter* p : parameters()) p->zero_grad();
}

}  // namespace jema::model
