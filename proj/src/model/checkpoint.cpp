#include "jema/model/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

using nlohmann::json;

namespace jema::model {

namespace {

constexpr char kMagic[8] = {'J', 'E', 'M', 'A', 'C', 'K', 'P', '1'};

}  // namespace

json encoder_config_to_json(const EncoderConfig& cfg) {
    return json{{"image_size", cfg.image_size},
                {"patch_size", cfg.patch_size},
                {"depth", cfg.depth},
                {"width", cfg.width},
                {"heads", cfg.heads},
                {"embed_head_width", cfg.embed_head_width},
                {"causal_mask", cfg.causal_mask}};
}

EncoderConfig encoder_config_from_json(const json& j) {
    EncoderConfig cfg;
    cfg.image_size = j.at("image_size").get<int>();
    cfg.patch_size = j.at("patch_size").get<int>();
    cfg.depth = j.at("depth").get<int>();
    cfg.width = j.at("width").get<int>();
    cfg.heads = j.at("heads").get<int>();
    cfg.embed_head_width = j.at("embed_head_width").get<int>();
    cfg.causal_mask = j.value("causal_mask", false);
    cfg.validate();
    return cfg;
}

void save_checkpoint(const std::string& path, JemaModel& model,
                     const synth::NormalizationConstants& norm, const json& metadata) {
    const auto params = model.parameters();

    json header;
    header["format"] = "jema-checkpoint-v1";
    header["config"] = encoder_config_to_json(model.config());
    header["norm"] = {{"p_min", norm.p_min}, {"p_max", norm.p_max}, {"v_min", norm.v_min},
                      {"v_max", norm.v_max}, {"l_max", norm.l_max}, {"h_max", norm.h_max}};
    header["metadata"] = metadata;
    json tensors = json::array();
    for (const nn::Parameter* p : params) {
        tensors.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
    }
    header["tensors"] = tensors;

    const std::string header_str = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t len = header_str.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    for (const nn::Parameter* p : params) {
        out.write(reinterpret_cast<const char*>(p->value.data()),
                  static_cast<std::streamsize>(sizeof(double) * p->value.size()));
    }
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("not a checkpoint file: " + path);
    }
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string header_str(len, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(len));
    if (!in) throw std::runtime_error("truncated checkpoint header: " + path);

    const json header = json::parse(header_str);
    LoadedCheckpoint ckpt;
    ckpt.config = encoder_config_from_json(header.at("config"));
    const json& n = header.at("norm");
    ckpt.norm.p_min = n.at("p_min").get<double>();
    ckpt.norm.p_max = n.at("p_max").get<double>();
    ckpt.norm.v_min = n.at("v_min").get<double>();
    ckpt.norm.v_max = n.at("v_max").get<double>();
    ckpt.norm.l_max = n.at("l_max").get<double>();
    ckpt.norm.h_max = n.at("h_max").get<double>();
    ckpt.metadata = header.value("metadata", json::object());

    ckpt.model = std::make_unique<JemaModel>(ckpt.config, 0);
    const auto params = ckpt.model->parameters();
    const json& tensors = header.at("tensors");
    if (tensors.size() != params.size()) {
        throw std::runtime_error("checkpoint tensor count mismatch: " + path);
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const json& t = tensors[i];
        if (t.at("name").get<std::string>() != params[i]->name ||
            t.at("rows").get<Eigen::Index>() != params[i]->value.rows() ||
            t.at("cols").get<Eigen::Index>() != params[i]->value.cols()) {
            throw std::runtime_error("checkpoint tensor layout mismatch at " + params[i]->name);
        }
        in.read(reinterpret_cast<char*>(params[i]->value.data()),
                static_cast<std::streamsize>(sizeof(double) * params[i]->value.size()));
    }
    if (!in) throw std::runtime_error("truncated checkpoint data: " + path);
    return ckpt;
}

}  // namespace jema::model
