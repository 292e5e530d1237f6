#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "jema/model/jema_model.hpp"
#include "jema/synth/manifest.hpp"

namespace jema::model {

// Self-describing archive: JSON header (config, normalization constants,
// training metadata, tensor index) followed by raw little-endian doubles.
struct LoadedCheckpoint {
    EncoderConfig config;
    synth::NormalizationConstants norm;
    nlohmann::json metadata;
    std::unique_ptr<JemaModel> model;
};

void save_checkpoint(const std::string& path, JemaModel& model,
                     const synth::NormalizationConstants& norm, const nlohmann::json& metadata);

LoadedCheckpoint load_checkpoint(const std::string& path);

nlohmann::json encoder_config_to_json(const EncoderConfig& cfg);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);

}  // namespace jema::model
