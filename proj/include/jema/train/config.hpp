#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "jema/losses/losses.hpp"
#include "jema/nn/vit.hpp"

namespace jema::train {

enum class LossKind { reg, supcon, rnc, jema_cosine, jema_l2, jema_l1 };

const char* to_string(LossKind kind);
std::optional<LossKind> loss_kind_from_string(const std::string& s);
// Display names used in the results table.
const char* table_label(LossKind kind);

// Similarity variant behind a jema_* kind; empty for the baselines.
std::optional<losses::SimilarityKind> similarity_of(LossKind kind);

enum class ModelPreset { paper, desk };

struct TrainConfig {
    LossKind loss_kind = LossKind::jema_cosine;
    losses::LossWeights weights{1.0, 1.0};
    // Temperature for SupCon/RnC; 0 selects the method default (0.1 / 2.0).
    double tau = 0.0;
    int epochs = 20;
    int batch_size = 32;
    double lr = 1e-4;
    std::uint64_t seed = 7;
    ModelPreset preset = ModelPreset::desk;
    bool augment = false;  // random augmentation of training inputs
    double val_fraction = 0.1;
    double test_fraction = 0.1;

    nn::EncoderConfig encoder() const {
        return preset == ModelPreset::paper ? nn::EncoderConfig::paper()
                                            : nn::EncoderConfig::desk();
    }
    double resolved_tau() const {
        if (tau > 0.0) return tau;
        return loss_kind == LossKind::rnc ? 2.0 : 0.1;
    }
    void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace jema::train
