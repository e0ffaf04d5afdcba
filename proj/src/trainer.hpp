#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <nlohmann/json.hpp>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "loss.hpp"
#include "network.hpp"

namespace uhrnet {

struct TrainConfig {
    int epochs = 200;
    int batch_size = 4;
    double learning_rate = 1e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    uint64_t seed = 0;
    int checkpoint_every = 1;  // 0 = periodic saves off, final save only
    std::string device_hint = "cpu";
    LossConfig loss;
    NetworkConfig network;

    void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig& cfg);

/// Parse a config file's JSON. Missing keys keep defaults; unknown keys
/// (at any level) raise a ConfigError naming them all.
TrainConfig train_config_from_json(const nlohmann::json& j);

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double train_rmse_mm = 0.0;
    double train_ssim = 0.0;
    double val_rmse_mm = 0.0;
    double val_ssim = 0.0;
};

struct History {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;  // 1-based index of the minimum validation RMSE
};

void to_json(nlohmann::json& j, const History& h);
void from_json(const nlohmann::json& j, History& h);

struct CheckpointMeta {
    NetworkConfig network;
    LossConfig loss;
    int epoch = 0;
    double height_scale_mm = 0.0;
    History history;
};

/// Weights plus a JSON sidecar (same stem, .json) carrying CheckpointMeta.
/// Both files are written atomically (write-then-rename).
void save_checkpoint(UHRNet& net, const CheckpointMeta& meta, const std::filesystem::path& path);
UHRNet load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta_out = nullptr);

struct TrainResult {
    History history;
    std::filesystem::path best_checkpoint;
    std::filesystem::path last_checkpoint;
    double best_val_rmse_mm = 0.0;
};

/// Full training run over the manifest's train split: Adam, seeded shuffling,
/// per-epoch train/validation metrics, best-by-validation-RMSE and last
/// checkpoints under out_dir. Variant D trains with the fusion loss, other
/// variants with plain MSE. Losses see normalized heights
/// (values / height_scale_mm); recorded metrics are in mm.
TrainResult train(const TrainConfig& cfg, const Manifest& manifest,
                  const std::filesystem::path& manifest_dir, const std::filesystem::path& out_dir,
                  std::ostream* log = nullptr);

/// Evaluation-mode (rmse_mm, ssim) means over one split. Kept as a separate
/// code path from metrics::evaluate so the two can cross-check each other.
std::pair<double, double> validate(UHRNet& net, const Manifest& manifest,
                                   const std::filesystem::path& manifest_dir, Split split);

}  // namespace uhrnet
