#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "field.hpp"
#include "loss.hpp"
#include "network.hpp"

namespace uhrnet {

/// Root mean square error over masked pixels, in the fields' units.
double masked_rmse(const Field& pred, const Field& gt, const Mask& mask);

/// Median; even-length inputs average the middle pair.
double median(std::vector<double> values);

torch::Tensor field_to_tensor(const Field& f);
torch::Tensor field_to_tensor(const DField& f);  // cast down to float32
torch::Tensor mask_to_tensor(const Mask& m);
Field tensor_to_field(const torch::Tensor& t);

struct EvalReport {
    double rmse_mm_mean = 0.0;
    double ssim_mean = 0.0;
    std::vector<double> rmse_mm;
    std::vector<double> ssim;
    int n_samples = 0;
    int64_t params = 0;
    double inference_seconds = 0.0;
    std::string config_digest;
};

void to_json(nlohmann::json& j, const EvalReport& r);
void from_json(const nlohmann::json& j, EvalReport& r);

/// FNV-1a hex digest of a network configuration plus the dataset height
/// scale, for checkpoint/report compatibility checks.
std::string config_digest(const NetworkConfig& cfg, double height_scale_mm);

/// Per-sample evaluation-mode forward passes over one split. Predictions are
/// de-normalized by manifest.height_scale_mm; RMSE runs over each sample's
/// mask and SSIM compares the mm maps (masked pixels zeroed in both) with
/// dynamic range height_scale_mm.
EvalReport evaluate(UHRNet& net, const Manifest& manifest,
                    const std::filesystem::path& manifest_dir, Split split);

/// Median wall-clock seconds of `reps` single-pattern forward passes after
/// `warmup` discarded ones.
double time_inference(UHRNet& net, int height, int width, int warmup, int reps);

}  // namespace uhrnet
