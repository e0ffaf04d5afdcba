#pragma once

#include <torch/torch.h>

#include <nlohmann/json.hpp>
#include <string>

namespace uhrnet {

enum class SsimMode { Global, Windowed };
enum class ReorderMode { PerPass, PerEpoch };

/// Compound-loss parameters: the fusion loss is
///   chunked_l2 + alpha * (1 - ssim)
/// with the chunked term built from a rows x cols patch grid whose per-patch
/// mean square errors are sorted ascending and weighted by w_i = 0.2*i - 0.1.
struct LossConfig {
    double alpha = 1000.0;
    int grid_rows = 4;
    int grid_cols = 4;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;  // L
    SsimMode ssim_mode = SsimMode::Global;
    int window_size = 11;
    double window_sigma = 1.5;
    ReorderMode reorder = ReorderMode::PerPass;

    double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
    double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
    int patch_count() const { return grid_rows * grid_cols; }
    void validate() const;
};

const char* ssim_mode_name(SsimMode m);
SsimMode ssim_mode_from_name(const std::string& name);
const char* reorder_mode_name(ReorderMode m);
ReorderMode reorder_mode_from_name(const std::string& name);

void to_json(nlohmann::json& j, const LossConfig& cfg);
void from_json(const nlohmann::json& j, LossConfig& cfg);

/// Mean square error over all elements.
torch::Tensor mse(const torch::Tensor& pred, const torch::Tensor& gt);

/// Rank weights w_i = 0.2*i - 0.1 for i = 1..n, attached ascending.
torch::Tensor patch_weights(int n_patches, const torch::TensorOptions& options = {});

/// Per-patch MSE, shape B x (rows*cols). Accepts HxW, CxHxW or BxCxHxW input.
torch::Tensor patch_losses(const torch::Tensor& pred, const torch::Tensor& gt, const LossConfig& cfg);

/// Ascending rank order of the (detached) patch losses, ties broken by patch
/// index. Shape B x n, usable with chunked_l2_with_order.
torch::Tensor patch_rank_order(const torch::Tensor& patch_mse);

/// Chunked L2 with a caller-supplied rank order (per-epoch frozen ranks).
torch::Tensor chunked_l2_with_order(const torch::Tensor& pred, const torch::Tensor& gt,
                                    const LossConfig& cfg, const torch::Tensor& order);

/// Chunked L2 with ranks recomputed from the current patch losses. Each
/// sample sorts independently; the batch value is the per-sample mean. Ranks
/// act as constants inside a backward pass.
torch::Tensor chunked_l2(const torch::Tensor& pred, const torch::Tensor& gt, const LossConfig& cfg);

/// Whole-image comparison statistics (means, variances, covariance), one row
/// per sample.
struct SsimStats {
    torch::Tensor mu_x, mu_y, var_x, var_y, cov_xy;
};
SsimStats ssim_stats(const torch::Tensor& x, const torch::Tensor& y);

/// Structural similarity. Global mode evaluates the closed form once per
/// sample from whole-image statistics; windowed mode averages the per-pixel
/// map computed under an 11x11 Gaussian window. Returns the batch mean.
torch::Tensor ssim(const torch::Tensor& x, const torch::Tensor& y, const LossConfig& cfg);

/// 1 - ssim.
torch::Tensor ssim_loss(const torch::Tensor& x, const torch::Tensor& y, const LossConfig& cfg);

/// chunked_l2 + alpha * ssim_loss.
torch::Tensor fusion_loss(const torch::Tensor& pred, const torch::Tensor& gt, const LossConfig& cfg);

/// Same, but with frozen patch ranks.
torch::Tensor fusion_loss_with_order(const torch::Tensor& pred, const torch::Tensor& gt,
                                     const LossConfig& cfg, const torch::Tensor& order);

}  // namespace uhrnet
