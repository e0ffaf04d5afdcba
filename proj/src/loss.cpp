#include "loss.hpp"

#include <cmath>

#include "field.hpp"

namespace uhrnet {

void LossConfig::validate() const {
    if (grid_rows < 1 || grid_cols < 1) throw ConfigError("loss grid must be at least 1x1");
    if (dynamic_range <= 0.0) throw ConfigError("dynamic range L must be positive");
    if (k1 <= 0.0 || k2 <= 0.0) throw ConfigError("SSIM constants k1, k2 must be positive");
    if (window_size < 3 || window_size % 2 == 0) throw ConfigError("SSIM window size must be odd and >= 3");
    if (window_sigma <= 0.0) throw ConfigError("SSIM window sigma must be positive");
}

const char* ssim_mode_name(SsimMode m) { return m == SsimMode::Global ? "global" : "windowed"; }

SsimMode ssim_mode_from_name(const std::string& name) {
    if (name == "global") return SsimMode::Global;
    if (name == "windowed") return SsimMode::Windowed;
    throw ConfigError("unknown ssim_mode '" + name + "' (expected global|windowed)");
}

const char* reorder_mode_name(ReorderMode m) {
    return m == ReorderMode::PerPass ? "per_pass" : "per_epoch";
}

ReorderMode reorder_mode_from_name(const std::string& name) {
    if (name == "per_pass") return ReorderMode::PerPass;
    if (name == "per_epoch") return ReorderMode::PerEpoch;
    throw ConfigError("unknown reorder mode '" + name + "' (expected per_pass|per_epoch)");
}

void to_json(nlohmann::json& j, const LossConfig& cfg) {
    j = nlohmann::json{{"alpha", cfg.alpha},
                       {"grid_rows", cfg.grid_rows},
                       {"grid_cols", cfg.grid_cols},
                       {"k1", cfg.k1},
                       {"k2", cfg.k2},
                       {"dynamic_range", cfg.dynamic_range},
                       {"ssim_mode", ssim_mode_name(cfg.ssim_mode)},
                       {"window_size", cfg.window_size},
                       {"window_sigma", cfg.window_sigma},
                       {"reorder", reorder_mode_name(cfg.reorder)}};
}

void from_json(const nlohmann::json& j, LossConfig& cfg) {
    if (j.contains("alpha")) j.at("alpha").get_to(cfg.alpha);
    if (j.contains("grid_rows")) j.at("grid_rows").get_to(cfg.grid_rows);
    if (j.contains("grid_cols")) j.at("grid_cols").get_to(cfg.grid_cols);
    if (j.contains("k1")) j.at("k1").get_to(cfg.k1);
    if (j.contains("k2")) j.at("k2").get_to(cfg.k2);
    if (j.contains("dynamic_range")) j.at("dynamic_range").get_to(cfg.dynamic_range);
    if (j.contains("ssim_mode")) cfg.ssim_mode = ssim_mode_from_name(j.at("ssim_mode").get<std::string>());
    if (j.contains("window_size")) j.at("window_size").get_to(cfg.window_size);
    if (j.contains("window_sigma")) j.at("window_sigma").get_to(cfg.window_sigma);
    if (j.contains("reorder")) cfg.reorder = reorder_mode_from_name(j.at("reorder").get<std::string>());
}

namespace {

torch::Tensor as_batched(const torch::Tensor& t) {
    switch (t.dim()) {
        case 2: return t.unsqueeze(0).unsqueeze(0);
        case 3: return t.unsqueeze(0);
        case 4: return t;
        default: throw ShapeError("expected a HxW, CxHxW or BxCxHxW tensor, got dim " +
                                  std::to_string(t.dim()));
    }
}

void check_pair(const torch::Tensor& a, const torch::Tensor& b) {
    if (a.sizes() != b.sizes()) {
        throw ShapeError("tensor shape mismatch: " + std::to_string(a.numel()) + " vs " +
                         std::to_string(b.numel()) + " elements");
    }
    if (a.numel() == 0) throw ShapeError("empty tensors");
}

torch::Tensor gaussian_window(int size, double sigma, const torch::TensorOptions& options) {
    torch::Tensor coords = torch::arange(size, options) - (size - 1) / 2.0;
    torch::Tensor g = torch::exp(-coords.pow(2) / (2.0 * sigma * sigma));
    g = g / g.sum();
    return g.outer(g).unsqueeze(0).unsqueeze(0);
}

}  // namespace

torch::Tensor mse(const torch::Tensor& pred, const torch::Tensor& gt) {
    check_pair(pred, gt);
    return (pred - gt).pow(2).mean();
}

torch::Tensor patch_weights(int n_patches, const torch::TensorOptions& options) {
    if (n_patches < 1) throw ConfigError("patch count must be >= 1");
    torch::Tensor ranks = torch::arange(1, n_patches + 1, torch::kDouble);
    torch::Tensor w = ranks * 0.2 - 0.1;
    return options.has_dtype() ? w.to(options) : w;
}

torch::Tensor patch_losses(const torch::Tensor& pred, const torch::Tensor& gt, const LossConfig& cfg) {
    cfg.validate();
    check_pair(pred, gt);
    torch::Tensor p = as_batched(pred);
    torch::Tensor g = as_batched(gt);
    const int64_t B = p.size(0), C = p.size(1), H = p.size(2), W = p.size(3);
    if (H % cfg.grid_rows != 0 || W % cfg.grid_cols != 0) {
        throw ShapeError("image " + std::to_string(H) + "x" + std::to_string(W) +
                         " does not tile evenly by a " + std::to_string(cfg.grid_rows) + "x" +
                         std::to_string(cfg.grid_cols) + " grid");
    }
    const int64_t ph = H / cfg.grid_rows, pw = W / cfg.grid_cols;
    torch::Tensor sq = (p - g).pow(2);
    sq = sq.view({B, C, cfg.grid_rows, ph, cfg.grid_cols, pw});
    // Patch MSE averages over channels and the patch interior.
    return sq.mean(/*dim=*/{1, 3, 5}).reshape({B, cfg.patch_count()});
}

torch::Tensor patch_rank_order(const torch::Tensor& patch_mse) {
    auto [values, order] = torch::sort(patch_mse.detach(), /*stable=*/true, /*dim=*/-1, /*descending=*/false);
    (void)values;
    return order;
}

torch::Tensor chunked_l2_with_order(const torch::Tensor& pred, const torch::Tensor& gt,
                                    const LossConfig& cfg, const torch::Tensor& order) {
    torch::Tensor losses = patch_losses(pred, gt, cfg);
    torch::Tensor sorted = torch::gather(losses, 1, order);
    torch::Tensor w = patch_weights(cfg.patch_count(), losses.options());
    return (sorted * w).sum(1).div(static_cast<double>(cfg.patch_count())).mean();
}

torch::Tensor chunked_l2(const torch::Tensor& pred, const torch::Tensor& gt, const LossConfig& cfg) {
    torch::Tensor losses = patch_losses(pred, gt, cfg);
    torch::Tensor sorted = torch::gather(losses, 1, patch_rank_order(losses));
    torch::Tensor w = patch_weights(cfg.patch_count(), losses.options());
    return (sorted * w).sum(1).div(static_cast<double>(cfg.patch_count())).mean();
}

SsimStats ssim_stats(const torch::Tensor& x, const torch::Tensor& y) {
    check_pair(x, y);
    torch::Tensor a = as_batched(x).flatten(1);
    torch::Tensor b = as_batched(y).flatten(1);
    SsimStats s;
    s.mu_x = a.mean(1);
    s.mu_y = b.mean(1);
    torch::Tensor dx = a - s.mu_x.unsqueeze(1);
    torch::Tensor dy = b - s.mu_y.unsqueeze(1);
    s.var_x = dx.pow(2).mean(1);
    s.var_y = dy.pow(2).mean(1);
    s.cov_xy = (dx * dy).mean(1);
    return s;
}

torch::Tensor ssim(const torch::Tensor& x, const torch::Tensor& y, const LossConfig& cfg) {
    cfg.validate();
    check_pair(x, y);
    const double c1 = cfg.c1(), c2 = cfg.c2();

    if (cfg.ssim_mode == SsimMode::Global) {
        SsimStats s = ssim_stats(x, y);
        torch::Tensor num = (2.0 * s.mu_x * s.mu_y + c1) * (2.0 * s.cov_xy + c2);
        torch::Tensor den = (s.mu_x.pow(2) + s.mu_y.pow(2) + c1) * (s.var_x + s.var_y + c2);
        return (num / den).mean();
    }

    torch::Tensor a = as_batched(x);
    torch::Tensor b = as_batched(y);
    const int64_t C = a.size(1);
    const int pad = cfg.window_size / 2;
    torch::Tensor window = gaussian_window(cfg.window_size, cfg.window_sigma, a.options())
                               .expand({C, 1, cfg.window_size, cfg.window_size})
                               .contiguous();
    namespace F = torch::nn::functional;
    auto conv_opts = F::Conv2dFuncOptions().padding(pad).groups(C);
    torch::Tensor mu_a = F::conv2d(a, window, conv_opts);
    torch::Tensor mu_b = F::conv2d(b, window, conv_opts);
    torch::Tensor var_a = F::conv2d(a * a, window, conv_opts) - mu_a.pow(2);
    torch::Tensor var_b = F::conv2d(b * b, window, conv_opts) - mu_b.pow(2);
    torch::Tensor cov = F::conv2d(a * b, window, conv_opts) - mu_a * mu_b;
    torch::Tensor num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
    torch::Tensor den = (mu_a.pow(2) + mu_b.pow(2) + c1) * (var_a + var_b + c2);
    return (num / den).flatten(1).mean(1).mean();
}

torch::Tensor ssim_loss(const torch::Tensor& x, const torch::Tensor& y, const LossConfig& cfg) {
    return 1.0 - ssim(x, y, cfg);
}

torch::Tensor fusion_loss(const torch::Tensor& pred, const torch::Tensor& gt, const LossConfig& cfg) {
    return chunked_l2(pred, gt, cfg) + cfg.alpha * ssim_loss(pred, gt, cfg);
}

torch::Tensor fusion_loss_with_order(const torch::Tensor& pred, const torch::Tensor& gt,
                                     const LossConfig& cfg, const torch::Tensor& order) {
    return chunked_l2_with_order(pred, gt, cfg, order) + cfg.alpha * ssim_loss(pred, gt, cfg);
}

}  // namespace uhrnet
