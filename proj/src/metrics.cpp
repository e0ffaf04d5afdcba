#include "metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

namespace uhrnet {

double masked_rmse(const Field& pred, const Field& gt, const Mask& mask) {
    require_same_shape(pred.height, pred.width, gt.height, gt.width, "rmse fields");
    require_same_shape(pred.height, pred.width, mask.height, mask.width, "rmse mask");
    double sum = 0.0;
    int64_t n = 0;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        if (!mask.data[i]) continue;
        const double d = static_cast<double>(pred.data[i]) - static_cast<double>(gt.data[i]);
        sum += d * d;
        ++n;
    }
    if (n == 0) throw ConfigError("rmse over an empty mask");
    return std::sqrt(sum / static_cast<double>(n));
}

double median(std::vector<double> values) {
    if (values.empty()) throw ConfigError("median of an empty list");
    std::sort(values.begin(), values.end());
    const size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return 0.5 * (values[mid - 1] + values[mid]);
}

torch::Tensor field_to_tensor(const Field& f) {
    torch::Tensor t = torch::from_blob(const_cast<float*>(f.data.data()),
                                       {1, 1, f.height, f.width}, torch::kFloat32);
    return t.clone();
}

torch::Tensor field_to_tensor(const DField& f) {
    torch::Tensor t = torch::from_blob(const_cast<double*>(f.data.data()),
                                       {1, 1, f.height, f.width}, torch::kFloat64);
    return t.to(torch::kFloat32);
}

torch::Tensor mask_to_tensor(const Mask& m) {
    torch::Tensor t = torch::empty({1, 1, m.height, m.width}, torch::kFloat32);
    float* out = t.data_ptr<float>();
    for (size_t i = 0; i < m.data.size(); ++i) out[i] = m.data[i] ? 1.0f : 0.0f;
    return t;
}

Field tensor_to_field(const torch::Tensor& t) {
    torch::Tensor flat = t.detach().to(torch::kFloat32).contiguous();
    if (flat.dim() == 4) {
        if (flat.size(0) != 1 || flat.size(1) != 1) throw ShapeError("expected a single-map tensor");
        flat = flat.squeeze(0).squeeze(0);
    } else if (flat.dim() == 3) {
        if (flat.size(0) != 1) throw ShapeError("expected a single-map tensor");
        flat = flat.squeeze(0);
    } else if (flat.dim() != 2) {
        throw ShapeError("expected a 2D map tensor, got dim " + std::to_string(flat.dim()));
    }
    Field f(static_cast<int>(flat.size(0)), static_cast<int>(flat.size(1)));
    std::copy_n(flat.data_ptr<float>(), f.data.size(), f.data.begin());
    return f;
}

void to_json(nlohmann::json& j, const EvalReport& r) {
    j = nlohmann::json{{"rmse_mm_mean", r.rmse_mm_mean},
                       {"ssim_mean", r.ssim_mean},
                       {"rmse_mm", r.rmse_mm},
                       {"ssim", r.ssim},
                       {"n_samples", r.n_samples},
                       {"params", r.params},
                       {"inference_seconds", r.inference_seconds},
                       {"config_digest", r.config_digest}};
}

void from_json(const nlohmann::json& j, EvalReport& r) {
    j.at("rmse_mm_mean").get_to(r.rmse_mm_mean);
    j.at("ssim_mean").get_to(r.ssim_mean);
    j.at("rmse_mm").get_to(r.rmse_mm);
    j.at("ssim").get_to(r.ssim);
    j.at("n_samples").get_to(r.n_samples);
    j.at("params").get_to(r.params);
    j.at("inference_seconds").get_to(r.inference_seconds);
    j.at("config_digest").get_to(r.config_digest);
}

std::string config_digest(const NetworkConfig& cfg, double height_scale_mm) {
    nlohmann::json j;
    to_json(j, cfg);
    j["height_scale_mm"] = height_scale_mm;
    const std::string text = j.dump();
    uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

EvalReport evaluate(UHRNet& net, const Manifest& manifest,
                    const std::filesystem::path& manifest_dir, Split split) {
    const std::vector<size_t> indices = manifest.indices_of(split);
    if (indices.empty()) {
        throw ConfigError(std::string("no samples in split '") + split_name(split) + "'");
    }
    if (manifest.height_scale_mm <= 0.0) throw ConfigError("manifest height_scale_mm must be positive");

    LossConfig ssim_cfg;
    ssim_cfg.dynamic_range = manifest.height_scale_mm;

    EvalReport report;
    report.params = count_parameters(*net);
    report.config_digest = config_digest(net->config, manifest.height_scale_mm);

    const bool was_training = net->is_training();
    net->eval();
    torch::NoGradGuard no_grad;
    for (size_t idx : indices) {
        const Sample sample = load_sample(manifest_dir, manifest.records[idx]);
        if (sample.fringe.intensities.height != manifest.canvas_height ||
            sample.fringe.intensities.width != manifest.canvas_width) {
            throw ShapeError("sample '" + manifest.records[idx].id + "' does not match the manifest canvas");
        }
        torch::Tensor input = field_to_tensor(sample.fringe.intensities);
        torch::Tensor pred_mm = net->forward(input) * manifest.height_scale_mm;

        Field pred_field = tensor_to_field(pred_mm);
        report.rmse_mm.push_back(masked_rmse(pred_field, sample.height.values, sample.height.mask));

        torch::Tensor mask = mask_to_tensor(sample.height.mask);
        torch::Tensor gt_mm = field_to_tensor(sample.height.values);
        torch::Tensor s = ssim(pred_mm * mask, gt_mm * mask, ssim_cfg);
        report.ssim.push_back(s.item<double>());
    }
    if (was_training) net->train();

    report.n_samples = static_cast<int>(indices.size());
    double rmse_sum = 0.0, ssim_sum = 0.0;
    for (double v : report.rmse_mm) rmse_sum += v;
    for (double v : report.ssim) ssim_sum += v;
    report.rmse_mm_mean = rmse_sum / report.n_samples;
    report.ssim_mean = ssim_sum / report.n_samples;
    return report;
}

double time_inference(UHRNet& net, int height, int width, int warmup, int reps) {
    if (reps < 1) throw ConfigError("timing needs at least one repetition");
    if (warmup < 0) throw ConfigError("warmup count must be nonnegative");
    const bool was_training = net->is_training();
    net->eval();
    torch::NoGradGuard no_grad;
    torch::Tensor input = torch::rand({1, net->config.in_channels, height, width});
    for (int i = 0; i < warmup; ++i) net->forward(input);
    std::vector<double> seconds;
    seconds.reserve(reps);
    for (int i = 0; i < reps; ++i) {
        const auto start = std::chrono::steady_clock::now();
        net->forward(input);
        const auto stop = std::chrono::steady_clock::now();
        seconds.push_back(std::chrono::duration<double>(stop - start).count());
    }
    if (was_training) net->train();
    return median(std::move(seconds));
}

}  // namespace uhrnet
