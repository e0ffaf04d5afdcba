#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "field.hpp"
#include "metrics.hpp"
#include "rng.hpp"

namespace fs = std::filesystem;

namespace uhrnet {

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0) {
        throw ConfigError("adam betas must lie in [0, 1)");
    }
    if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
    loss.validate();
    network.validate();
}

nlohmann::json train_config_to_json(const TrainConfig& cfg) {
    nlohmann::json jl, jn;
    to_json(jl, cfg.loss);
    to_json(jn, cfg.network);
    return nlohmann::json{{"epochs", cfg.epochs},
                          {"batch_size", cfg.batch_size},
                          {"learning_rate", cfg.learning_rate},
                          {"adam_beta1", cfg.adam_beta1},
                          {"adam_beta2", cfg.adam_beta2},
                          {"seed", cfg.seed},
                          {"checkpoint_every", cfg.checkpoint_every},
                          {"device_hint", cfg.device_hint},
                          {"loss", jl},
                          {"network", jn}};
}

namespace {

void collect_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> known,
                          const std::string& prefix, std::vector<std::string>& unknown) {
    for (const auto& item : j.items()) {
        bool found = false;
        for (const char* k : known) {
            if (item.key() == k) {
                found = true;
                break;
            }
        }
        if (!found) unknown.push_back(prefix.empty() ? item.key() : prefix + "." + item.key());
    }
}

}  // namespace

TrainConfig train_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("train config must be a JSON object");
    std::vector<std::string> unknown;
    collect_unknown_keys(j,
                         {"epochs", "batch_size", "learning_rate", "adam_beta1", "adam_beta2",
                          "seed", "checkpoint_every", "device_hint", "loss", "network"},
                         "", unknown);
    if (j.contains("loss") && j.at("loss").is_object()) {
        collect_unknown_keys(j.at("loss"),
                             {"alpha", "grid_rows", "grid_cols", "k1", "k2", "dynamic_range",
                              "ssim_mode", "window_size", "window_sigma", "reorder"},
                             "loss", unknown);
    }
    if (j.contains("network") && j.at("network").is_object()) {
        collect_unknown_keys(j.at("network"),
                             {"in_channels", "out_channels", "base_channels", "dilation_rates",
                              "leaky_slope", "use_mlb", "use_hfb", "variant"},
                             "network", unknown);
    }
    if (!unknown.empty()) {
        std::string joined;
        for (const auto& k : unknown) {
            if (!joined.empty()) joined += ", ";
            joined += k;
        }
        throw ConfigError("unknown config keys: " + joined);
    }

    TrainConfig cfg;
    if (j.contains("epochs")) j.at("epochs").get_to(cfg.epochs);
    if (j.contains("batch_size")) j.at("batch_size").get_to(cfg.batch_size);
    if (j.contains("learning_rate")) j.at("learning_rate").get_to(cfg.learning_rate);
    if (j.contains("adam_beta1")) j.at("adam_beta1").get_to(cfg.adam_beta1);
    if (j.contains("adam_beta2")) j.at("adam_beta2").get_to(cfg.adam_beta2);
    if (j.contains("seed")) j.at("seed").get_to(cfg.seed);
    if (j.contains("checkpoint_every")) j.at("checkpoint_every").get_to(cfg.checkpoint_every);
    if (j.contains("device_hint")) j.at("device_hint").get_to(cfg.device_hint);
    if (j.contains("loss")) from_json(j.at("loss"), cfg.loss);
    if (j.contains("network")) from_json(j.at("network"), cfg.network);
    cfg.validate();
    return cfg;
}

void to_json(nlohmann::json& j, const History& h) {
    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& e : h.epochs) {
        epochs.push_back({{"epoch", e.epoch},
                          {"train_loss", e.train_loss},
                          {"train_rmse_mm", e.train_rmse_mm},
                          {"train_ssim", e.train_ssim},
                          {"val_rmse_mm", e.val_rmse_mm},
                          {"val_ssim", e.val_ssim}});
    }
    j = nlohmann::json{{"epochs", epochs}, {"best_epoch", h.best_epoch}};
}

void from_json(const nlohmann::json& j, History& h) {
    h.epochs.clear();
    for (const auto& je : j.at("epochs")) {
        EpochRecord e;
        je.at("epoch").get_to(e.epoch);
        je.at("train_loss").get_to(e.train_loss);
        je.at("train_rmse_mm").get_to(e.train_rmse_mm);
        je.at("train_ssim").get_to(e.train_ssim);
        je.at("val_rmse_mm").get_to(e.val_rmse_mm);
        je.at("val_ssim").get_to(e.val_ssim);
        h.epochs.push_back(e);
    }
    j.at("best_epoch").get_to(h.best_epoch);
}

namespace {

fs::path sidecar_path(fs::path path) { return path.replace_extension(".json"); }

void atomic_write_text(const fs::path& path, const std::string& text) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << text;
    }
    fs::rename(tmp, path);
}

torch::Device device_from_hint(const std::string& hint) {
    if (hint.empty() || hint == "auto") {
        return torch::cuda::is_available() ? torch::Device(torch::kCUDA) : torch::Device(torch::kCPU);
    }
    if (hint == "cpu") return torch::Device(torch::kCPU);
    if (hint.rfind("cuda", 0) == 0) {
        if (!torch::cuda::is_available()) throw ConfigError("device_hint requests CUDA but it is unavailable");
        return torch::Device(hint);
    }
    throw ConfigError("unknown device_hint '" + hint + "' (expected cpu|cuda|auto)");
}

}  // namespace

void save_checkpoint(UHRNet& net, const CheckpointMeta& meta, const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    torch::serialize::OutputArchive archive;
    net->save(archive);
    archive.save_to(tmp.string());
    fs::rename(tmp, path);

    nlohmann::json jn, jl, jh;
    to_json(jn, meta.network);
    to_json(jl, meta.loss);
    to_json(jh, meta.history);
    nlohmann::json j{{"network", jn},
                     {"loss", jl},
                     {"epoch", meta.epoch},
                     {"height_scale_mm", meta.height_scale_mm},
                     {"history", jh},
                     {"config_digest", config_digest(meta.network, meta.height_scale_mm)}};
    atomic_write_text(sidecar_path(path), j.dump(2) + "\n");
}

UHRNet load_checkpoint(const fs::path& path, CheckpointMeta* meta_out) {
    const fs::path side = sidecar_path(path);
    std::ifstream in(side, std::ios::binary);
    if (!in) throw IoError("missing checkpoint sidecar " + side.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("unreadable checkpoint sidecar " + side.string() + ": " + e.what());
    }

    CheckpointMeta meta;
    from_json(j.at("network"), meta.network);
    from_json(j.at("loss"), meta.loss);
    j.at("epoch").get_to(meta.epoch);
    j.at("height_scale_mm").get_to(meta.height_scale_mm);
    from_json(j.at("history"), meta.history);

    UHRNet net(meta.network);
    if (!fs::exists(path)) throw IoError("missing checkpoint " + path.string());
    torch::serialize::InputArchive archive;
    archive.load_from(path.string());
    net->load(archive);
    net->eval();
    if (meta_out) *meta_out = meta;
    return net;
}

namespace {

struct LoadedSample {
    torch::Tensor input;    // 1x1xHxW fringe
    torch::Tensor gt_norm;  // 1x1xHxW height / height_scale_mm
    torch::Tensor mask;     // 1x1xHxW 0/1
};

}  // namespace

TrainResult train(const TrainConfig& cfg, const Manifest& manifest, const fs::path& manifest_dir,
                  const fs::path& out_dir, std::ostream* log) {
    cfg.validate();
    if (manifest.height_scale_mm <= 0.0) throw ConfigError("manifest height_scale_mm must be positive");
    if (manifest.canvas_height % 16 != 0 || manifest.canvas_width % 16 != 0) {
        throw ConfigError("canvas must be divisible by 16");
    }
    if (manifest.canvas_height % cfg.loss.grid_rows != 0 ||
        manifest.canvas_width % cfg.loss.grid_cols != 0) {
        throw ConfigError("canvas must tile evenly by the loss patch grid");
    }
    const std::vector<size_t> train_idx = manifest.indices_of(Split::Train);
    if (train_idx.empty()) throw ConfigError("empty train split");
    if (manifest.indices_of(Split::Val).empty()) throw ConfigError("empty validation split");

    torch::manual_seed(cfg.seed);
    const torch::Device device = device_from_hint(cfg.device_hint);
    const double scale = manifest.height_scale_mm;
    const bool use_fusion = cfg.network.variant == Variant::D;

    UHRNet net(cfg.network);
    net->to(device);
    net->train();
    torch::optim::Adam optimizer(
        net->parameters(),
        torch::optim::AdamOptions(cfg.learning_rate).betas({cfg.adam_beta1, cfg.adam_beta2}));

    std::unordered_map<size_t, LoadedSample> cache;
    for (size_t idx : train_idx) {
        const Sample s = load_sample(manifest_dir, manifest.records[idx]);
        LoadedSample loaded;
        loaded.input = field_to_tensor(s.fringe.intensities).to(device);
        loaded.gt_norm = (field_to_tensor(s.height.values) / scale).to(device);
        loaded.mask = mask_to_tensor(s.height.mask).to(device);
        cache.emplace(idx, std::move(loaded));
    }

    LossConfig metric_cfg;
    metric_cfg.dynamic_range = scale;

    fs::create_directories(out_dir);
    TrainResult result;
    result.best_checkpoint = out_dir / "best.pt";
    result.last_checkpoint = out_dir / "last.pt";
    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = 0;

    CheckpointMeta meta;
    meta.network = cfg.network;
    meta.loss = cfg.loss;
    meta.height_scale_mm = scale;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<size_t> order = train_idx;
        Rng epoch_rng(Rng::mix(cfg.seed ^ (0x9E3779B97F4A7C15ull * static_cast<uint64_t>(epoch))));
        epoch_rng.shuffle(order);

        std::unordered_map<size_t, torch::Tensor> frozen_order;
        if (use_fusion && cfg.loss.reorder == ReorderMode::PerEpoch) {
            net->eval();
            torch::NoGradGuard no_grad;
            for (size_t idx : train_idx) {
                const LoadedSample& s = cache.at(idx);
                torch::Tensor pred = net->forward(s.input);
                frozen_order.emplace(idx, patch_rank_order(patch_losses(pred, s.gt_norm, cfg.loss)));
            }
            net->train();
        }

        double loss_sum = 0.0;
        int batch_count = 0;
        double sq_err_mm = 0.0, mask_px = 0.0, ssim_sum = 0.0;
        int64_t sample_count = 0;

        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const size_t stop = std::min(order.size(), start + cfg.batch_size);
            std::vector<torch::Tensor> inputs, gts, masks, orders;
            for (size_t k = start; k < stop; ++k) {
                const LoadedSample& s = cache.at(order[k]);
                inputs.push_back(s.input);
                gts.push_back(s.gt_norm);
                masks.push_back(s.mask);
                if (!frozen_order.empty()) orders.push_back(frozen_order.at(order[k]));
            }
            torch::Tensor x = torch::cat(inputs, 0);
            torch::Tensor y = torch::cat(gts, 0);

            optimizer.zero_grad();
            torch::Tensor pred = net->forward(x);
            torch::Tensor loss;
            if (!use_fusion) {
                loss = mse(pred, y);
            } else if (!orders.empty()) {
                loss = fusion_loss_with_order(pred, y, cfg.loss, torch::cat(orders, 0));
            } else {
                loss = fusion_loss(pred, y, cfg.loss);
            }
            const double loss_value = loss.item<double>();
            if (!std::isfinite(loss_value)) {
                throw StateError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(batch_count + 1));
            }
            loss.backward();
            optimizer.step();
            loss_sum += loss_value;
            ++batch_count;

            torch::NoGradGuard no_grad;
            torch::Tensor m = torch::cat(masks, 0);
            torch::Tensor pred_mm = pred.detach() * scale;
            torch::Tensor gt_mm = y * scale;
            sq_err_mm += ((pred_mm - gt_mm).pow(2) * m).sum().item<double>();
            mask_px += m.sum().item<double>();
            const int64_t b = x.size(0);
            ssim_sum += ssim(pred_mm * m, gt_mm * m, metric_cfg).item<double>() * b;
            sample_count += b;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / batch_count;
        rec.train_rmse_mm = std::sqrt(sq_err_mm / mask_px);
        rec.train_ssim = ssim_sum / sample_count;
        std::tie(rec.val_rmse_mm, rec.val_ssim) = validate(net, manifest, manifest_dir, Split::Val);
        result.history.epochs.push_back(rec);

        if (rec.val_rmse_mm < best_val) {
            best_val = rec.val_rmse_mm;
            best_epoch = epoch;
            result.history.best_epoch = best_epoch;
            meta.epoch = epoch;
            meta.history = result.history;
            save_checkpoint(net, meta, result.best_checkpoint);
        }
        result.history.best_epoch = best_epoch;
        if ((cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0) || epoch == cfg.epochs) {
            meta.epoch = epoch;
            meta.history = result.history;
            save_checkpoint(net, meta, result.last_checkpoint);
        }
        if (log) {
            (*log) << "[epoch " << epoch << "/" << cfg.epochs << "] loss " << rec.train_loss
                   << " train_rmse " << rec.train_rmse_mm << "mm val_rmse " << rec.val_rmse_mm
                   << "mm val_ssim " << rec.val_ssim << std::endl;  // flush keeps logs tailable
        }
    }

    result.best_val_rmse_mm = best_val;
    return result;
}

std::pair<double, double> validate(UHRNet& net, const Manifest& manifest,
                                   const fs::path& manifest_dir, Split split) {
    const std::vector<size_t> indices = manifest.indices_of(split);
    if (indices.empty()) {
        throw ConfigError(std::string("no samples in split '") + split_name(split) + "'");
    }
    if (manifest.height_scale_mm <= 0.0) throw ConfigError("manifest height_scale_mm must be positive");
    const double scale = manifest.height_scale_mm;
    LossConfig metric_cfg;
    metric_cfg.dynamic_range = scale;

    const bool was_training = net->is_training();
    net->eval();
    double rmse_sum = 0.0, ssim_total = 0.0;
    {
        torch::NoGradGuard no_grad;
        for (size_t idx : indices) {
            const Sample s = load_sample(manifest_dir, manifest.records[idx]);
            torch::Tensor pred_mm = net->forward(field_to_tensor(s.fringe.intensities)) * scale;
            rmse_sum += masked_rmse(tensor_to_field(pred_mm), s.height.values, s.height.mask);
            torch::Tensor m = mask_to_tensor(s.height.mask);
            torch::Tensor gt_mm = field_to_tensor(s.height.values);
            ssim_total += ssim(pred_mm * m, gt_mm * m, metric_cfg).item<double>();
        }
    }
    if (was_training) net->train();
    const double n = static_cast<double>(indices.size());
    return {rmse_sum / n, ssim_total / n};
}

}  // namespace uhrnet
