#include "uhrnet/uhrnet.h"

#include <cstring>
#include <fstream>
#include <new>
#include <string>

#include "dataset.hpp"
#include "field.hpp"
#include "image_io.hpp"
#include "metrics.hpp"
#include "network.hpp"
#include "pipeline.hpp"
#include "plots.hpp"
#include "trainer.hpp"

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = new (std::nothrow) char[s.size() + 1];
    if (!out) return nullptr;
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

uhr_status fail(uhr_status code, const std::string& message) {
    g_last_error = message;
    return code;
}

template <typename Fn>
uhr_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return UHR_OK;
    } catch (const uhrnet::ConfigError& e) {
        return fail(UHR_ERR_CONFIG, e.what());
    } catch (const uhrnet::ShapeError& e) {
        return fail(UHR_ERR_SHAPE, e.what());
    } catch (const uhrnet::StateError& e) {
        return fail(UHR_ERR_STATE, e.what());
    } catch (const uhrnet::IoError& e) {
        return fail(UHR_ERR_IO, e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(UHR_ERR_CONFIG, e.what());
    } catch (const std::exception& e) {
        return fail(UHR_ERR_RUNTIME, e.what());
    } catch (...) {
        return fail(UHR_ERR_RUNTIME, "unknown error");
    }
}

uhr_status require_arg(const void* p, const char* name) {
    if (p) return UHR_OK;
    return fail(UHR_ERR_CONFIG, std::string("null argument: ") + name);
}

nlohmann::json parse_json_text(const char* text, const char* what) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw uhrnet::ConfigError(std::string(what) + ": " + e.what());
    }
}

nlohmann::json load_json_file(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw uhrnet::IoError(std::string(what) + ": cannot open " + path.string());
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw uhrnet::IoError(std::string(what) + ": " + path.string() + ": " + e.what());
    }
}

}  // namespace

struct uhr_net {
    uhrnet::UHRNet net{nullptr};
    uhrnet::CheckpointMeta meta;
    bool has_meta = false;
};

extern "C" {

const char* uhr_version(void) { return "1.0.0"; }

const char* uhr_last_error(void) { return g_last_error.c_str(); }

void uhr_string_free(char* s) { delete[] s; }

uhr_status uhr_generate_dataset(const char* spec_json, const char* out_dir) {
    if (require_arg(spec_json, "spec_json") || require_arg(out_dir, "out_dir")) return UHR_ERR_CONFIG;
    return guarded([&] {
        uhrnet::DatasetSpec spec =
            uhrnet::dataset_spec_from_json(parse_json_text(spec_json, "dataset spec"));
        uhrnet::generate_dataset(spec, out_dir);
    });
}

uhr_status uhr_ingest_dataset(const char* src_dir, const char* adapter, const char* out_dir) {
    if (require_arg(src_dir, "src_dir") || require_arg(adapter, "adapter") ||
        require_arg(out_dir, "out_dir")) {
        return UHR_ERR_CONFIG;
    }
    return guarded([&] { uhrnet::ingest_external(src_dir, adapter, out_dir); });
}

uhr_status uhr_split_dataset(const char* manifest_path, double train, double val, double test,
                             uint64_t seed, int allow_degenerate) {
    if (require_arg(manifest_path, "manifest_path")) return UHR_ERR_CONFIG;
    return guarded([&] {
        uhrnet::Manifest manifest = uhrnet::load_manifest(manifest_path);
        uhrnet::split_manifest(manifest, {train, val, test}, seed, allow_degenerate != 0);
        uhrnet::save_manifest(manifest, manifest_path);
    });
}

uhr_status uhr_train(const char* config_json, const char* manifest_path, const char* out_dir,
                     char** history_json_out) {
    if (require_arg(config_json, "config_json") || require_arg(manifest_path, "manifest_path") ||
        require_arg(out_dir, "out_dir")) {
        return UHR_ERR_CONFIG;
    }
    return guarded([&] {
        uhrnet::TrainConfig cfg =
            uhrnet::train_config_from_json(parse_json_text(config_json, "train config"));
        uhrnet::Manifest manifest = uhrnet::load_manifest(manifest_path);
        std::filesystem::path manifest_dir = std::filesystem::path(manifest_path).parent_path();
        std::filesystem::create_directories(out_dir);
        std::ofstream log(std::filesystem::path(out_dir) / "train.log",
                          std::ios::binary | std::ios::trunc);
        uhrnet::TrainResult result =
            uhrnet::train(cfg, manifest, manifest_dir, out_dir, log ? &log : nullptr);

        nlohmann::json jh;
        to_json(jh, result.history);
        const std::string text = jh.dump(2) + "\n";
        std::ofstream out(std::filesystem::path(out_dir) / "history.json",
                          std::ios::binary | std::ios::trunc);
        if (!out) throw uhrnet::IoError("cannot write history.json under " + std::string(out_dir));
        out << text;
        if (history_json_out) *history_json_out = dup_string(text);
    });
}

uhr_status uhr_evaluate(const char* checkpoint_path, const char* manifest_path, const char* split,
                        int timing_reps, char** report_json_out) {
    if (require_arg(checkpoint_path, "checkpoint_path") ||
        require_arg(manifest_path, "manifest_path") || require_arg(split, "split")) {
        return UHR_ERR_CONFIG;
    }
    return guarded([&] {
        uhrnet::CheckpointMeta meta;
        uhrnet::UHRNet net = uhrnet::load_checkpoint(checkpoint_path, &meta);
        uhrnet::Manifest manifest = uhrnet::load_manifest(manifest_path);
        std::filesystem::path manifest_dir = std::filesystem::path(manifest_path).parent_path();
        uhrnet::EvalReport report =
            uhrnet::evaluate(net, manifest, manifest_dir, uhrnet::split_from_name(split));
        if (timing_reps > 0) {
            report.inference_seconds = uhrnet::time_inference(net, manifest.canvas_height,
                                                              manifest.canvas_width, 1, timing_reps);
        }
        if (report_json_out) {
            nlohmann::json j;
            to_json(j, report);
            *report_json_out = dup_string(j.dump(2) + "\n");
        }
    });
}

uhr_status uhr_net_create(const char* network_json, uhr_net** out) {
    if (require_arg(network_json, "network_json") || require_arg(out, "out")) return UHR_ERR_CONFIG;
    *out = nullptr;
    return guarded([&] {
        uhrnet::NetworkConfig cfg;
        from_json(parse_json_text(network_json, "network config"), cfg);
        cfg.validate();
        auto* handle = new uhr_net;
        handle->net = uhrnet::UHRNet(cfg);
        handle->net->eval();
        *out = handle;
    });
}

uhr_status uhr_net_load(const char* checkpoint_path, uhr_net** out) {
    if (require_arg(checkpoint_path, "checkpoint_path") || require_arg(out, "out")) {
        return UHR_ERR_CONFIG;
    }
    *out = nullptr;
    return guarded([&] {
        auto* handle = new uhr_net;
        try {
            handle->net = uhrnet::load_checkpoint(checkpoint_path, &handle->meta);
            handle->has_meta = true;
        } catch (...) {
            delete handle;
            throw;
        }
        *out = handle;
    });
}

void uhr_net_free(uhr_net* net) { delete net; }

uhr_status uhr_net_param_count(const uhr_net* net, int64_t* count_out) {
    if (require_arg(net, "net") || require_arg(count_out, "count_out")) return UHR_ERR_CONFIG;
    return guarded([&] { *count_out = uhrnet::count_parameters(*net->net); });
}

uhr_status uhr_net_forward(uhr_net* net, const float* input, int32_t height, int32_t width,
                           float* output) {
    if (require_arg(net, "net") || require_arg(input, "input") || require_arg(output, "output")) {
        return UHR_ERR_CONFIG;
    }
    return guarded([&] {
        if (height < 16 || width < 16) {
            throw uhrnet::ShapeError("input dimensions must be at least 16x16");
        }
        torch::NoGradGuard no_grad;
        net->net->eval();
        torch::Tensor x = torch::from_blob(const_cast<float*>(input), {1, 1, height, width},
                                           torch::kFloat32);
        torch::Tensor y = net->net->forward(x).contiguous();
        std::memcpy(output, y.data_ptr<float>(),
                    sizeof(float) * static_cast<size_t>(height) * width);
    });
}

uhr_status uhr_predict(const char* checkpoint_path, const char* fringe_png_path,
                       const char* out_height_pfm_path) {
    if (require_arg(checkpoint_path, "checkpoint_path") ||
        require_arg(fringe_png_path, "fringe_png_path") ||
        require_arg(out_height_pfm_path, "out_height_pfm_path")) {
        return UHR_ERR_CONFIG;
    }
    return guarded([&] {
        uhrnet::CheckpointMeta meta;
        uhrnet::UHRNet net = uhrnet::load_checkpoint(checkpoint_path, &meta);
        uhrnet::Field fringe = uhrnet::read_gray_png(fringe_png_path);
        torch::NoGradGuard no_grad;
        net->eval();
        torch::Tensor pred = net->forward(uhrnet::field_to_tensor(fringe));
        if (meta.height_scale_mm > 0.0) pred = pred * meta.height_scale_mm;
        uhrnet::write_pfm(out_height_pfm_path, uhrnet::tensor_to_field(pred));
    });
}

uhr_status uhr_plot_history(const char* history_json_path, const char* out_svg_path) {
    if (require_arg(history_json_path, "history_json_path") ||
        require_arg(out_svg_path, "out_svg_path")) {
        return UHR_ERR_CONFIG;
    }
    return guarded([&] {
        nlohmann::json j = load_json_file(history_json_path, "history");
        uhrnet::History history;
        from_json(j.contains("history") ? j.at("history") : j, history);
        uhrnet::plot_history_svg(history, out_svg_path);
    });
}

uhr_status uhr_plot_cross_section(const char* pred_pfm_path, const char* gt_pfm_path, int32_t row,
                                  const char* out_svg_path) {
    if (require_arg(pred_pfm_path, "pred_pfm_path") || require_arg(gt_pfm_path, "gt_pfm_path") ||
        require_arg(out_svg_path, "out_svg_path")) {
        return UHR_ERR_CONFIG;
    }
    return guarded([&] {
        uhrnet::Field pred = uhrnet::read_pfm(pred_pfm_path);
        uhrnet::Field gt = uhrnet::read_pfm(gt_pfm_path);
        uhrnet::plot_cross_section_svg(pred, gt, row, out_svg_path);
    });
}

uhr_status uhr_plot_error_map(const char* pred_pfm_path, const char* gt_pfm_path,
                              const char* mask_png_path, const char* out_png_path) {
    if (require_arg(pred_pfm_path, "pred_pfm_path") || require_arg(gt_pfm_path, "gt_pfm_path") ||
        require_arg(out_png_path, "out_png_path")) {
        return UHR_ERR_CONFIG;
    }
    return guarded([&] {
        uhrnet::Field pred = uhrnet::read_pfm(pred_pfm_path);
        uhrnet::Field gt = uhrnet::read_pfm(gt_pfm_path);
        uhrnet::Mask mask;
        if (mask_png_path && *mask_png_path) {
            mask = uhrnet::read_mask_png(mask_png_path);
        } else {
            mask = uhrnet::Mask(pred.height, pred.width, 1);
        }
        uhrnet::write_error_map_png(pred, gt, mask, out_png_path);
    });
}

}  // extern "C"
