#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <torch/torch.h>
// The caffe2 logging shims define glog-style CHECK macros; doctest's
// short names must win inside test code.
#undef CHECK
#undef CHECK_EQ
#undef CHECK_NE
#undef CHECK_LE
#undef CHECK_LT
#undef CHECK_GE
#undef CHECK_GT
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "dataset.hpp"
#include "field.hpp"
#include "image_io.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"
#include "trainer.hpp"

using namespace uhrnet;
namespace fs = std::filesystem;

namespace {

fs::path tiny_dataset() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "uhrnet_trainer_ds";
        fs::remove_all(d);
        DatasetSpec spec;
        spec.count = 6;
        spec.seed = 4;
        spec.scene.canvas_height = 32;
        spec.scene.canvas_width = 48;
        spec.scene.height_range_mm = 12.0;
        spec.fpp.fringe_periods = 8.0;
        spec.fpp.low_freq_periods = 2.0;
        Manifest m = generate_dataset(spec, d);
        split_manifest(m, SplitRatios{}, 5);
        save_manifest(m, d / "manifest.json");
        return d;
    }();
    return dir;
}

TrainConfig tiny_config(int epochs = 1) {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = 2;
    cfg.learning_rate = 1e-3;
    cfg.seed = 13;
    cfg.network = NetworkConfig::for_variant(Variant::D);
    cfg.network.base_channels = 8;
    return cfg;
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("uhrnet_trainer_" + name);
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("train config json rejects unknown keys and keeps defaults") {
    TrainConfig cfg;
    cfg.epochs = 17;
    cfg.learning_rate = 5e-4;
    cfg.network.variant = Variant::B;
    cfg.network = NetworkConfig::for_variant(Variant::B);
    cfg.loss.alpha = 250.0;
    nlohmann::json j = train_config_to_json(cfg);
    TrainConfig back = train_config_from_json(j);
    CHECK(back.epochs == 17);
    CHECK(back.learning_rate == 5e-4);
    CHECK(back.network.variant == Variant::B);
    CHECK(back.loss.alpha == 250.0);

    TrainConfig partial = train_config_from_json(nlohmann::json{{"epochs", 3}});
    CHECK(partial.epochs == 3);
    CHECK(partial.batch_size == 4);
    CHECK(partial.learning_rate == 1e-4);

    try {
        train_config_from_json(nlohmann::json{
            {"epochs", 3},
            {"momentum", 0.9},
            {"loss", {{"alpha", 1.0}, {"beta", 2.0}}},
            {"network", {{"width", 64}}},
        });
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("momentum") != std::string::npos);
        CHECK(msg.find("loss.beta") != std::string::npos);
        CHECK(msg.find("network.width") != std::string::npos);
    }

    TrainConfig bad;
    bad.epochs = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = TrainConfig{};
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = TrainConfig{};
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("history serializes and round trips") {
    History h;
    h.best_epoch = 2;
    for (int i = 1; i <= 3; ++i) {
        EpochRecord r;
        r.epoch = i;
        r.train_loss = 0.5 / i;
        r.train_rmse_mm = 1.0 / i;
        r.train_ssim = 0.1 * i;
        r.val_rmse_mm = 2.0 / i;
        r.val_ssim = 0.2 * i;
        h.epochs.push_back(r);
    }
    nlohmann::json j = h;
    History back = j.get<History>();
    CHECK(back.best_epoch == 2);
    REQUIRE(back.epochs.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(back.epochs[i].epoch == h.epochs[i].epoch);
        CHECK(back.epochs[i].train_loss == h.epochs[i].train_loss);
        CHECK(back.epochs[i].val_rmse_mm == h.epochs[i].val_rmse_mm);
        CHECK(back.epochs[i].val_ssim == h.epochs[i].val_ssim);
    }
}

TEST_CASE("checkpoints round trip weights and metadata") {
    fs::path dir = fresh_dir("ckpt");
    NetworkConfig cfg = NetworkConfig::for_variant(Variant::D);
    cfg.base_channels = 8;
    UHRNet net(cfg);

    CheckpointMeta meta;
    meta.network = cfg;
    meta.epoch = 7;
    meta.height_scale_mm = 12.0;
    EpochRecord r;
    r.epoch = 1;
    r.val_rmse_mm = 3.25;
    meta.history.epochs.push_back(r);
    meta.history.best_epoch = 1;

    const fs::path path = dir / "ck.pt";
    save_checkpoint(net, meta, path);
    CHECK(fs::exists(path));
    CHECK(fs::exists(dir / "ck.json"));

    CheckpointMeta loaded_meta;
    UHRNet loaded = load_checkpoint(path, &loaded_meta);
    CHECK(loaded_meta.epoch == 7);
    CHECK(loaded_meta.height_scale_mm == 12.0);
    CHECK(loaded_meta.network.base_channels == 8);
    CHECK(loaded_meta.network.variant == Variant::D);
    REQUIRE(loaded_meta.history.epochs.size() == 1);
    CHECK(loaded_meta.history.epochs[0].val_rmse_mm == 3.25);

    auto params = net->named_parameters();
    auto loaded_params = loaded->named_parameters();
    REQUIRE(params.size() == loaded_params.size());
    for (const auto& pair : params) {
        torch::Tensor other = *loaded_params.find(pair.key());
        CHECK(torch::equal(pair.value(), other));
    }
    auto buffers = net->named_buffers();
    auto loaded_buffers = loaded->named_buffers();
    for (const auto& pair : buffers) {
        torch::Tensor other = *loaded_buffers.find(pair.key());
        CHECK(torch::equal(pair.value(), other));
    }

    CHECK_THROWS_AS(load_checkpoint(dir / "none.pt"), IoError);
}

TEST_CASE("one epoch of training keeps honest books") {
    fs::path data = tiny_dataset();
    Manifest m = load_manifest(data / "manifest.json");
    fs::path out = fresh_dir("run1");

    std::ostringstream log;
    TrainResult result = train(tiny_config(1), m, data, out, &log);

    REQUIRE(result.history.epochs.size() == 1);
    const EpochRecord& rec = result.history.epochs[0];
    CHECK(rec.epoch == 1);
    CHECK(std::isfinite(rec.train_loss));
    CHECK(rec.train_rmse_mm > 0.0);
    CHECK(rec.val_rmse_mm > 0.0);
    CHECK(result.history.best_epoch == 1);
    CHECK(result.best_val_rmse_mm == rec.val_rmse_mm);
    CHECK(fs::exists(result.best_checkpoint));
    CHECK(fs::exists(result.last_checkpoint));
    CHECK(log.str().find("[epoch 1/1]") != std::string::npos);

    // The best checkpoint reproduces the recorded validation metrics.
    CheckpointMeta meta;
    UHRNet best = load_checkpoint(result.best_checkpoint, &meta);
    CHECK(meta.epoch == 1);
    CHECK(meta.height_scale_mm == m.height_scale_mm);
    auto [rmse, ssim_value] = validate(best, m, data, Split::Val);
    CHECK(std::abs(rmse - rec.val_rmse_mm) < 1e-9);
    CHECK(std::abs(ssim_value - rec.val_ssim) < 1e-9);
}

TEST_CASE("training is deterministic under a fixed seed") {
    fs::path data = tiny_dataset();
    Manifest m = load_manifest(data / "manifest.json");

    TrainResult a = train(tiny_config(2), m, data, fresh_dir("detA"));
    TrainResult b = train(tiny_config(2), m, data, fresh_dir("detB"));
    REQUIRE(a.history.epochs.size() == b.history.epochs.size());
    for (size_t i = 0; i < a.history.epochs.size(); ++i) {
        CHECK(a.history.epochs[i].train_loss == b.history.epochs[i].train_loss);
        CHECK(a.history.epochs[i].train_rmse_mm == b.history.epochs[i].train_rmse_mm);
        CHECK(a.history.epochs[i].val_rmse_mm == b.history.epochs[i].val_rmse_mm);
        CHECK(a.history.epochs[i].val_ssim == b.history.epochs[i].val_ssim);
    }

    TrainConfig other = tiny_config(2);
    other.seed = 14;
    TrainResult c = train(other, m, data, fresh_dir("detC"));
    bool any_diff = false;
    for (size_t i = 0; i < a.history.epochs.size(); ++i) {
        if (a.history.epochs[i].train_loss != c.history.epochs[i].train_loss) any_diff = true;
    }
    CHECK(any_diff);
}

TEST_CASE("independent validation agrees with the evaluation module") {
    fs::path data = tiny_dataset();
    Manifest m = load_manifest(data / "manifest.json");

    NetworkConfig cfg = NetworkConfig::for_variant(Variant::D);
    cfg.base_channels = 8;
    UHRNet net(cfg);
    auto [rmse, ssim_value] = validate(net, m, data, Split::Val);
    EvalReport report = evaluate(net, m, data, Split::Val);
    CHECK(std::abs(rmse - report.rmse_mm_mean) < 1e-9);
    CHECK(std::abs(ssim_value - report.ssim_mean) < 1e-9);
}

TEST_CASE("per-epoch frozen ranks train end to end") {
    fs::path data = tiny_dataset();
    Manifest m = load_manifest(data / "manifest.json");
    TrainConfig cfg = tiny_config(2);
    cfg.loss.reorder = ReorderMode::PerEpoch;
    TrainResult result = train(cfg, m, data, fresh_dir("frozen"));
    REQUIRE(result.history.epochs.size() == 2);
    for (const EpochRecord& rec : result.history.epochs) CHECK(std::isfinite(rec.train_loss));
}

TEST_CASE("periodic checkpointing can be disabled") {
    fs::path data = tiny_dataset();
    Manifest m = load_manifest(data / "manifest.json");
    TrainConfig cfg = tiny_config(2);
    cfg.checkpoint_every = 0;
    fs::path out = fresh_dir("nockpt");
    TrainResult result = train(cfg, m, data, out);
    CHECK(fs::exists(result.last_checkpoint));  // final save still happens
    CheckpointMeta meta;
    load_checkpoint(result.last_checkpoint, &meta);
    CHECK(meta.epoch == 2);
}

TEST_CASE("missing splits and bad geometry are rejected up front") {
    fs::path data = tiny_dataset();
    Manifest m = load_manifest(data / "manifest.json");

    Manifest no_val = m;
    for (auto& r : no_val.records) {
        if (r.split == Split::Val) r.split = Split::Train;
    }
    CHECK_THROWS_AS(train(tiny_config(), no_val, data, fresh_dir("noval")), ConfigError);

    Manifest no_train = m;
    for (auto& r : no_train.records) r.split = Split::Val;
    CHECK_THROWS_AS(train(tiny_config(), no_train, data, fresh_dir("notrain")), ConfigError);

    Manifest bad_canvas = m;
    bad_canvas.canvas_height = 33;
    CHECK_THROWS_AS(train(tiny_config(), bad_canvas, data, fresh_dir("badcanvas")), ConfigError);

    TrainConfig bad_grid = tiny_config();
    bad_grid.loss.grid_cols = 7;  // 48 % 7 != 0
    CHECK_THROWS_AS(train(bad_grid, m, data, fresh_dir("badgrid")), ConfigError);

    TrainConfig bad_device = tiny_config();
    bad_device.device_hint = "gpu7";
    CHECK_THROWS_AS(train(bad_device, m, data, fresh_dir("baddevice")), ConfigError);
}

TEST_CASE("a non-finite loss aborts with the failing location") {
    fs::path data = fresh_dir("nan_ds");
    DatasetSpec spec;
    spec.count = 4;
    spec.seed = 21;
    spec.scene.canvas_height = 32;
    spec.scene.canvas_width = 48;
    spec.fpp.fringe_periods = 8.0;
    spec.fpp.low_freq_periods = 2.0;
    Manifest m = generate_dataset(spec, data);
    split_manifest(m, SplitRatios{0.5, 0.5, 0.0}, 1);

    // Poison one training height map with a NaN inside the mask.
    for (const auto& r : m.records) {
        if (r.split != Split::Train) continue;
        Field h = read_pfm(data / r.height_path);
        h.at(0, 0) = std::numeric_limits<float>::quiet_NaN();
        write_pfm(data / r.height_path, h);
    }
    save_manifest(m, data / "manifest.json");

    try {
        train(tiny_config(1), m, data, fresh_dir("nan_run"));
        FAIL("expected a state error");
    } catch (const StateError& e) {
        CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
    }
}
