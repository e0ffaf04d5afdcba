// Command-line front end. Talks to the library exclusively through the
// C API in uhrnet/uhrnet.h. Exit codes: 0 success, 1 usage/config error,
// 2 runtime error (IO, shapes, state).

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "uhrnet/uhrnet.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

int exit_code_for(uhr_status status) {
    switch (status) {
        case UHR_OK: return kExitOk;
        case UHR_ERR_CONFIG: return kExitUsage;
        default: return kExitRuntime;
    }
}

int report_failure(const std::string& what, uhr_status status) {
    std::cerr << "error: " << what << ": " << uhr_last_error() << "\n";
    return exit_code_for(status);
}

// Relative paths can be anchored by UHRNET_DATA_ROOT.
std::string resolve_path(const std::string& path) {
    const char* root = std::getenv("UHRNET_DATA_ROOT");
    if (!root || !*root || path.empty() || fs::path(path).is_absolute()) return path;
    return (fs::path(root) / path).string();
}

std::string read_text_file(const std::string& path, int& exit_code) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot open " << path << "\n";
        exit_code = kExitRuntime;
        return {};
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    exit_code = kExitOk;
    return text;
}

void print_artifact(const std::string& path) { std::cout << "wrote " << path << "\n"; }

struct GenArgs {
    std::string out;
    int count = 16;
    uint64_t seed = 0;
    int canvas_height = 352;
    int canvas_width = 640;
    double height_range = 20.0;
    std::string layout = "mixed";
    double detail = 0.5;
    int blob_min = 3;
    int blob_max = 6;
    double ambient = 0.5;
    double modulation = 0.4;
    double fringe_periods = 32.0;
    double low_periods = 4.0;
    int steps = 4;
    double height_coeff = 2.0;
    double noise = 0.0;
    double gamma = 1.0;
};

int run_gen(const GenArgs& a) {
    json spec{{"count", a.count},
              {"seed", a.seed},
              {"canvas_height", a.canvas_height},
              {"canvas_width", a.canvas_width},
              {"height_range_mm", a.height_range},
              {"layout", a.layout},
              {"detail_amplitude_mm", a.detail},
              {"blob_count_min", a.blob_min},
              {"blob_count_max", a.blob_max},
              {"ambient", a.ambient},
              {"modulation", a.modulation},
              {"fringe_periods", a.fringe_periods},
              {"low_freq_periods", a.low_periods},
              {"phase_steps", a.steps},
              {"height_coeff_k", a.height_coeff},
              {"noise_sigma", a.noise},
              {"gamma", a.gamma}};
    const std::string out = resolve_path(a.out);
    uhr_status status = uhr_generate_dataset(spec.dump().c_str(), out.c_str());
    if (status != UHR_OK) return report_failure("gen", status);
    print_artifact((fs::path(out) / "manifest.json").string());
    return kExitOk;
}

int run_ingest(const std::string& src, const std::string& adapter, const std::string& out) {
    const std::string src_r = resolve_path(src), out_r = resolve_path(out);
    uhr_status status = uhr_ingest_dataset(src_r.c_str(), adapter.c_str(), out_r.c_str());
    if (status != UHR_OK) return report_failure("ingest", status);
    print_artifact((fs::path(out_r) / "manifest.json").string());
    return kExitOk;
}

int run_split(const std::string& manifest, double train, double val, double test, uint64_t seed,
              bool allow_degenerate) {
    const std::string path = resolve_path(manifest);
    uhr_status status = uhr_split_dataset(path.c_str(), train, val, test, seed,
                                          allow_degenerate ? 1 : 0);
    if (status != UHR_OK) return report_failure("split", status);
    print_artifact(path);
    return kExitOk;
}

int run_train(const std::string& config, const std::string& manifest, const std::string& out) {
    int rc = kExitOk;
    const std::string text = read_text_file(resolve_path(config), rc);
    if (rc != kExitOk) return rc;
    const std::string manifest_r = resolve_path(manifest), out_r = resolve_path(out);
    char* history = nullptr;
    uhr_status status = uhr_train(text.c_str(), manifest_r.c_str(), out_r.c_str(), &history);
    if (status != UHR_OK) return report_failure("train", status);
    json h = json::parse(history);
    uhr_string_free(history);
    print_artifact((fs::path(out_r) / "best.pt").string());
    print_artifact((fs::path(out_r) / "last.pt").string());
    print_artifact((fs::path(out_r) / "history.json").string());
    std::cout << "best epoch " << h.at("best_epoch").get<int>() << " of "
              << h.at("epochs").size() << "\n";
    return kExitOk;
}

int run_eval(const std::string& checkpoint, const std::string& manifest, const std::string& split,
             int timing_reps, const std::string& out) {
    const std::string ckpt = resolve_path(checkpoint), mani = resolve_path(manifest);
    char* report = nullptr;
    uhr_status status = uhr_evaluate(ckpt.c_str(), mani.c_str(), split.c_str(), timing_reps, &report);
    if (status != UHR_OK) return report_failure("eval", status);
    const std::string text = report;
    uhr_string_free(report);
    if (!out.empty()) {
        const std::string out_r = resolve_path(out);
        std::ofstream f(out_r, std::ios::binary | std::ios::trunc);
        if (!f) {
            std::cerr << "error: cannot write " << out_r << "\n";
            return kExitRuntime;
        }
        f << text;
        print_artifact(out_r);
    }
    json j = json::parse(text);
    std::cout << "split " << split << ": n " << j.at("n_samples").get<int>() << ", rmse "
              << j.at("rmse_mm_mean").get<double>() << " mm, ssim " << j.at("ssim_mean").get<double>()
              << ", params " << j.at("params").get<int64_t>();
    if (timing_reps > 0) std::cout << ", inference " << j.at("inference_seconds").get<double>() << " s";
    std::cout << "\n";
    return kExitOk;
}

int run_predict(const std::string& checkpoint, const std::string& fringe, const std::string& out,
                const std::string& plot_svg, int plot_row, const std::string& plot_gt) {
    const std::string ckpt = resolve_path(checkpoint), fr = resolve_path(fringe),
                      out_r = resolve_path(out);
    uhr_status status = uhr_predict(ckpt.c_str(), fr.c_str(), out_r.c_str());
    if (status != UHR_OK) return report_failure("predict", status);
    print_artifact(out_r);
    if (!plot_svg.empty()) {
        if (plot_gt.empty()) {
            std::cerr << "error: --plot requires --gt for the reference profile\n";
            return kExitUsage;
        }
        const std::string svg = resolve_path(plot_svg), gt = resolve_path(plot_gt);
        status = uhr_plot_cross_section(out_r.c_str(), gt.c_str(), plot_row, svg.c_str());
        if (status != UHR_OK) return report_failure("predict plot", status);
        print_artifact(svg);
    }
    return kExitOk;
}

int run_ablate(const std::string& manifest, const std::string& out, int epochs, int batch_size,
               double lr, uint64_t seed, const std::vector<std::string>& variants) {
    const std::string mani = resolve_path(manifest);
    const fs::path out_dir = resolve_path(out);

    struct Row {
        std::string variant;
        double params_m = 0.0;
        double rmse = 0.0;
        double ssim = 0.0;
        double seconds = 0.0;
    };
    std::vector<Row> rows;

    for (const std::string& v : variants) {
        json cfg{{"epochs", epochs},
                 {"batch_size", batch_size},
                 {"learning_rate", lr},
                 {"seed", seed},
                 {"checkpoint_every", 0},
                 {"network", {{"variant", v}}}};
        const fs::path run_dir = out_dir / ("variant_" + v);
        std::cout << "training variant " << v << " (" << epochs << " epochs)...\n";
        uhr_status status = uhr_train(cfg.dump().c_str(), mani.c_str(), run_dir.string().c_str(),
                                      nullptr);
        if (status != UHR_OK) return report_failure("ablate train " + v, status);

        char* report = nullptr;
        const fs::path best = run_dir / "best.pt";
        status = uhr_evaluate(best.string().c_str(), mani.c_str(), "test", 3, &report);
        if (status != UHR_OK) return report_failure("ablate eval " + v, status);
        json j = json::parse(report);
        uhr_string_free(report);

        Row row;
        row.variant = v;
        row.params_m = j.at("params").get<double>() / 1e6;
        row.rmse = j.at("rmse_mm_mean").get<double>();
        row.ssim = j.at("ssim_mean").get<double>();
        row.seconds = j.at("inference_seconds").get<double>();
        rows.push_back(row);
    }

    json table = json::array();
    std::printf("\n%-8s%-12s%-12s%-10s%s\n", "Model", "Param(M)", "RMSE(mm)", "SSIM", "Speed(s)");
    for (const Row& r : rows) {
        std::printf("%-8s%-12.2f%-12.4f%-10.4f%.4f\n", r.variant.c_str(), r.params_m, r.rmse,
                    r.ssim, r.seconds);
        table.push_back({{"variant", r.variant},
                         {"params_m", r.params_m},
                         {"rmse_mm", r.rmse},
                         {"ssim", r.ssim},
                         {"inference_seconds", r.seconds}});
    }
    const fs::path table_path = out_dir / "ablation.json";
    std::ofstream f(table_path, std::ios::binary | std::ios::trunc);
    if (!f) {
        std::cerr << "error: cannot write " << table_path.string() << "\n";
        return kExitRuntime;
    }
    f << table.dump(2) << "\n";
    print_artifact(table_path.string());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fringe-to-height reconstruction pipeline (library " +
                 std::string(uhr_version()) + ")"};
    app.require_subcommand(1);

    GenArgs gen;
    CLI::App* cmd_gen = app.add_subcommand("gen", "Generate a synthetic fringe/height dataset");
    cmd_gen->add_option("--out", gen.out, "Output dataset directory")->required();
    cmd_gen->add_option("--count", gen.count, "Number of samples");
    cmd_gen->add_option("--seed", gen.seed, "Master RNG seed");
    cmd_gen->add_option("--canvas-height", gen.canvas_height, "Canvas height (divisible by 16)");
    cmd_gen->add_option("--canvas-width", gen.canvas_width, "Canvas width (divisible by 16)");
    cmd_gen->add_option("--height-range", gen.height_range, "Peak-to-peak surface height, mm");
    cmd_gen->add_option("--layout", gen.layout, "single|separated|overlapping|mixed");
    cmd_gen->add_option("--detail", gen.detail, "Fine-texture amplitude, mm");
    cmd_gen->add_option("--blob-min", gen.blob_min, "Min bumps per object");
    cmd_gen->add_option("--blob-max", gen.blob_max, "Max bumps per object");
    cmd_gen->add_option("--ambient", gen.ambient, "Fringe ambient level A");
    cmd_gen->add_option("--modulation", gen.modulation, "Fringe modulation B");
    cmd_gen->add_option("--fringe-periods", gen.fringe_periods, "Carrier periods across width");
    cmd_gen->add_option("--low-periods", gen.low_periods, "Low unwrapping frequency periods");
    cmd_gen->add_option("--steps", gen.steps, "Phase steps N");
    cmd_gen->add_option("--height-coeff", gen.height_coeff, "Phase-to-height K, mm/rad");
    cmd_gen->add_option("--noise", gen.noise, "Gaussian noise sigma");
    cmd_gen->add_option("--gamma", gen.gamma, "Projector gamma");

    std::string ingest_src, ingest_adapter = "pairs", ingest_out;
    CLI::App* cmd_ingest = app.add_subcommand("ingest", "Import an external dataset directory");
    cmd_ingest->add_option("--src", ingest_src, "Source directory")->required();
    cmd_ingest->add_option("--adapter", ingest_adapter, "native|pairs");
    cmd_ingest->add_option("--out", ingest_out, "Output dataset directory")->required();

    std::string split_manifest;
    double split_train = 0.8, split_val = 0.1, split_test = 0.1;
    uint64_t split_seed = 0;
    bool split_degenerate = false;
    CLI::App* cmd_split = app.add_subcommand("split", "Assign train/val/test splits in a manifest");
    cmd_split->add_option("--manifest", split_manifest, "Path to manifest.json")->required();
    cmd_split->add_option("--train", split_train, "Train fraction");
    cmd_split->add_option("--val", split_val, "Validation fraction");
    cmd_split->add_option("--test", split_test, "Test fraction");
    cmd_split->add_option("--seed", split_seed, "Shuffle seed");
    cmd_split->add_flag("--allow-degenerate", split_degenerate, "Permit splits of <3 records");

    std::string train_config, train_manifest, train_out;
    CLI::App* cmd_train = app.add_subcommand("train", "Train from a JSON config file");
    cmd_train->add_option("--config", train_config, "Train config JSON file")->required();
    cmd_train->add_option("--manifest", train_manifest, "Path to manifest.json")->required();
    cmd_train->add_option("--out", train_out, "Run directory for checkpoints/history")->required();

    std::string eval_checkpoint, eval_manifest, eval_split = "test", eval_out;
    int eval_timing = 5;
    CLI::App* cmd_eval = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
    cmd_eval->add_option("--checkpoint", eval_checkpoint, "Checkpoint .pt path")->required();
    cmd_eval->add_option("--manifest", eval_manifest, "Path to manifest.json")->required();
    cmd_eval->add_option("--split", eval_split, "train|val|test");
    cmd_eval->add_option("--timing-reps", eval_timing, "Inference timing repetitions (0 = skip)");
    cmd_eval->add_option("--out", eval_out, "Write the evaluation report JSON here");

    std::string pred_checkpoint, pred_fringe, pred_out, pred_plot, pred_gt;
    int pred_row = 0;
    CLI::App* cmd_predict = app.add_subcommand("predict", "Fringe PNG to height PFM");
    cmd_predict->add_option("--checkpoint", pred_checkpoint, "Checkpoint .pt path")->required();
    cmd_predict->add_option("--fringe", pred_fringe, "Input fringe PNG")->required();
    cmd_predict->add_option("--out", pred_out, "Output height PFM (mm)")->required();
    cmd_predict->add_option("--plot", pred_plot, "Also write a cross-section SVG here");
    cmd_predict->add_option("--row", pred_row, "Cross-section row");
    cmd_predict->add_option("--gt", pred_gt, "Ground-truth PFM for the cross-section");

    CLI::App* cmd_plot = app.add_subcommand("plot", "Render plots from saved artifacts");
    cmd_plot->require_subcommand(1);
    std::string ph_history, ph_out;
    CLI::App* plot_history = cmd_plot->add_subcommand("history", "Training curves SVG");
    plot_history->add_option("--history", ph_history, "history.json (or checkpoint sidecar)")
        ->required();
    plot_history->add_option("--out", ph_out, "Output SVG")->required();
    std::string pc_pred, pc_gt, pc_out;
    int pc_row = 0;
    CLI::App* plot_cross = cmd_plot->add_subcommand("cross-section", "Row profile SVG");
    plot_cross->add_option("--pred", pc_pred, "Prediction PFM")->required();
    plot_cross->add_option("--gt", pc_gt, "Ground-truth PFM")->required();
    plot_cross->add_option("--row", pc_row, "Row index");
    plot_cross->add_option("--out", pc_out, "Output SVG")->required();
    std::string pe_pred, pe_gt, pe_mask, pe_out;
    CLI::App* plot_err = cmd_plot->add_subcommand("error-map", "Absolute-error PNG");
    plot_err->add_option("--pred", pe_pred, "Prediction PFM")->required();
    plot_err->add_option("--gt", pe_gt, "Ground-truth PFM")->required();
    plot_err->add_option("--mask", pe_mask, "Mask PNG (optional)");
    plot_err->add_option("--out", pe_out, "Output PNG")->required();

    std::string ab_manifest, ab_out, ab_variants = "A,B,C,D";
    int ab_epochs = 50, ab_batch = 4;
    double ab_lr = 1e-4;
    uint64_t ab_seed = 0;
    CLI::App* cmd_ablate = app.add_subcommand("ablate", "Train and compare network variants");
    cmd_ablate->add_option("--manifest", ab_manifest, "Path to a split manifest.json")->required();
    cmd_ablate->add_option("--out", ab_out, "Directory for per-variant runs")->required();
    cmd_ablate->add_option("--epochs", ab_epochs, "Epochs per variant");
    cmd_ablate->add_option("--batch-size", ab_batch, "Batch size");
    cmd_ablate->add_option("--lr", ab_lr, "Learning rate");
    cmd_ablate->add_option("--seed", ab_seed, "Seed shared by all variants");
    cmd_ablate->add_option("--variants", ab_variants, "Comma-separated subset of A,B,C,D");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (cmd_gen->parsed()) return run_gen(gen);
    if (cmd_ingest->parsed()) return run_ingest(ingest_src, ingest_adapter, ingest_out);
    if (cmd_split->parsed()) {
        return run_split(split_manifest, split_train, split_val, split_test, split_seed,
                         split_degenerate);
    }
    if (cmd_train->parsed()) return run_train(train_config, train_manifest, train_out);
    if (cmd_eval->parsed()) {
        return run_eval(eval_checkpoint, eval_manifest, eval_split, eval_timing, eval_out);
    }
    if (cmd_predict->parsed()) {
        return run_predict(pred_checkpoint, pred_fringe, pred_out, pred_plot, pred_row, pred_gt);
    }
    if (cmd_plot->parsed()) {
        uhr_status status = UHR_OK;
        std::string what, artifact;
        if (plot_history->parsed()) {
            const std::string h = resolve_path(ph_history), o = resolve_path(ph_out);
            status = uhr_plot_history(h.c_str(), o.c_str());
            what = "plot history";
            artifact = o;
        } else if (plot_cross->parsed()) {
            const std::string p = resolve_path(pc_pred), g = resolve_path(pc_gt),
                              o = resolve_path(pc_out);
            status = uhr_plot_cross_section(p.c_str(), g.c_str(), pc_row, o.c_str());
            what = "plot cross-section";
            artifact = o;
        } else {
            const std::string p = resolve_path(pe_pred), g = resolve_path(pe_gt),
                              m = resolve_path(pe_mask), o = resolve_path(pe_out);
            status = uhr_plot_error_map(p.c_str(), g.c_str(), pe_mask.empty() ? "" : m.c_str(),
                                        o.c_str());
            what = "plot error-map";
            artifact = o;
        }
        if (status != UHR_OK) return report_failure(what, status);
        print_artifact(artifact);
        return kExitOk;
    }
    if (cmd_ablate->parsed()) {
        std::vector<std::string> variants;
        std::string token;
        for (char c : ab_variants + ",") {
            if (c == ',') {
                if (!token.empty()) variants.push_back(token);
                token.clear();
            } else if (!std::isspace(static_cast<unsigned char>(c))) {
                token.push_back(c);
            }
        }
        if (variants.empty()) {
            std::cerr << "error: --variants is empty\n";
            return kExitUsage;
        }
        return run_ablate(ab_manifest, ab_out, ab_epochs, ab_batch, ab_lr, ab_seed, variants);
    }
    std::cerr << app.help();
    return kExitUsage;
}
