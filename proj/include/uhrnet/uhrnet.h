#ifndef UHRNET_UHRNET_H
#define UHRNET_UHRNET_H

/* Fringe-to-height reconstruction library: synthetic fringe-projection data
 * generation, UHRNet training and inference, evaluation, and plotting.
 *
 * All functions return UHR_OK on success. On failure they return the error
 * class and leave a human-readable message in uhr_last_error() (thread
 * local). Strings returned through char** outputs are heap-allocated and
 * must be released with uhr_string_free(). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define UHR_API __declspec(dllexport)
#else
#define UHR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum uhr_status {
    UHR_OK = 0,
    UHR_ERR_CONFIG = 1,  /* invalid parameter or configuration value */
    UHR_ERR_SHAPE = 2,   /* dimension mismatch or indivisible size */
    UHR_ERR_STATE = 3,   /* operation applied to an object in the wrong state */
    UHR_ERR_IO = 4,      /* missing or unreadable/unwritable file */
    UHR_ERR_RUNTIME = 5  /* anything else */
} uhr_status;

UHR_API const char* uhr_version(void);

/* Message from the most recent failing call on this thread ("" if none). */
UHR_API const char* uhr_last_error(void);

UHR_API void uhr_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Dataset pipeline                                                    */

/* Generate a synthetic dataset under out_dir (PNG fringes, PFM heights,
 * PNG masks, manifest.json). spec_json keys (all optional): count, seed,
 * canvas_height, canvas_width, height_range_mm, blob_count_min,
 * blob_count_max, detail_amplitude_mm, layout (single|separated|
 * overlapping|mixed), ambient, modulation, fringe_periods, phase_steps,
 * height_coeff_k, low_freq_periods, noise_sigma, gamma. Unknown keys are
 * rejected. */
UHR_API uhr_status uhr_generate_dataset(const char* spec_json, const char* out_dir);

/* Convert a foreign dataset directory into the native layout under
 * out_dir. Adapters: "native" (a directory with manifest.json) and
 * "pairs" (<id>_fringe.png / <id>_height.pfm / optional <id>_mask.png). */
UHR_API uhr_status uhr_ingest_dataset(const char* src_dir, const char* adapter, const char* out_dir);

/* Assign train/val/test splits in a manifest file, in place.
 * Ratios must sum to 1. Pass allow_degenerate nonzero to permit
 * splits of fewer than 3 records. */
UHR_API uhr_status uhr_split_dataset(const char* manifest_path, double train, double val,
                                     double test, uint64_t seed, int allow_degenerate);

/* ------------------------------------------------------------------ */
/* Training and evaluation                                             */

/* Train per config_json (see the train config schema in the README;
 * unknown keys are rejected) on the manifest's train split. Writes
 * best.pt/last.pt (+ .json sidecars) and history.json under out_dir.
 * If history_json_out is non-NULL it receives the history document. */
UHR_API uhr_status uhr_train(const char* config_json, const char* manifest_path,
                             const char* out_dir, char** history_json_out);

/* Evaluate a checkpoint over one manifest split ("train", "val" or
 * "test"). report_json_out (optional) receives the evaluation report:
 * per-sample and mean RMSE (mm) and SSIM, parameter count, median
 * single-pattern inference seconds (timing_reps > 0) and config digest. */
UHR_API uhr_status uhr_evaluate(const char* checkpoint_path, const char* manifest_path,
                                const char* split, int timing_reps, char** report_json_out);

/* ------------------------------------------------------------------ */
/* Networks                                                            */

typedef struct uhr_net uhr_net;

/* Fresh network from a network config JSON (keys: variant A|B|C|D,
 * in_channels, out_channels, base_channels, dilation_rates, leaky_slope,
 * use_mlb, use_hfb; all optional, "{}" gives the full default model). */
UHR_API uhr_status uhr_net_create(const char* network_json, uhr_net** out);

/* Load weights + config from a checkpoint written by uhr_train. */
UHR_API uhr_status uhr_net_load(const char* checkpoint_path, uhr_net** out);

UHR_API void uhr_net_free(uhr_net* net);

UHR_API uhr_status uhr_net_param_count(const uhr_net* net, int64_t* count_out);

/* Single-pattern inference: input is a row-major height*width intensity
 * map in [0,1]; output receives height*width predicted values in the
 * network's normalized units (multiply by the dataset height scale for
 * mm). Dimensions must be divisible by 16. */
UHR_API uhr_status uhr_net_forward(uhr_net* net, const float* input, int32_t height, int32_t width,
                                   float* output);

/* Predict straight from files: fringe PNG in, height PFM out (values in
 * mm via the scale stored in the checkpoint). */
UHR_API uhr_status uhr_predict(const char* checkpoint_path, const char* fringe_png_path,
                               const char* out_height_pfm_path);

/* ------------------------------------------------------------------ */
/* Plots                                                               */

/* History curves (train/val RMSE and SSIM per epoch) from a history.json
 * or checkpoint sidecar, as SVG. */
UHR_API uhr_status uhr_plot_history(const char* history_json_path, const char* out_svg_path);

/* One-row profile of prediction vs ground truth, as SVG. */
UHR_API uhr_status uhr_plot_cross_section(const char* pred_pfm_path, const char* gt_pfm_path,
                                          int32_t row, const char* out_svg_path);

/* Grayscale |pred - gt| image (optional mask PNG), as PNG. */
UHR_API uhr_status uhr_plot_error_map(const char* pred_pfm_path, const char* gt_pfm_path,
                                      const char* mask_png_path, const char* out_png_path);

#ifdef __cplusplus
}
#endif

#endif /* UHRNET_UHRNET_H */
