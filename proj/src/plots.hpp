#pragma once

#include <filesystem>

#include "field.hpp"
#include "trainer.hpp"

namespace uhrnet {

/// Two-panel SVG: train/val RMSE per epoch and train/val SSIM per epoch.
void plot_history_svg(const History& history, const std::filesystem::path& path);

/// One-row height profile, ground truth vs prediction, as an SVG line chart.
void plot_cross_section_svg(const Field& pred_mm, const Field& gt_mm, int row,
                            const std::filesystem::path& path);

/// Grayscale |pred - gt| map (black = 0 error), masked-out pixels black.
/// Returns the maximum masked absolute error used as the white point.
double write_error_map_png(const Field& pred_mm, const Field& gt_mm, const Mask& mask,
                           const std::filesystem::path& path);

}  // namespace uhrnet
