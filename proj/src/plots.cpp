#include "plots.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "image_io.hpp"

namespace fs = std::filesystem;

namespace uhrnet {

namespace {

struct Panel {
    double x0, y0, w, h;       // viewport rectangle
    double lo, hi;             // data range on y
    size_t n;                  // points on x

    double px(size_t i) const {
        return n < 2 ? x0 + w / 2 : x0 + w * static_cast<double>(i) / (n - 1);
    }
    double py(double v) const {
        const double span = hi - lo;
        const double t = span <= 0.0 ? 0.5 : (v - lo) / span;
        return y0 + h * (1.0 - t);
    }
};

std::string polyline(const Panel& p, const std::vector<double>& ys, const char* color,
                     const char* dash) {
    std::ostringstream s;
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
    if (dash) s << " stroke-dasharray=\"" << dash << "\"";
    s << " points=\"";
    for (size_t i = 0; i < ys.size(); ++i) {
        if (i) s << ' ';
        s << p.px(i) << ',' << p.py(ys[i]);
    }
    s << "\"/>\n";
    return s.str();
}

std::string axis_frame(const Panel& p, const std::string& title, const std::string& y_label) {
    std::ostringstream s;
    s << "<rect x=\"" << p.x0 << "\" y=\"" << p.y0 << "\" width=\"" << p.w << "\" height=\"" << p.h
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
    s << "<text x=\"" << p.x0 + p.w / 2 << "\" y=\"" << p.y0 - 8
      << "\" text-anchor=\"middle\" font-size=\"13\">" << title << "</text>\n";
    s << "<text x=\"" << p.x0 - 6 << "\" y=\"" << p.y0 + 10
      << "\" text-anchor=\"end\" font-size=\"10\">" << p.hi << "</text>\n";
    s << "<text x=\"" << p.x0 - 6 << "\" y=\"" << p.y0 + p.h
      << "\" text-anchor=\"end\" font-size=\"10\">" << p.lo << "</text>\n";
    s << "<text x=\"" << p.x0 - 34 << "\" y=\"" << p.y0 + p.h / 2
      << "\" text-anchor=\"middle\" font-size=\"11\" transform=\"rotate(-90 " << p.x0 - 34 << ' '
      << p.y0 + p.h / 2 << ")\">" << y_label << "</text>\n";
    return s.str();
}

void range_of(const std::vector<double>& a, const std::vector<double>& b, double& lo, double& hi) {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (double v : a) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : b) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!std::isfinite(lo)) {
        lo = 0.0;
        hi = 1.0;
    }
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
}

void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

std::string legend_entry(double x, double y, const char* color, const char* dash,
                         const std::string& label) {
    std::ostringstream s;
    s << "<line x1=\"" << x << "\" y1=\"" << y << "\" x2=\"" << x + 26 << "\" y2=\"" << y
      << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
    if (dash) s << " stroke-dasharray=\"" << dash << "\"";
    s << "/><text x=\"" << x + 32 << "\" y=\"" << y + 4 << "\" font-size=\"11\">" << label
      << "</text>\n";
    return s.str();
}

}  // namespace

void plot_history_svg(const History& history, const fs::path& path) {
    if (history.epochs.empty()) throw ConfigError("cannot plot an empty history");
    std::vector<double> train_rmse, val_rmse, train_ssim, val_ssim;
    for (const auto& e : history.epochs) {
        train_rmse.push_back(e.train_rmse_mm);
        val_rmse.push_back(e.val_rmse_mm);
        train_ssim.push_back(e.train_ssim);
        val_ssim.push_back(e.val_ssim);
    }

    const double width = 860, height = 360;
    Panel rmse{70, 40, 320, 250, 0, 0, train_rmse.size()};
    Panel ssm{490, 40, 320, 250, 0, 0, train_ssim.size()};
    range_of(train_rmse, val_rmse, rmse.lo, rmse.hi);
    range_of(train_ssim, val_ssim, ssm.lo, ssm.hi);

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << axis_frame(rmse, "RMSE per epoch", "mm");
    s << axis_frame(ssm, "SSIM per epoch", "ssim");
    s << polyline(rmse, train_rmse, "#1f77b4", nullptr);
    s << polyline(rmse, val_rmse, "#d62728", "5,3");
    s << polyline(ssm, train_ssim, "#1f77b4", nullptr);
    s << polyline(ssm, val_ssim, "#d62728", "5,3");
    s << legend_entry(70, height - 28, "#1f77b4", nullptr, "train");
    s << legend_entry(170, height - 28, "#d62728", "5,3", "validation");
    if (history.best_epoch >= 1 && static_cast<size_t>(history.best_epoch) <= val_rmse.size()) {
        const double bx = rmse.px(history.best_epoch - 1);
        s << "<line x1=\"" << bx << "\" y1=\"" << rmse.y0 << "\" x2=\"" << bx << "\" y2=\""
          << rmse.y0 + rmse.h << "\" stroke=\"#2ca02c\" stroke-dasharray=\"2,2\"/>\n";
        s << legend_entry(300, height - 28, "#2ca02c", "2,2",
                          "best epoch " + std::to_string(history.best_epoch));
    }
    s << "<text x=\"" << rmse.x0 + rmse.w / 2 << "\" y=\"" << rmse.y0 + rmse.h + 18
      << "\" text-anchor=\"middle\" font-size=\"11\">epoch</text>\n";
    s << "<text x=\"" << ssm.x0 + ssm.w / 2 << "\" y=\"" << ssm.y0 + ssm.h + 18
      << "\" text-anchor=\"middle\" font-size=\"11\">epoch</text>\n";
    s << "</svg>\n";
    write_text_file(path, s.str());
}

void plot_cross_section_svg(const Field& pred_mm, const Field& gt_mm, int row, const fs::path& path) {
    require_same_shape(pred_mm.height, pred_mm.width, gt_mm.height, gt_mm.width, "cross section");
    if (row < 0 || row >= pred_mm.height) {
        throw ConfigError("cross-section row " + std::to_string(row) + " outside 0.." +
                          std::to_string(pred_mm.height - 1));
    }
    std::vector<double> pred_row(pred_mm.width), gt_row(pred_mm.width);
    for (int x = 0; x < pred_mm.width; ++x) {
        pred_row[x] = pred_mm.at(row, x);
        gt_row[x] = gt_mm.at(row, x);
    }

    const double width = 720, height = 320;
    Panel p{70, 40, 590, 220, 0, 0, pred_row.size()};
    range_of(pred_row, gt_row, p.lo, p.hi);

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << axis_frame(p, "Height profile, row " + std::to_string(row), "mm");
    s << polyline(p, gt_row, "#1f77b4", nullptr);
    s << polyline(p, pred_row, "#d62728", "5,3");
    s << legend_entry(70, height - 18, "#1f77b4", nullptr, "ground truth");
    s << legend_entry(200, height - 18, "#d62728", "5,3", "prediction");
    s << "<text x=\"" << p.x0 + p.w / 2 << "\" y=\"" << p.y0 + p.h + 18
      << "\" text-anchor=\"middle\" font-size=\"11\">column</text>\n";
    s << "</svg>\n";
    write_text_file(path, s.str());
}

double write_error_map_png(const Field& pred_mm, const Field& gt_mm, const Mask& mask,
                           const fs::path& path) {
    require_same_shape(pred_mm.height, pred_mm.width, gt_mm.height, gt_mm.width, "error map");
    require_same_shape(pred_mm.height, pred_mm.width, mask.height, mask.width, "error map mask");
    Field err(pred_mm.height, pred_mm.width);
    double peak = 0.0;
    for (size_t i = 0; i < err.data.size(); ++i) {
        const double e = mask.data[i]
                             ? std::abs(static_cast<double>(pred_mm.data[i]) - gt_mm.data[i])
                             : 0.0;
        err.data[i] = static_cast<float>(e);
        peak = std::max(peak, e);
    }
    if (peak > 0.0) {
        for (float& v : err.data) v = static_cast<float>(v / peak);
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    write_gray_png(path, err);
    return peak;
}

}  // namespace uhrnet
