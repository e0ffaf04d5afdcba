#include "datagen.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "rng.hpp"

namespace uhrnet {

const char* layout_name(Layout layout) {
    switch (layout) {
        case Layout::Single: return "single";
        case Layout::Separated: return "separated";
        case Layout::Overlapping: return "overlapping";
    }
    return "single";
}

Layout layout_from_name(const std::string& name) {
    if (name == "single") return Layout::Single;
    if (name == "separated") return Layout::Separated;
    if (name == "overlapping") return Layout::Overlapping;
    throw ConfigError("unknown layout '" + name + "' (expected single|separated|overlapping)");
}

void SceneSpec::validate() const {
    if (canvas_height <= 0 || canvas_width <= 0 || canvas_height % 16 != 0 || canvas_width % 16 != 0) {
        throw ConfigError("canvas " + std::to_string(canvas_height) + "x" + std::to_string(canvas_width) +
                          " must be positive and divisible by 16");
    }
    if (object_count < 1) throw ConfigError("object_count must be >= 1");
    if (height_range_mm <= 0.0) throw ConfigError("height_range_mm must be positive");
    if (blob_count_min < 1 || blob_count_max < blob_count_min) {
        throw ConfigError("blob_count_range must satisfy 1 <= min <= max");
    }
    if (detail_amplitude_mm < 0.0) throw ConfigError("detail_amplitude_mm must be nonnegative");
}

void FPPConfig::validate() const {
    if (ambient_A <= 0.0 || ambient_A >= 1.0) throw ConfigError("ambient_A must lie in (0,1)");
    if (modulation_B <= 0.0 || ambient_A + modulation_B > 1.0 + 1e-12) {
        throw ConfigError("modulation_B must lie in (0, 1-A]: A+B must not exceed 1");
    }
    if (fringe_periods <= 0.0) throw ConfigError("fringe_periods must be positive");
    if (phase_steps_N < 3) throw ConfigError("phase_steps_N must be >= 3");
    if (height_coeff_K <= 0.0) throw ConfigError("height_coeff_K must be positive");
    if (low_freq_periods <= 0.0 || low_freq_periods >= fringe_periods) {
        throw ConfigError("low_freq_periods must lie in (0, fringe_periods)");
    }
    if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be nonnegative");
    if (gamma <= 0.0) throw ConfigError("gamma must be positive");
}

namespace {

struct Blob {
    double cy, cx, sigma, amplitude;
};

struct ObjectSpec {
    double cy, cx, radius;
    std::vector<Blob> blobs;
    double ripple_fy, ripple_fx, ripple_phase;
    double peak_scale;
};

void accumulate_object(const ObjectSpec& obj, double detail_amplitude, DField& canvas) {
    const int h = canvas.height;
    const int w = canvas.width;
    // Gaussian tails below this fraction of the blob amplitude are skipped.
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double base = 0.0;
            for (const Blob& b : obj.blobs) {
                double dy = (y - b.cy) / b.sigma;
                double dx = (x - b.cx) / b.sigma;
                double r2 = dy * dy + dx * dx;
                if (r2 < 18.0) base += b.amplitude * std::exp(-0.5 * r2);
            }
            if (base <= 0.0) continue;
            double v = base;
            if (detail_amplitude > 0.0) {
                double ripple = std::sin(obj.ripple_fy * y + obj.ripple_fx * x + obj.ripple_phase);
                // The envelope tapers the texture toward the object edge.
                v += detail_amplitude * ripple * std::min(1.0, base);
            }
            v *= obj.peak_scale;
            double& cell = canvas.at(y, x);
            cell = std::max(cell, v);  // nearer surface wins where objects overlap
        }
    }
}

}  // namespace

HeightMap generate_height_map(const SceneSpec& spec) {
    spec.validate();
    const int h = spec.canvas_height;
    const int w = spec.canvas_width;
    const double dim = std::min(h, w);
    Rng rng(Rng::mix(spec.seed ^ 0x5ce4e5u));

    std::vector<ObjectSpec> objects;
    objects.reserve(spec.object_count);

    // Object centers by layout. Separated objects live in disjoint grid cells
    // with a margin wide enough that their gaussian tails cannot bridge.
    std::vector<std::pair<double, double>> centers;
    double radius_cap;
    if (spec.layout == Layout::Separated) {
        int cols = 1, rows = 1;
        while (cols * rows < spec.object_count) {
            if (cols * h <= rows * w) ++cols; else ++rows;
        }
        double cell_h = static_cast<double>(h) / rows;
        double cell_w = static_cast<double>(w) / cols;
        std::vector<int> cells(static_cast<size_t>(cols) * rows);
        for (size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<int>(i);
        rng.shuffle(cells);
        for (int i = 0; i < spec.object_count; ++i) {
            int cy = cells[i] / cols, cx = cells[i] % cols;
            double jitter = 0.06;
            centers.emplace_back((cy + 0.5 + rng.uniform(-jitter, jitter)) * cell_h,
                                 (cx + 0.5 + rng.uniform(-jitter, jitter)) * cell_w);
        }
        radius_cap = 0.20 * std::min(cell_h, cell_w);
    } else {
        double spread = (spec.layout == Layout::Single) ? 0.05 : 0.16;
        for (int i = 0; i < spec.object_count; ++i) {
            centers.emplace_back(h * (0.5 + rng.uniform(-spread, spread)),
                                 w * (0.5 + rng.uniform(-spread, spread)));
        }
        radius_cap = 0.22 * dim;
    }

    for (int i = 0; i < spec.object_count; ++i) {
        ObjectSpec obj;
        obj.cy = centers[i].first;
        obj.cx = centers[i].second;
        obj.radius = rng.uniform(0.6, 1.0) * radius_cap;
        int blob_count = static_cast<int>(rng.uniform_int(spec.blob_count_min, spec.blob_count_max));
        for (int b = 0; b < blob_count; ++b) {
            Blob blob;
            blob.cy = obj.cy + rng.normal() * obj.radius * 0.45;
            blob.cx = obj.cx + rng.normal() * obj.radius * 0.45;
            blob.cy = std::clamp(blob.cy, obj.cy - obj.radius, obj.cy + obj.radius);
            blob.cx = std::clamp(blob.cx, obj.cx - obj.radius, obj.cx + obj.radius);
            blob.sigma = rng.uniform(0.35, 0.75) * obj.radius;
            blob.amplitude = rng.uniform(0.45, 1.0);
            obj.blobs.push_back(blob);
        }
        double freq = rng.uniform(4.0, 9.0) * 2.0 * M_PI / dim;
        double angle = rng.uniform(0.0, 2.0 * M_PI);
        obj.ripple_fy = freq * std::sin(angle);
        obj.ripple_fx = freq * std::cos(angle);
        obj.ripple_phase = rng.uniform(0.0, 2.0 * M_PI);
        obj.peak_scale = rng.uniform(0.6, 1.0);
        objects.push_back(std::move(obj));
    }

    // Texture amplitude relative to the unit-amplitude blob composites; the
    // final rescale maps it to millimeters.
    double detail_rel = spec.detail_amplitude_mm / spec.height_range_mm;
    DField accum(h, w, 0.0);
    for (const ObjectSpec& obj : objects) accumulate_object(obj, detail_rel, accum);

    double peak = 0.0;
    for (double v : accum.data) peak = std::max(peak, v);

    HeightMap out;
    out.values = Field(h, w, 0.0f);
    out.mask = Mask(h, w, 0);
    if (peak <= 0.0) return out;

    double target_peak = spec.height_range_mm * rng.uniform(0.8, 1.0);
    double scale = target_peak / peak;
    double mask_threshold = 0.02 * peak;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double v = accum.at(y, x);
            if (v > mask_threshold) {
                out.values.at(y, x) = static_cast<float>(std::max(0.0, v) * scale);
                out.mask.at(y, x) = 1;
            }
        }
    }
    return out;
}

FringePattern render_fringe(const HeightMap& height, const FPPConfig& cfg, double shift, double periods,
                            uint64_t noise_seed) {
    cfg.validate();
    if (periods <= 0.0) throw ConfigError("periods must be positive");
    const int h = height.height();
    const int w = height.width();
    require_same_shape(height.values.height, height.values.width, height.mask.height, height.mask.width,
                       "render_fringe");

    const double carrier = 2.0 * M_PI * periods / w;
    const double height_scale = (periods / cfg.fringe_periods) / cfg.height_coeff_K;
    Rng noise_rng(Rng::mix(noise_seed ^ 0xf21'9e3u));

    FringePattern out;
    out.intensities = DField(h, w, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double phi = carrier * x + height_scale * height.values.at(y, x) + shift;
            double v = cfg.ambient_A + cfg.modulation_B * std::cos(phi);
            if (cfg.gamma != 1.0) v = std::pow(std::max(v, 0.0), cfg.gamma);
            if (cfg.noise_sigma > 0.0) v += cfg.noise_sigma * noise_rng.normal();
            out.intensities.at(y, x) = std::clamp(v, 0.0, 1.0);
        }
    }
    return out;
}

std::vector<FringePattern> render_phase_shift_set(const HeightMap& height, const FPPConfig& cfg,
                                                  double periods, uint64_t noise_seed) {
    std::vector<FringePattern> set;
    set.reserve(cfg.phase_steps_N);
    for (int k = 0; k < cfg.phase_steps_N; ++k) {
        double shift = 2.0 * M_PI * k / cfg.phase_steps_N;
        FringePattern p = render_fringe(height, cfg, shift, periods, Rng::mix(noise_seed) + k);
        p.phase_shift_index = k;
        set.push_back(std::move(p));
    }
    return set;
}

PspResult psp_wrapped_phase(const std::vector<FringePattern>& patterns, int steps) {
    if (steps < 3) throw ConfigError("phase shifting needs at least 3 steps");
    if (static_cast<int>(patterns.size()) != steps) {
        throw ConfigError("expected " + std::to_string(steps) + " patterns, got " +
                          std::to_string(patterns.size()));
    }
    const int h = patterns[0].height();
    const int w = patterns[0].width();
    for (const FringePattern& p : patterns) {
        require_same_shape(h, w, p.height(), p.width(), "psp_wrapped_phase");
    }

    std::vector<double> sines(steps), cosines(steps);
    for (int k = 0; k < steps; ++k) {
        sines[k] = std::sin(2.0 * M_PI * k / steps);
        cosines[k] = std::cos(2.0 * M_PI * k / steps);
    }

    PspResult out;
    out.phase.values = DField(h, w, 0.0);
    out.phase.wrapped = true;
    out.modulation = DField(h, w, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0, c = 0.0;
            for (int k = 0; k < steps; ++k) {
                double intensity = patterns[k].intensities.at(y, x);
                s += intensity * sines[k];
                c += intensity * cosines[k];
            }
            double mod = 2.0 / steps * std::hypot(s, c);
            double phi = (mod > 0.0) ? std::atan2(-s, c) : 0.0;
            if (phi <= -M_PI) phi += 2.0 * M_PI;
            out.phase.values.at(y, x) = phi;
            out.modulation.at(y, x) = mod;
        }
    }
    return out;
}

double wrap_to_pi(double angle) {
    double v = std::remainder(angle, 2.0 * M_PI);
    if (v <= -M_PI) v += 2.0 * M_PI;
    return v;
}

PhaseMap wrapped_difference(const PhaseMap& a, const PhaseMap& b) {
    require_same_shape(a.height(), a.width(), b.height(), b.width(), "wrapped_difference");
    PhaseMap out;
    out.values = DField(a.height(), a.width(), 0.0);
    out.wrapped = true;
    for (size_t i = 0; i < out.values.size(); ++i) {
        out.values.data[i] = wrap_to_pi(a.values.data[i] - b.values.data[i]);
    }
    return out;
}

PhaseMap unwrap_two_frequency(const PhaseMap& wrapped_high, const PhaseMap& low, double ratio) {
    if (ratio <= 1.0) throw ConfigError("frequency ratio must exceed 1");
    if (!wrapped_high.wrapped) throw StateError("high-frequency input must be wrapped");
    require_same_shape(wrapped_high.height(), wrapped_high.width(), low.height(), low.width(),
                       "unwrap_two_frequency");

    PhaseMap out;
    out.values = DField(wrapped_high.height(), wrapped_high.width(), 0.0);
    out.wrapped = false;
    const double two_pi = 2.0 * M_PI;
    for (size_t i = 0; i < out.values.size(); ++i) {
        double high = wrapped_high.values.data[i];
        double predicted = ratio * low.values.data[i];
        out.values.data[i] = high + two_pi * std::round((predicted - high) / two_pi);
    }
    return out;
}

HeightMap phase_to_height(const PhaseMap& phase, const PhaseMap& reference, const FPPConfig& cfg,
                          const DField* modulation) {
    if (phase.wrapped || reference.wrapped) throw StateError("phase_to_height requires unwrapped inputs");
    require_same_shape(phase.height(), phase.width(), reference.height(), reference.width(),
                       "phase_to_height");
    const int h = phase.height();
    const int w = phase.width();
    if (modulation) require_same_shape(h, w, modulation->height, modulation->width, "phase_to_height");

    HeightMap out;
    out.values = Field(h, w, 0.0f);
    out.mask = Mask(h, w, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            bool valid = !modulation || modulation->at(y, x) > cfg.modulation_threshold;
            if (valid) {
                double delta = phase.values.at(y, x) - reference.values.at(y, x);
                out.values.at(y, x) = static_cast<float>(cfg.height_coeff_K * delta);
            } else {
                out.mask.at(y, x) = 0;
            }
        }
    }
    return out;
}

HeightMap psp_reconstruct(const HeightMap& height, const FPPConfig& cfg, uint64_t noise_seed) {
    cfg.validate();
    HeightMap flat;
    flat.values = Field(height.height(), height.width(), 0.0f);
    flat.mask = Mask(height.height(), height.width(), 1);

    PhaseMap relative[2];
    DField modulation_high;
    const double carriers[2] = {cfg.fringe_periods, cfg.low_freq_periods};
    for (int f = 0; f < 2; ++f) {
        auto object_set = render_phase_shift_set(height, cfg, carriers[f], noise_seed + f * 1000);
        auto reference_set = render_phase_shift_set(flat, cfg, carriers[f], noise_seed + f * 1000 + 500);
        PspResult object = psp_wrapped_phase(object_set, cfg.phase_steps_N);
        PspResult reference = psp_wrapped_phase(reference_set, cfg.phase_steps_N);
        relative[f] = wrapped_difference(object.phase, reference.phase);
        if (f == 0) modulation_high = std::move(object.modulation);
    }

    PhaseMap unwrapped = unwrap_two_frequency(relative[0], relative[1], cfg.ratio());
    PhaseMap zero;
    zero.values = DField(height.height(), height.width(), 0.0);
    zero.wrapped = false;
    return phase_to_height(unwrapped, zero, cfg, &modulation_high);
}

int count_mask_components(const Mask& mask) {
    const int h = mask.height;
    const int w = mask.width;
    std::vector<uint8_t> seen(mask.size(), 0);
    int components = 0;
    std::deque<std::pair<int, int>> queue;
    for (int y0 = 0; y0 < h; ++y0) {
        for (int x0 = 0; x0 < w; ++x0) {
            size_t idx0 = static_cast<size_t>(y0) * w + x0;
            if (!mask.data[idx0] || seen[idx0]) continue;
            ++components;
            seen[idx0] = 1;
            queue.emplace_back(y0, x0);
            while (!queue.empty()) {
                auto [y, x] = queue.front();
                queue.pop_front();
                const int dy[4] = {-1, 1, 0, 0};
                const int dx[4] = {0, 0, -1, 1};
                for (int d = 0; d < 4; ++d) {
                    int ny = y + dy[d], nx = x + dx[d];
                    if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                    size_t idx = static_cast<size_t>(ny) * w + nx;
                    if (mask.data[idx] && !seen[idx]) {
                        seen[idx] = 1;
                        queue.emplace_back(ny, nx);
                    }
                }
            }
        }
    }
    return components;
}

}  // namespace uhrnet
