#pragma once

#include <cstdint>
#include <vector>

#include "field.hpp"

namespace uhrnet {

enum class Layout { Single, Separated, Overlapping };

const char* layout_name(Layout layout);
Layout layout_from_name(const std::string& name);

/// Parameters of one synthetic scene. Identical specs produce bit-identical
/// height maps.
struct SceneSpec {
    uint64_t seed = 0;
    int object_count = 1;
    double height_range_mm = 20.0;
    int blob_count_min = 3;
    int blob_count_max = 6;
    double detail_amplitude_mm = 0.5;
    int canvas_height = 352;
    int canvas_width = 640;
    Layout layout = Layout::Single;

    void validate() const;
};

/// Fringe-projection forward model parameters.
///
/// A pattern rendered at `periods` carrier periods across the width has
/// per-pixel phase
///
///   phi(x, y) = 2*pi*periods*x/W + (periods/fringe_periods) * h(x,y)/K + shift
///
/// The height term scales with the carrier frequency, so the phase displacement
/// a surface produces at the low unwrapping frequency is 1/ratio of the
/// displacement at the main carrier. At the main carrier the sensitivity is
/// exactly h/K, i.e. h = K * delta_phi.
struct FPPConfig {
    double ambient_A = 0.5;
    double modulation_B = 0.4;
    double fringe_periods = 32.0;
    int phase_steps_N = 4;
    double height_coeff_K = 2.0;  // mm per radian at the main carrier
    double low_freq_periods = 4.0;
    double noise_sigma = 0.0;
    double gamma = 1.0;
    double modulation_threshold = 0.01;

    double ratio() const { return fringe_periods / low_freq_periods; }
    void validate() const;
};

HeightMap generate_height_map(const SceneSpec& spec);

/// Render one fringe pattern. `shift` is the phase offset in radians and
/// `periods` the carrier period count across the image width. Noise is drawn
/// deterministically from `noise_seed` when cfg.noise_sigma > 0.
FringePattern render_fringe(const HeightMap& height, const FPPConfig& cfg, double shift, double periods,
                            uint64_t noise_seed = 0);

/// Render the uniform N-step set {2*pi*k/N, k=0..N-1} at the given carrier.
std::vector<FringePattern> render_phase_shift_set(const HeightMap& height, const FPPConfig& cfg,
                                                  double periods, uint64_t noise_seed = 0);

struct PspResult {
    PhaseMap phase;        // wrapped, values in (-pi, pi]
    DField modulation;     // recovered fringe modulation (equals B on clean input)
};

/// N-step phase retrieval: tan(phi) = -sum_k I_k sin(2*pi*k/N) / sum_k I_k cos(2*pi*k/N),
/// which recovers the rendered phase for patterns taken at shifts +2*pi*k/N.
/// Zero-modulation pixels come out with phase 0 and modulation 0.
PspResult psp_wrapped_phase(const std::vector<FringePattern>& patterns, int steps);

/// Wrap any angle to (-pi, pi].
double wrap_to_pi(double angle);

/// Pointwise wrapped difference a - b, re-wrapped to (-pi, pi].
PhaseMap wrapped_difference(const PhaseMap& a, const PhaseMap& b);

/// Temporal two-frequency unwrapping. The low-frequency map must already be
/// continuous (its excursion stays inside one wrap), and `ratio` is
/// fringe_periods / low_freq_periods:
///   unwrapped = wrapped_high + 2*pi*round((ratio*low - wrapped_high)/(2*pi))
PhaseMap unwrap_two_frequency(const PhaseMap& wrapped_high, const PhaseMap& low, double ratio);

/// h = K * (phase - reference), both inputs unwrapped. When a modulation field
/// is given, pixels below cfg.modulation_threshold are masked out.
HeightMap phase_to_height(const PhaseMap& phase, const PhaseMap& reference, const FPPConfig& cfg,
                          const DField* modulation = nullptr);

/// Full classical reconstruction: render N-step sets at both carriers for the
/// object and the reference plane, retrieve and unwrap the phase, map to
/// height. This is the measurement-side ground-truth procedure; the network
/// never sees it.
HeightMap psp_reconstruct(const HeightMap& height, const FPPConfig& cfg, uint64_t noise_seed = 0);

/// Number of 4-connected components among mask-true pixels.
int count_mask_components(const Mask& mask);

}  // namespace uhrnet
