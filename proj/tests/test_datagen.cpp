#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "datagen.hpp"
#include "field.hpp"

using namespace uhrnet;

namespace {

constexpr double kPi = std::numbers::pi;

SceneSpec small_scene(uint64_t seed, Layout layout = Layout::Single) {
    SceneSpec spec;
    spec.seed = seed;
    spec.layout = layout;
    spec.canvas_height = 64;
    spec.canvas_width = 96;
    spec.height_range_mm = 15.0;
    return spec;
}

HeightMap flat_height(int h, int w, double value = 0.0) {
    HeightMap hm;
    hm.values = Field(h, w, value);
    hm.mask = Mask(h, w, true);
    return hm;
}

double analytic_phase(const FPPConfig& cfg, double periods, double h_mm, int x, int width) {
    return 2.0 * kPi * periods * x / width +
           (periods / cfg.fringe_periods) * h_mm / cfg.height_coeff_K;
}

}  // namespace

TEST_CASE("height map generation is deterministic and bounded") {
    SceneSpec spec = small_scene(42, Layout::Overlapping);
    spec.object_count = 2;
    HeightMap a = generate_height_map(spec);
    HeightMap b = generate_height_map(spec);

    REQUIRE(a.values.same_shape(b.values.height, b.values.width));
    for (int y = 0; y < a.values.height; ++y) {
        for (int x = 0; x < a.values.width; ++x) {
            CHECK(a.values.at(y, x) == b.values.at(y, x));
            CHECK(a.mask.at(y, x) == b.mask.at(y, x));
        }
    }

    CHECK(a.mask_count() > 0);
    for (int y = 0; y < a.values.height; ++y) {
        for (int x = 0; x < a.values.width; ++x) {
            CHECK(a.values.at(y, x) >= 0.0);
            CHECK(a.values.at(y, x) <= spec.height_range_mm + 1e-9);
            if (!a.mask.at(y, x)) CHECK(a.values.at(y, x) == 0.0);
        }
    }

    HeightMap c = generate_height_map(small_scene(43, Layout::Overlapping));
    bool any_diff = false;
    for (int y = 0; y < c.values.height && !any_diff; ++y) {
        for (int x = 0; x < c.values.width; ++x) {
            if (c.values.at(y, x) != a.values.at(y, x)) {
                any_diff = true;
                break;
            }
        }
    }
    CHECK(any_diff);
}

TEST_CASE("separated layout yields at least two mask components") {
    SceneSpec spec = small_scene(7, Layout::Separated);
    spec.object_count = 2;
    HeightMap hm = generate_height_map(spec);
    CHECK(count_mask_components(hm.mask) >= 2);
}

TEST_CASE("mask component counting hand cases") {
    Mask empty(8, 8, false);
    CHECK(count_mask_components(empty) == 0);

    Mask one(8, 8, false);
    one.at(2, 2) = one.at(2, 3) = one.at(3, 2) = true;
    CHECK(count_mask_components(one) == 1);

    Mask diagonal(8, 8, false);
    diagonal.at(1, 1) = true;
    diagonal.at(2, 2) = true;  // touches only at the corner: separate under 4-connectivity
    CHECK(count_mask_components(diagonal) == 2);
}

TEST_CASE("zero height gives a pure carrier cosine, identical in every row") {
    FPPConfig cfg;
    const int h = 16, w = 128;
    FringePattern pat = render_fringe(flat_height(h, w), cfg, 0.0, cfg.fringe_periods);
    REQUIRE(pat.intensities.height == h);
    REQUIRE(pat.intensities.width == w);

    for (int x = 0; x < w; ++x) {
        const double expected =
            cfg.ambient_A + cfg.modulation_B * std::cos(2.0 * kPi * cfg.fringe_periods * x / w);
        for (int y = 0; y < h; ++y) {
            CHECK(pat.intensities.at(y, x) == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("antiphase patterns sum to twice the ambient level") {
    SceneSpec spec = small_scene(3);
    HeightMap hm = generate_height_map(spec);
    FPPConfig cfg;
    FringePattern p0 = render_fringe(hm, cfg, 0.0, cfg.fringe_periods);
    FringePattern p1 = render_fringe(hm, cfg, kPi, cfg.fringe_periods);
    for (int y = 0; y < hm.values.height; ++y) {
        for (int x = 0; x < hm.values.width; ++x) {
            CHECK(p0.intensities.at(y, x) + p1.intensities.at(y, x) ==
                  doctest::Approx(2.0 * cfg.ambient_A).epsilon(1e-12));
        }
    }
}

TEST_CASE("a height ramp shifts the local fringe frequency by its slope") {
    FPPConfig cfg;
    const int h = 8, w = 256;
    const double slope = 0.05;  // mm per pixel
    HeightMap ramp = flat_height(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) ramp.values.at(y, x) = slope * x;
    }

    PspResult psp = psp_wrapped_phase(render_phase_shift_set(ramp, cfg, cfg.fringe_periods),
                                      cfg.phase_steps_N);
    const double expected_step = 2.0 * kPi * cfg.fringe_periods / w + slope / cfg.height_coeff_K;
    for (int x = 0; x + 1 < w; ++x) {
        const double step =
            wrap_to_pi(psp.phase.values.at(h / 2, x + 1) - psp.phase.values.at(h / 2, x));
        CHECK(step == doctest::Approx(expected_step).epsilon(1e-6));
    }
}

TEST_CASE("an n-step set sums to n times the ambient level") {
    SceneSpec spec = small_scene(5);
    HeightMap hm = generate_height_map(spec);
    FPPConfig cfg;
    std::vector<FringePattern> set = render_phase_shift_set(hm, cfg, cfg.fringe_periods);
    REQUIRE(static_cast<int>(set.size()) == cfg.phase_steps_N);
    for (int y = 0; y < hm.values.height; ++y) {
        for (int x = 0; x < hm.values.width; ++x) {
            double sum = 0.0;
            for (const FringePattern& p : set) sum += p.intensities.at(y, x);
            CHECK(std::abs(sum - cfg.phase_steps_N * cfg.ambient_A) < 1e-9);
        }
    }
}

TEST_CASE("phase shifting recovers the rendered phase and modulation") {
    SceneSpec spec = small_scene(21);
    HeightMap hm = generate_height_map(spec);
    FPPConfig cfg;
    PspResult psp = psp_wrapped_phase(render_phase_shift_set(hm, cfg, cfg.fringe_periods),
                                      cfg.phase_steps_N);

    for (int y = 0; y < hm.values.height; ++y) {
        for (int x = 0; x < hm.values.width; ++x) {
            const double truth =
                analytic_phase(cfg, cfg.fringe_periods, hm.values.at(y, x), x, hm.values.width);
            CHECK(std::abs(wrap_to_pi(psp.phase.values.at(y, x) - truth)) < 1e-6);
            CHECK(psp.modulation.at(y, x) == doctest::Approx(cfg.modulation_B).epsilon(1e-9));
        }
    }
    CHECK(psp.phase.wrapped);
}

TEST_CASE("constant frames give zero-confidence output that masks out") {
    FPPConfig cfg;
    const int h = 8, w = 8;
    std::vector<FringePattern> flat;
    for (int k = 0; k < cfg.phase_steps_N; ++k) {
        FringePattern p;
        p.intensities = DField(h, w, cfg.ambient_A);
        p.phase_shift_index = k;
        flat.push_back(p);
    }
    PspResult psp = psp_wrapped_phase(flat, cfg.phase_steps_N);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            CHECK(psp.modulation.at(y, x) < 1e-12);
        }
    }
    PhaseMap unwrapped = psp.phase;
    unwrapped.wrapped = false;
    PhaseMap reference;
    reference.values = DField(h, w, 0.0);
    reference.wrapped = false;
    HeightMap masked = phase_to_height(unwrapped, reference, cfg, &psp.modulation);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            CHECK(masked.mask.at(y, x) == 0);
        }
    }

    CHECK_THROWS_AS(psp_wrapped_phase(flat, 2), ConfigError);
    std::vector<FringePattern> three(flat.begin(), flat.begin() + 3);
    CHECK_THROWS_AS(psp_wrapped_phase(three, 4), ConfigError);
}

TEST_CASE("angle wrapping lands in (-pi, pi]") {
    CHECK(wrap_to_pi(0.5) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(wrap_to_pi(kPi) == doctest::Approx(kPi).epsilon(1e-12));
    CHECK(wrap_to_pi(-kPi) == doctest::Approx(kPi).epsilon(1e-12));
    CHECK(wrap_to_pi(3.0 * kPi) == doctest::Approx(kPi).epsilon(1e-12));
    CHECK(wrap_to_pi(2.0 * kPi) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(wrap_to_pi(-7.5 * kPi) == doctest::Approx(0.5 * kPi).epsilon(1e-12));
}

TEST_CASE("two-frequency unwrapping recovers a multi-wrap ramp") {
    const int h = 4, w = 256;
    const double ratio = 8.0;

    PhaseMap truth;
    truth.values = DField(h, w, 0.0);
    truth.wrapped = false;
    PhaseMap wrapped_high;
    wrapped_high.values = DField(h, w, 0.0);
    wrapped_high.wrapped = true;
    PhaseMap low;
    low.values = DField(h, w, 0.0);
    low.wrapped = false;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double phi = 6.0 * kPi * x / (w - 1);
            truth.values.at(y, x) = phi;
            wrapped_high.values.at(y, x) = wrap_to_pi(phi);
            low.values.at(y, x) = phi / ratio;
        }
    }

    PhaseMap unwrapped = unwrap_two_frequency(wrapped_high, low, ratio);
    CHECK_FALSE(unwrapped.wrapped);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            CHECK(std::abs(unwrapped.values.at(y, x) - truth.values.at(y, x)) < 1e-9);
        }
    }

    // Already-continuous input is returned unchanged.
    PhaseMap small;
    small.values = DField(h, w, 0.0);
    small.wrapped = true;
    PhaseMap small_low = small;
    small_low.wrapped = false;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            small.values.at(y, x) = 2.0 * (x / static_cast<double>(w)) - 1.0;
            small_low.values.at(y, x) = small.values.at(y, x) / ratio;
        }
    }
    PhaseMap same = unwrap_two_frequency(small, small_low, ratio);
    for (int x = 0; x < w; ++x) CHECK(same.values.at(0, x) == doctest::Approx(small.values.at(0, x)).epsilon(1e-12));

    CHECK_THROWS_AS(unwrap_two_frequency(wrapped_high, low, 1.0), ConfigError);
    PhaseMap not_wrapped = wrapped_high;
    not_wrapped.wrapped = false;
    CHECK_THROWS_AS(unwrap_two_frequency(not_wrapped, low, ratio), StateError);
}

TEST_CASE("wrapped difference re-wraps into the principal interval") {
    PhaseMap a, b;
    a.values = DField(1, 3, 0.0);
    b.values = DField(1, 3, 0.0);
    a.values.at(0, 0) = 3.0;
    b.values.at(0, 0) = -3.0;  // difference 6.0 wraps to 6 - 2*pi
    a.values.at(0, 1) = 0.25;
    b.values.at(0, 1) = 0.75;
    a.values.at(0, 2) = -3.0;
    b.values.at(0, 2) = 3.0;
    PhaseMap d = wrapped_difference(a, b);
    CHECK(d.values.at(0, 0) == doctest::Approx(6.0 - 2.0 * kPi).epsilon(1e-12));
    CHECK(d.values.at(0, 1) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(d.values.at(0, 2) == doctest::Approx(2.0 * kPi - 6.0).epsilon(1e-12));
}

TEST_CASE("phase maps convert to height through the system constant") {
    FPPConfig cfg;
    const int h = 4, w = 4;
    PhaseMap phase, reference;
    phase.values = DField(h, w, 1.5);
    phase.wrapped = false;
    reference.values = DField(h, w, 0.5);
    reference.wrapped = false;

    HeightMap hm = phase_to_height(phase, reference, cfg);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            CHECK(hm.values.at(y, x) == doctest::Approx(cfg.height_coeff_K * 1.0).epsilon(1e-12));
            CHECK(hm.mask.at(y, x));
        }
    }

    DField modulation(h, w, cfg.modulation_B);
    modulation.at(0, 0) = 0.0;  // below threshold: excluded from the mask
    HeightMap masked = phase_to_height(phase, reference, cfg, &modulation);
    CHECK_FALSE(masked.mask.at(0, 0));
    CHECK(masked.mask.at(1, 1));

    PhaseMap still_wrapped = phase;
    still_wrapped.wrapped = true;
    CHECK_THROWS_AS(phase_to_height(still_wrapped, reference, cfg), StateError);
}

TEST_CASE("classical reconstruction round-trips the synthetic scene") {
    SceneSpec spec = small_scene(99, Layout::Overlapping);
    spec.object_count = 2;
    HeightMap truth = generate_height_map(spec);
    FPPConfig cfg;

    HeightMap rebuilt = psp_reconstruct(truth, cfg);
    REQUIRE(rebuilt.values.same_shape(truth.values.height, truth.values.width));

    double sum_sq = 0.0;
    int64_t n = 0;
    for (int y = 0; y < truth.values.height; ++y) {
        for (int x = 0; x < truth.values.width; ++x) {
            if (!rebuilt.mask.at(y, x)) continue;
            const double d = rebuilt.values.at(y, x) - truth.values.at(y, x);
            sum_sq += d * d;
            ++n;
        }
    }
    REQUIRE(n > 0);
    CHECK(std::sqrt(sum_sq / n) < 1e-3 * spec.height_range_mm);
}

TEST_CASE("config validation rejects inconsistent parameters") {
    FPPConfig cfg;
    cfg.ambient_A = 0.9;
    cfg.modulation_B = 0.2;  // A + B > 1 clips
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = FPPConfig{};
    cfg.low_freq_periods = cfg.fringe_periods;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = FPPConfig{};
    cfg.phase_steps_N = 2;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    SceneSpec scene;
    scene.blob_count_min = 5;
    scene.blob_count_max = 3;
    CHECK_THROWS_AS(scene.validate(), ConfigError);

    CHECK_THROWS_AS(layout_from_name("scattered"), ConfigError);
    CHECK(layout_from_name("separated") == Layout::Separated);
}
