#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "dataset.hpp"
#include "field.hpp"
#include "image_io.hpp"
#include "pipeline.hpp"

using namespace uhrnet;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("uhrnet_io_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Sample make_sample(uint64_t seed, int h = 24, int w = 32) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    Sample s;
    s.fringe.intensities = DField(h, w, 0.0);
    s.height.values = Field(h, w, 0.0f);
    s.height.mask = Mask(h, w, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            s.fringe.intensities.at(y, x) = unit(rng);
            s.height.values.at(y, x) = 20.0f * unit(rng) - 5.0f;
            s.height.mask.at(y, x) = unit(rng) > 0.25f ? 1 : 0;
        }
    }
    s.height.mask.at(0, 0) = 1;  // never empty
    return s;
}

Manifest dummy_manifest(size_t n) {
    Manifest m;
    m.canvas_height = 8;
    m.canvas_width = 8;
    m.height_scale_mm = 10.0;
    for (size_t i = 0; i < n; ++i) {
        SampleRecord r;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "r%05zu", i);
        r.id = buf;
        r.fringe_path = r.id + "_fringe.png";
        r.height_path = r.id + "_height.pfm";
        r.mask_path = r.id + "_mask.png";
        m.records.push_back(r);
    }
    return m;
}

}  // namespace

TEST_CASE("pfm round trip is bit-exact for every finite float") {
    fs::path dir = fresh_dir("pfm");
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<float> wide(-1e6f, 1e6f);

    Field img(17, 23, 0.0f);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) img.at(y, x) = wide(rng);
    }
    img.at(0, 0) = 0.0f;
    img.at(0, 1) = -0.0f;
    img.at(0, 2) = 1e-38f;
    img.at(0, 3) = -3.4e38f;
    img.at(0, 4) = 1.17549435e-38f / 1024.0f;  // subnormal

    write_pfm(dir / "a.pfm", img);
    Field back = read_pfm(dir / "a.pfm");
    REQUIRE(back.same_shape(img.height, img.width));
    for (size_t i = 0; i < img.size(); ++i) {
        CHECK(std::bit_cast<uint32_t>(back.data[i]) == std::bit_cast<uint32_t>(img.data[i]));
    }

    CHECK_THROWS_AS(read_pfm(dir / "missing.pfm"), IoError);
    std::ofstream(dir / "bad.pfm") << "P6\n1 1\n-1.0\n";
    CHECK_THROWS_AS(read_pfm(dir / "bad.pfm"), IoError);
}

TEST_CASE("gray png round trip stays within half a quantization step") {
    fs::path dir = fresh_dir("png");
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);

    Field img(15, 19, 0.0f);
    for (size_t i = 0; i < img.size(); ++i) img.data[i] = unit(rng);
    write_gray_png(dir / "a.png", img);
    Field back = read_gray_png(dir / "a.png");
    REQUIRE(back.same_shape(img.height, img.width));
    for (size_t i = 0; i < img.size(); ++i) {
        CHECK(std::abs(back.data[i] - img.data[i]) <= 0.5f / 255.0f + 1e-6f);
    }

    // Exact grid values survive the round trip unchanged.
    Field grid(1, 256, 0.0f);
    for (int x = 0; x < 256; ++x) grid.at(0, x) = static_cast<float>(x) / 255.0f;
    write_gray_png(dir / "grid.png", grid);
    Field grid_back = read_gray_png(dir / "grid.png");
    for (int x = 0; x < 256; ++x) CHECK(grid_back.at(0, x) == grid.at(0, x));

    // Out-of-range values clamp instead of wrapping.
    Field hot(1, 2, 0.0f);
    hot.at(0, 0) = 1.7f;
    hot.at(0, 1) = -0.3f;
    write_gray_png(dir / "hot.png", hot);
    Field hot_back = read_gray_png(dir / "hot.png");
    CHECK(hot_back.at(0, 0) == 1.0f);
    CHECK(hot_back.at(0, 1) == 0.0f);
}

TEST_CASE("mask png round trip is exact") {
    fs::path dir = fresh_dir("mask");
    std::mt19937_64 rng(9);
    Mask m(13, 21, 0);
    for (size_t i = 0; i < m.size(); ++i) m.data[i] = (rng() & 1) ? 1 : 0;
    write_mask_png(dir / "m.png", m);
    Mask back = read_mask_png(dir / "m.png");
    REQUIRE(back.same_shape(m.height, m.width));
    for (size_t i = 0; i < m.size(); ++i) CHECK(back.data[i] == m.data[i]);
}

TEST_CASE("sample persistence round trip") {
    fs::path dir = fresh_dir("sample");
    Sample s = make_sample(5);
    SampleRecord rec = write_sample(s, dir, "00042");
    CHECK(rec.id == "00042");
    CHECK(rec.fringe_path.find('/') == std::string::npos);  // manifest-relative

    Sample back = load_sample(dir, rec);
    for (size_t i = 0; i < s.height.values.size(); ++i) {
        CHECK(std::bit_cast<uint32_t>(back.height.values.data[i]) ==
              std::bit_cast<uint32_t>(s.height.values.data[i]));
        CHECK(back.height.mask.data[i] == s.height.mask.data[i]);
        CHECK(std::abs(back.fringe.intensities.data[i] - s.fringe.intensities.data[i]) <=
              0.5 / 255.0 + 1e-9);
    }

    Sample empty = make_sample(6);
    empty.height.mask = Mask(24, 32, 0);
    CHECK_THROWS_AS(write_sample(empty, dir, "bad"), ConfigError);

    SampleRecord missing = rec;
    missing.height_path = "nope.pfm";
    CHECK_THROWS_AS(load_sample(dir, missing), IoError);
}

TEST_CASE("manifest json round trip preserves every record") {
    fs::path dir = fresh_dir("manifest");
    Manifest m = dummy_manifest(5);
    m.height_scale_mm = 17.5;
    m.split_seed = 99;
    m.records[0].split = Split::Train;
    m.records[1].split = Split::Val;
    m.records[2].split = Split::Test;
    m.records[3].provenance = Provenance::External;

    save_manifest(m, dir / "manifest.json");
    Manifest back = load_manifest(dir / "manifest.json");
    CHECK(back.version == m.version);
    CHECK(back.canvas_height == m.canvas_height);
    CHECK(back.canvas_width == m.canvas_width);
    CHECK(back.height_scale_mm == m.height_scale_mm);
    CHECK(back.split_seed == m.split_seed);
    REQUIRE(back.records.size() == m.records.size());
    for (size_t i = 0; i < m.records.size(); ++i) {
        CHECK(back.records[i].id == m.records[i].id);
        CHECK(back.records[i].fringe_path == m.records[i].fringe_path);
        CHECK(back.records[i].height_path == m.records[i].height_path);
        CHECK(back.records[i].mask_path == m.records[i].mask_path);
        CHECK(back.records[i].split == m.records[i].split);
        CHECK(back.records[i].provenance == m.records[i].provenance);
    }

    CHECK_THROWS_AS(load_manifest(dir / "absent.json"), IoError);
}

TEST_CASE("split arithmetic matches rounded ratios") {
    Manifest m = dummy_manifest(1532);
    split_manifest(m, SplitRatios{}, 7);
    CHECK(m.count_split(Split::Train) == 1226);
    CHECK(m.count_split(Split::Val) == 153);
    CHECK(m.count_split(Split::Test) == 153);
    CHECK(m.split_seed == 7);

    Manifest ten = dummy_manifest(10);
    split_manifest(ten, SplitRatios{}, 1);
    CHECK(ten.count_split(Split::Train) == 8);
    CHECK(ten.count_split(Split::Val) == 1);
    CHECK(ten.count_split(Split::Test) == 1);

    Manifest six = dummy_manifest(6);
    split_manifest(six, SplitRatios{}, 1);
    CHECK(six.count_split(Split::Train) == 5);
    CHECK(six.count_split(Split::Val) == 1);
    CHECK(six.count_split(Split::Test) == 0);

    Manifest custom = dummy_manifest(128);
    split_manifest(custom, SplitRatios{0.75, 0.125, 0.125}, 3);
    CHECK(custom.count_split(Split::Train) == 96);
    CHECK(custom.count_split(Split::Val) == 16);
    CHECK(custom.count_split(Split::Test) == 16);
}

TEST_CASE("split assignment is a pure function of ids, ratios and seed") {
    Manifest a = dummy_manifest(64), b = dummy_manifest(64);
    split_manifest(a, SplitRatios{}, 11);
    split_manifest(b, SplitRatios{}, 11);
    for (size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i].split == b.records[i].split);

    Manifest c = dummy_manifest(64);
    split_manifest(c, SplitRatios{}, 12);
    bool any_diff = false;
    for (size_t i = 0; i < a.records.size(); ++i) {
        if (a.records[i].split != c.records[i].split) any_diff = true;
    }
    CHECK(any_diff);

    Manifest tiny = dummy_manifest(2);
    CHECK_THROWS_AS(split_manifest(tiny, SplitRatios{}, 1), ConfigError);
    split_manifest(tiny, SplitRatios{}, 1, /*allow_degenerate=*/true);
    CHECK(tiny.count_split(Split::Train) == 2);

    Manifest bad = dummy_manifest(10);
    CHECK_THROWS_AS(split_manifest(bad, SplitRatios{0.5, 0.1, 0.1}, 1), ConfigError);
}

TEST_CASE("generated datasets re-ingest to the same records") {
    fs::path src = fresh_dir("gen_src");
    fs::path out = fresh_dir("gen_out");

    DatasetSpec spec;
    spec.count = 5;
    spec.seed = 31;
    spec.scene.canvas_height = 32;
    spec.scene.canvas_width = 48;
    spec.fpp.fringe_periods = 8.0;
    spec.fpp.low_freq_periods = 2.0;
    Manifest m = generate_dataset(spec, src);
    REQUIRE(m.records.size() == 5);

    Manifest re = ingest_external(src, "native", out);
    REQUIRE(re.records.size() == m.records.size());
    std::set<std::string> want, got;
    for (const auto& r : m.records) want.insert(r.id);
    for (const auto& r : re.records) got.insert(r.id);
    CHECK(want == got);
    CHECK(re.canvas_height == m.canvas_height);
    CHECK(re.canvas_width == m.canvas_width);
    CHECK(re.height_scale_mm == m.height_scale_mm);

    // The copied samples decode identically.
    for (const auto& r : re.records) {
        const auto orig = std::find_if(m.records.begin(), m.records.end(),
                                       [&](const SampleRecord& o) { return o.id == r.id; });
        REQUIRE(orig != m.records.end());
        Sample a = load_sample(src, *orig);
        Sample b = load_sample(out, r);
        for (size_t i = 0; i < a.height.values.size(); ++i) {
            CHECK(a.height.values.data[i] == b.height.values.data[i]);
            CHECK(a.fringe.intensities.data[i] == b.fringe.intensities.data[i]);
        }
    }
}

TEST_CASE("pairs adapter scans loose files and fills missing masks") {
    fs::path src = fresh_dir("pairs_src");
    fs::path out = fresh_dir("pairs_out");

    Sample s1 = make_sample(1), s2 = make_sample(2);
    write_gray_png(src / "a_fringe.png", s1.fringe.intensities);
    write_pfm(src / "a_height.pfm", s1.height.values);
    write_mask_png(src / "a_mask.png", s1.height.mask);
    write_gray_png(src / "b_fringe.png", s2.fringe.intensities);
    write_pfm(src / "b_height.pfm", s2.height.values);

    Manifest m = ingest_external(src, "pairs", out);
    REQUIRE(m.records.size() == 2);
    CHECK(m.records[0].provenance == Provenance::External);

    Sample b = load_sample(out, *std::find_if(m.records.begin(), m.records.end(),
                                              [](const SampleRecord& r) { return r.id == "b"; }));
    CHECK(b.height.mask_count() == b.height.mask.size());  // defaulted to all-valid

    CHECK_THROWS_AS(ingest_external(src, "zip", out), ConfigError);
    fs::path empty = fresh_dir("pairs_empty");
    CHECK_THROWS_AS(ingest_external(empty, "pairs", out), IoError);
    CHECK_THROWS_AS(ingest_external(empty, "native", out), IoError);

    write_gray_png(src / "c_fringe.png", s1.fringe.intensities);
    CHECK_THROWS_AS(ingest_external(src, "pairs", fresh_dir("pairs_out2")), IoError);
}
