#include "pipeline.hpp"

#include <cstdio>

#include "rng.hpp"

namespace fs = std::filesystem;

namespace uhrnet {

void DatasetSpec::validate() const {
    if (count < 1) throw ConfigError("dataset count must be >= 1");
    if (layout != "mixed") layout_from_name(layout);
    SceneSpec probe = scene;
    probe.layout = Layout::Single;
    probe.validate();
    fpp.validate();
}

nlohmann::json dataset_spec_to_json(const DatasetSpec& spec) {
    return nlohmann::json{{"count", spec.count},
                          {"seed", spec.seed},
                          {"canvas_height", spec.scene.canvas_height},
                          {"canvas_width", spec.scene.canvas_width},
                          {"height_range_mm", spec.scene.height_range_mm},
                          {"blob_count_min", spec.scene.blob_count_min},
                          {"blob_count_max", spec.scene.blob_count_max},
                          {"detail_amplitude_mm", spec.scene.detail_amplitude_mm},
                          {"layout", spec.layout},
                          {"ambient", spec.fpp.ambient_A},
                          {"modulation", spec.fpp.modulation_B},
                          {"fringe_periods", spec.fpp.fringe_periods},
                          {"phase_steps", spec.fpp.phase_steps_N},
                          {"height_coeff_k", spec.fpp.height_coeff_K},
                          {"low_freq_periods", spec.fpp.low_freq_periods},
                          {"noise_sigma", spec.fpp.noise_sigma},
                          {"gamma", spec.fpp.gamma}};
}

DatasetSpec dataset_spec_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("dataset spec must be a JSON object");
    static const char* known[] = {"count",         "seed",
                                  "canvas_height", "canvas_width",
                                  "height_range_mm", "blob_count_min",
                                  "blob_count_max", "detail_amplitude_mm",
                                  "layout",        "ambient",
                                  "modulation",    "fringe_periods",
                                  "phase_steps",   "height_coeff_k",
                                  "low_freq_periods", "noise_sigma",
                                  "gamma"};
    std::string unknown;
    for (const auto& item : j.items()) {
        bool found = false;
        for (const char* k : known) {
            if (item.key() == k) {
                found = true;
                break;
            }
        }
        if (!found) unknown += (unknown.empty() ? "" : ", ") + item.key();
    }
    if (!unknown.empty()) throw ConfigError("unknown dataset spec keys: " + unknown);

    DatasetSpec spec;
    if (j.contains("count")) j.at("count").get_to(spec.count);
    if (j.contains("seed")) j.at("seed").get_to(spec.seed);
    if (j.contains("canvas_height")) j.at("canvas_height").get_to(spec.scene.canvas_height);
    if (j.contains("canvas_width")) j.at("canvas_width").get_to(spec.scene.canvas_width);
    if (j.contains("height_range_mm")) j.at("height_range_mm").get_to(spec.scene.height_range_mm);
    if (j.contains("blob_count_min")) j.at("blob_count_min").get_to(spec.scene.blob_count_min);
    if (j.contains("blob_count_max")) j.at("blob_count_max").get_to(spec.scene.blob_count_max);
    if (j.contains("detail_amplitude_mm")) j.at("detail_amplitude_mm").get_to(spec.scene.detail_amplitude_mm);
    if (j.contains("layout")) j.at("layout").get_to(spec.layout);
    if (j.contains("ambient")) j.at("ambient").get_to(spec.fpp.ambient_A);
    if (j.contains("modulation")) j.at("modulation").get_to(spec.fpp.modulation_B);
    if (j.contains("fringe_periods")) j.at("fringe_periods").get_to(spec.fpp.fringe_periods);
    if (j.contains("phase_steps")) j.at("phase_steps").get_to(spec.fpp.phase_steps_N);
    if (j.contains("height_coeff_k")) j.at("height_coeff_k").get_to(spec.fpp.height_coeff_K);
    if (j.contains("low_freq_periods")) j.at("low_freq_periods").get_to(spec.fpp.low_freq_periods);
    if (j.contains("noise_sigma")) j.at("noise_sigma").get_to(spec.fpp.noise_sigma);
    if (j.contains("gamma")) j.at("gamma").get_to(spec.fpp.gamma);
    spec.validate();
    return spec;
}

Manifest generate_dataset(const DatasetSpec& spec, const fs::path& out_dir, std::ostream* log) {
    spec.validate();
    fs::create_directories(out_dir);

    static const Layout cycle[] = {Layout::Single, Layout::Separated, Layout::Overlapping};
    const bool mixed = spec.layout == "mixed";
    const Layout fixed = mixed ? Layout::Single : layout_from_name(spec.layout);

    Manifest manifest;
    manifest.canvas_height = spec.scene.canvas_height;
    manifest.canvas_width = spec.scene.canvas_width;
    manifest.height_scale_mm = spec.scene.height_range_mm;

    for (int i = 0; i < spec.count; ++i) {
        SceneSpec scene = spec.scene;
        scene.seed = Rng::mix(spec.seed ^ (0x5D4D5D4Dull + static_cast<uint64_t>(i)));
        scene.layout = mixed ? cycle[i % 3] : fixed;
        if (scene.layout == Layout::Single) {
            scene.object_count = 1;
        } else {
            scene.object_count = 2 + i % 2;
        }

        Sample sample;
        sample.height = generate_height_map(scene);
        sample.fringe = render_fringe(sample.height, spec.fpp, 0.0, spec.fpp.fringe_periods,
                                      Rng::mix(scene.seed ^ 0xF1A6Eull));

        char id[16];
        std::snprintf(id, sizeof(id), "%05d", i);
        SampleRecord record = write_sample(sample, out_dir, id);
        record.provenance = Provenance::Synthetic;
        manifest.records.push_back(record);
        if (log && ((i + 1) % 16 == 0 || i + 1 == spec.count)) {
            (*log) << "generated " << (i + 1) << "/" << spec.count << " samples\n";
        }
    }

    save_manifest(manifest, out_dir / "manifest.json");
    return manifest;
}

}  // namespace uhrnet
