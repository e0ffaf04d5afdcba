#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <ostream>
#include <string>

#include "datagen.hpp"
#include "dataset.hpp"

namespace uhrnet {

/// Whole-dataset generation parameters. `layout` accepts the three scene
/// layouts plus "mixed", which cycles through them record by record.
struct DatasetSpec {
    int count = 16;
    uint64_t seed = 0;
    SceneSpec scene;  // per-record seed, layout and object count are derived
    FPPConfig fpp;
    std::string layout = "mixed";

    void validate() const;
};

nlohmann::json dataset_spec_to_json(const DatasetSpec& spec);

/// Strict parse: missing keys keep defaults, unknown keys raise ConfigError.
DatasetSpec dataset_spec_from_json(const nlohmann::json& j);

/// Generate `count` scenes, render one single-shot fringe per scene, and
/// persist fringe/height/mask plus manifest.json under out_dir. The
/// manifest's height_scale_mm is the scene height range. Unsplit records;
/// run split_manifest afterwards.
Manifest generate_dataset(const DatasetSpec& spec, const std::filesystem::path& out_dir,
                          std::ostream* log = nullptr);

}  // namespace uhrnet
