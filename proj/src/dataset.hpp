#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "field.hpp"

namespace uhrnet {

enum class Provenance { Synthetic, External };
enum class Split { Train, Val, Test, Unassigned };

const char* provenance_name(Provenance p);
const char* split_name(Split s);
Provenance provenance_from_name(const std::string& name);
Split split_from_name(const std::string& name);

struct SampleRecord {
    std::string id;
    std::string fringe_path;  // relative to the manifest directory
    std::string height_path;
    std::string mask_path;
    Provenance provenance = Provenance::Synthetic;
    Split split = Split::Unassigned;
};

struct Manifest {
    std::string version = "1";
    int canvas_height = 0;
    int canvas_width = 0;
    double height_scale_mm = 0.0;  // dataset-wide normalization constant
    uint64_t split_seed = 0;
    std::vector<SampleRecord> records;

    size_t count_split(Split s) const;
    std::vector<size_t> indices_of(Split s) const;
};

struct Sample {
    FringePattern fringe;
    HeightMap height;
};

/// Persist one sample: fringe as 8-bit grayscale PNG, height as float PFM,
/// mask as 0/255 PNG. The height read-back is bit-exact, the fringe is within
/// half a quantization step.
SampleRecord write_sample(const Sample& sample, const std::filesystem::path& dir, const std::string& id);

Sample load_sample(const std::filesystem::path& manifest_dir, const SampleRecord& record);

void save_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest load_manifest(const std::filesystem::path& path);

struct SplitRatios {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
};

/// Shuffle records by seed (keyed on record ids) and assign
/// train = round(train*n), val = round(val*n), test = remainder. With fewer
/// than 3 records a degenerate split needs `allow_degenerate`.
void split_manifest(Manifest& manifest, const SplitRatios& ratios, uint64_t seed,
                    bool allow_degenerate = false);

/// Convert a foreign dataset directory into the PNG/PFM layout under out_dir
/// and build its manifest. Adapters: "native" re-reads a directory this
/// repository produced (manifest.json present); "pairs" scans for
/// <id>_fringe.png / <id>_height.pfm (/ optional <id>_mask.png) file pairs.
Manifest ingest_external(const std::filesystem::path& dir, const std::string& adapter,
                         const std::filesystem::path& out_dir);

}  // namespace uhrnet
