#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "image_io.hpp"
#include "rng.hpp"

namespace uhrnet {

using nlohmann::json;

namespace {

DField widen(const Field& f) {
    DField out(f.height, f.width, 0.0);
    for (size_t i = 0; i < f.size(); ++i) out.data[i] = f.data[i];
    return out;
}

}  // namespace

const char* provenance_name(Provenance p) {
    return p == Provenance::Synthetic ? "synthetic" : "external";
}

const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
        case Split::Unassigned: return "unassigned";
    }
    return "unassigned";
}

Provenance provenance_from_name(const std::string& name) {
    if (name == "synthetic") return Provenance::Synthetic;
    if (name == "external") return Provenance::External;
    throw ConfigError("unknown provenance '" + name + "'");
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::Train;
    if (name == "val") return Split::Val;
    if (name == "test") return Split::Test;
    if (name == "unassigned") return Split::Unassigned;
    throw ConfigError("unknown split '" + name + "'");
}

size_t Manifest::count_split(Split s) const {
    size_t n = 0;
    for (const auto& r : records) n += r.split == s ? 1 : 0;
    return n;
}

std::vector<size_t> Manifest::indices_of(Split s) const {
    std::vector<size_t> idx;
    for (size_t i = 0; i < records.size(); ++i) {
        if (records[i].split == s) idx.push_back(i);
    }
    return idx;
}

SampleRecord write_sample(const Sample& sample, const std::filesystem::path& dir, const std::string& id) {
    require_same_shape(sample.fringe.height(), sample.fringe.width(), sample.height.height(),
                       sample.height.width(), "write_sample");
    if (sample.height.mask_count() == 0) {
        throw ConfigError("sample '" + id + "' has an empty mask");
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (!std::filesystem::is_directory(dir)) {
        throw IoError("cannot create sample directory: " + dir.string());
    }

    SampleRecord record;
    record.id = id;
    record.fringe_path = id + "_fringe.png";
    record.height_path = id + "_height.pfm";
    record.mask_path = id + "_mask.png";
    write_gray_png(dir / record.fringe_path, sample.fringe.intensities);
    write_pfm(dir / record.height_path, sample.height.values);
    write_mask_png(dir / record.mask_path, sample.height.mask);
    return record;
}

Sample load_sample(const std::filesystem::path& manifest_dir, const SampleRecord& record) {
    Sample s;
    s.fringe.intensities = widen(read_gray_png(manifest_dir / record.fringe_path));
    s.height.values = read_pfm(manifest_dir / record.height_path);
    s.height.mask = read_mask_png(manifest_dir / record.mask_path);
    require_same_shape(s.fringe.height(), s.fringe.width(), s.height.height(), s.height.width(),
                       "sample '" + record.id + "'");
    require_same_shape(s.height.values.height, s.height.values.width, s.height.mask.height,
                       s.height.mask.width, "sample '" + record.id + "'");
    return s;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    json doc;
    doc["version"] = manifest.version;
    doc["canvas"] = {manifest.canvas_height, manifest.canvas_width};
    doc["height_scale_mm"] = manifest.height_scale_mm;
    doc["split_seed"] = manifest.split_seed;
    json records = json::array();
    for (const auto& r : manifest.records) {
        records.push_back({{"id", r.id},
                           {"fringe_path", r.fringe_path},
                           {"height_path", r.height_path},
                           {"mask_path", r.mask_path},
                           {"provenance", provenance_name(r.provenance)},
                           {"split", split_name(r.split)}});
    }
    doc["records"] = std::move(records);

    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path.string());
    out << doc.dump(2) << "\n";
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw IoError("malformed manifest " + path.string() + ": " + e.what());
    }

    Manifest m;
    try {
        m.version = doc.at("version").get<std::string>();
        m.canvas_height = doc.at("canvas").at(0).get<int>();
        m.canvas_width = doc.at("canvas").at(1).get<int>();
        m.height_scale_mm = doc.at("height_scale_mm").get<double>();
        m.split_seed = doc.value("split_seed", uint64_t{0});
        std::set<std::string> ids;
        for (const auto& r : doc.at("records")) {
            SampleRecord record;
            record.id = r.at("id").get<std::string>();
            record.fringe_path = r.at("fringe_path").get<std::string>();
            record.height_path = r.at("height_path").get<std::string>();
            record.mask_path = r.at("mask_path").get<std::string>();
            record.provenance = provenance_from_name(r.at("provenance").get<std::string>());
            record.split = split_from_name(r.value("split", "unassigned"));
            if (!ids.insert(record.id).second) {
                throw ConfigError("duplicate record id '" + record.id + "' in " + path.string());
            }
            m.records.push_back(std::move(record));
        }
    } catch (const json::exception& e) {
        throw IoError("manifest " + path.string() + " is missing fields: " + e.what());
    }
    return m;
}

void split_manifest(Manifest& manifest, const SplitRatios& ratios, uint64_t seed, bool allow_degenerate) {
    double sum = ratios.train + ratios.val + ratios.test;
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
    const size_t n = manifest.records.size();
    if (n == 0) throw ConfigError("cannot split an empty manifest");
    if (n < 3 && !allow_degenerate) {
        throw ConfigError("fewer than 3 records cannot fill three splits (pass allow_degenerate to force)");
    }

    // Assignment is a pure function of (record ids, ratios, seed): shuffle an
    // id-sorted index list with our own Fisher-Yates.
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return manifest.records[a].id < manifest.records[b].id;
    });
    Rng rng(Rng::mix(seed ^ 0x51137Du));
    rng.shuffle(order);

    size_t n_train = static_cast<size_t>(std::llround(ratios.train * static_cast<double>(n)));
    size_t n_val = static_cast<size_t>(std::llround(ratios.val * static_cast<double>(n)));
    n_train = std::min(n_train, n);
    n_val = std::min(n_val, n - n_train);

    for (size_t i = 0; i < n; ++i) {
        Split s = i < n_train ? Split::Train : (i < n_train + n_val ? Split::Val : Split::Test);
        manifest.records[order[i]].split = s;
    }
    manifest.split_seed = seed;
}

namespace {

Manifest ingest_native(const std::filesystem::path& dir, const std::filesystem::path& out_dir) {
    auto manifest_path = dir / "manifest.json";
    if (!std::filesystem::exists(manifest_path)) {
        throw IoError("native adapter: no manifest.json under " + dir.string());
    }
    Manifest m = load_manifest(manifest_path);
    const bool in_place =
        std::filesystem::exists(out_dir) && std::filesystem::equivalent(dir, out_dir);
    if (!in_place) std::filesystem::create_directories(out_dir);
    double max_abs = 0.0;
    for (const auto& r : m.records) {
        Sample s = load_sample(dir, r);  // validates existence and shapes
        require_same_shape(m.canvas_height, m.canvas_width, s.height.height(), s.height.width(),
                           "record '" + r.id + "'");
        for (float v : s.height.values.data) max_abs = std::max(max_abs, std::abs(static_cast<double>(v)));
        if (!in_place) {
            for (const std::string& rel : {r.fringe_path, r.height_path, r.mask_path}) {
                std::filesystem::copy_file(dir / rel, out_dir / rel,
                                           std::filesystem::copy_options::overwrite_existing);
            }
        }
    }
    if (m.height_scale_mm <= 0.0) m.height_scale_mm = max_abs;
    return m;
}

Manifest ingest_pairs(const std::filesystem::path& dir, const std::filesystem::path& out_dir) {
    std::vector<std::string> ids;
    std::vector<std::filesystem::path> strays;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string name = entry.path().filename().string();
        if (name == "manifest.json") continue;
        auto pos = name.find("_fringe.png");
        if (pos != std::string::npos && pos + 11 == name.size()) {
            ids.push_back(name.substr(0, pos));
        } else if (name.find("_height.pfm") == std::string::npos &&
                   name.find("_mask.png") == std::string::npos) {
            strays.push_back(entry.path());
        }
    }
    if (ids.empty()) {
        std::string hint = strays.empty() ? dir.string() : strays.front().string();
        throw IoError("pairs adapter: no *_fringe.png/*_height.pfm pairs; first unparseable entry: " + hint);
    }
    std::sort(ids.begin(), ids.end());

    std::filesystem::create_directories(out_dir);
    Manifest m;
    double max_abs = 0.0;
    for (const std::string& id : ids) {
        auto height_path = dir / (id + "_height.pfm");
        if (!std::filesystem::exists(height_path)) {
            throw IoError("pairs adapter: missing height for fringe '" + id + "': " + height_path.string());
        }
        Sample s;
        s.fringe.intensities = widen(read_gray_png(dir / (id + "_fringe.png")));
        s.height.values = read_pfm(height_path);
        auto mask_path = dir / (id + "_mask.png");
        if (std::filesystem::exists(mask_path)) {
            s.height.mask = read_mask_png(mask_path);
        } else {
            s.height.mask = Mask(s.height.values.height, s.height.values.width, 1);
        }
        require_same_shape(s.fringe.height(), s.fringe.width(), s.height.height(), s.height.width(),
                           "pair '" + id + "'");
        if (m.records.empty()) {
            m.canvas_height = s.height.height();
            m.canvas_width = s.height.width();
        } else {
            require_same_shape(m.canvas_height, m.canvas_width, s.height.height(), s.height.width(),
                               "pair '" + id + "'");
        }
        for (float v : s.height.values.data) max_abs = std::max(max_abs, std::abs(static_cast<double>(v)));
        SampleRecord record = write_sample(s, out_dir, id);
        record.provenance = Provenance::External;
        m.records.push_back(std::move(record));
    }
    m.height_scale_mm = max_abs;
    return m;
}

}  // namespace

Manifest ingest_external(const std::filesystem::path& dir, const std::string& adapter,
                         const std::filesystem::path& out_dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw IoError("ingest: not a directory: " + dir.string());
    }
    if (std::filesystem::is_empty(dir)) {
        throw IoError("ingest: directory is empty: " + dir.string());
    }
    Manifest m;
    if (adapter == "native") {
        m = ingest_native(dir, out_dir);
    } else if (adapter == "pairs") {
        m = ingest_pairs(dir, out_dir);
    } else {
        throw ConfigError("unknown ingest adapter '" + adapter + "' (expected native|pairs)");
    }
    save_manifest(m, out_dir / "manifest.json");
    return m;
}

}  // namespace uhrnet
