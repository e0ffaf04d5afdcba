#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace uhrnet {

// Error taxonomy shared across the library. The C API maps these to codes.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct StateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense row-major H×W raster.
template <typename T>
struct BasicField {
    int height = 0;
    int width = 0;
    std::vector<T> data;

    BasicField() = default;
    BasicField(int h, int w, T fill = T{}) : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

    T& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
    const T& at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return data.size(); }
    bool same_shape(int h, int w) const { return height == h && width == w; }
};

using Field = BasicField<float>;
using DField = BasicField<double>;
using Mask = BasicField<uint8_t>;

/// Surface heights in millimeters over a validity mask. Masked-out pixels
/// carry value 0.
struct HeightMap {
    Field values;
    Mask mask;

    int height() const { return values.height; }
    int width() const { return values.width; }
    size_t mask_count() const;
};

/// Grayscale fringe intensities in [0,1]. Kept in double precision so the
/// phase-shift identities hold to solver tolerance; quantization to 8 bits
/// happens only at PNG persistence.
struct FringePattern {
    DField intensities;
    std::optional<int> phase_shift_index;

    int height() const { return intensities.height; }
    int width() const { return intensities.width; }
};

/// Phase field in radians; wrapped means every value lies in (-pi, pi].
struct PhaseMap {
    DField values;
    bool wrapped = true;

    int height() const { return values.height; }
    int width() const { return values.width; }
};

inline size_t HeightMap::mask_count() const {
    size_t n = 0;
    for (uint8_t m : mask.data) n += m ? 1 : 0;
    return n;
}

inline void require_same_shape(int ha, int wa, int hb, int wb, const std::string& what) {
    if (ha != hb || wa != wb) {
        throw ShapeError(what + ": dimension mismatch " + std::to_string(ha) + "x" + std::to_string(wa) +
                         " vs " + std::to_string(hb) + "x" + std::to_string(wb));
    }
}

}  // namespace uhrnet
