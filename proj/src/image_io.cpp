#include "image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

namespace uhrnet {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_png_bytes(const std::filesystem::path& path, const uint8_t* bytes, int h, int w) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open for writing: " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG write failed: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < h; ++y) {
        png_write_row(png, const_cast<png_bytep>(bytes + static_cast<size_t>(y) * w));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

BasicField<uint8_t> read_png_bytes(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open: " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("PNG read failed: " + path.string());
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    // Normalize everything to 8-bit grayscale.
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    int color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    if (png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);

    int h = static_cast<int>(png_get_image_height(png, info));
    int w = static_cast<int>(png_get_image_width(png, info));
    BasicField<uint8_t> out(h, w, 0);
    for (int y = 0; y < h; ++y) {
        png_read_row(png, out.data.data() + static_cast<size_t>(y) * w, nullptr);
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

}  // namespace

namespace {

template <typename T>
void write_gray_png_impl(const std::filesystem::path& path, const BasicField<T>& image) {
    std::vector<uint8_t> bytes(image.size());
    for (size_t i = 0; i < image.size(); ++i) {
        double q = std::floor(static_cast<double>(image.data[i]) * 255.0 + 0.5);
        bytes[i] = static_cast<uint8_t>(std::clamp(q, 0.0, 255.0));
    }
    write_png_bytes(path, bytes.data(), image.height, image.width);
}

}  // namespace

void write_gray_png(const std::filesystem::path& path, const Field& image) {
    write_gray_png_impl(path, image);
}

void write_gray_png(const std::filesystem::path& path, const DField& image) {
    write_gray_png_impl(path, image);
}

Field read_gray_png(const std::filesystem::path& path) {
    BasicField<uint8_t> bytes = read_png_bytes(path);
    Field out(bytes.height, bytes.width, 0.0f);
    for (size_t i = 0; i < bytes.size(); ++i) {
        out.data[i] = static_cast<float>(bytes.data[i]) / 255.0f;
    }
    return out;
}

void write_mask_png(const std::filesystem::path& path, const Mask& mask) {
    std::vector<uint8_t> bytes(mask.size());
    for (size_t i = 0; i < mask.size(); ++i) bytes[i] = mask.data[i] ? 255 : 0;
    write_png_bytes(path, bytes.data(), mask.height, mask.width);
}

Mask read_mask_png(const std::filesystem::path& path) {
    BasicField<uint8_t> bytes = read_png_bytes(path);
    Mask out(bytes.height, bytes.width, 0);
    for (size_t i = 0; i < bytes.size(); ++i) out.data[i] = bytes.data[i] >= 128 ? 1 : 0;
    return out;
}

void write_byte_png(const std::filesystem::path& path, const BasicField<uint8_t>& image) {
    write_png_bytes(path, image.data.data(), image.height, image.width);
}

void write_pfm(const std::filesystem::path& path, const Field& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "Pf\n" << image.width << " " << image.height << "\n-1.0\n";
    // PFM stores the bottom scanline first.
    for (int y = image.height - 1; y >= 0; --y) {
        out.write(reinterpret_cast<const char*>(image.data.data() + static_cast<size_t>(y) * image.width),
                  static_cast<std::streamsize>(image.width) * sizeof(float));
    }
    if (!out) throw IoError("PFM write failed: " + path.string());
}

Field read_pfm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "Pf") throw IoError("not a grayscale PFM: " + path.string());
    int w = 0, h = 0;
    double scale = 0.0;
    in >> w >> h >> scale;
    if (!in || w <= 0 || h <= 0 || scale == 0.0) throw IoError("bad PFM header: " + path.string());
    in.get();  // single whitespace after the scale line

    Field out(h, w, 0.0f);
    std::vector<float> row(w);
    for (int y = h - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(w) * sizeof(float));
        if (!in) throw IoError("truncated PFM: " + path.string());
        if (scale > 0.0) {  // big-endian payload
            for (float& v : row) {
                uint32_t bits;
                std::memcpy(&bits, &v, 4);
                bits = __builtin_bswap32(bits);
                std::memcpy(&v, &bits, 4);
            }
        }
        std::memcpy(out.data.data() + static_cast<size_t>(y) * w, row.data(),
                    static_cast<size_t>(w) * sizeof(float));
    }
    return out;
}

}  // namespace uhrnet
