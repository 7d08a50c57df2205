#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace satsurf {

// Row-major, row 0 = top. Index (u, v) = row u, column v.
struct ImageU8 {
    int width = 0, height = 0, channels = 1;
    std::vector<std::uint8_t> data;

    std::uint8_t& at(int u, int v, int c = 0) {
        return data[(static_cast<std::size_t>(u) * width + v) * channels + c];
    }
    std::uint8_t at(int u, int v, int c = 0) const {
        return data[(static_cast<std::size_t>(u) * width + v) * channels + c];
    }
};

struct FloatImage {
    int width = 0, height = 0;
    std::vector<float> data;

    FloatImage() = default;
    FloatImage(int w, int h, float fill = 0.f) : width(w), height(h), data(std::size_t(w) * h, fill) {}

    float& at(int u, int v) { return data[static_cast<std::size_t>(u) * width + v]; }
    float at(int u, int v) const { return data[static_cast<std::size_t>(u) * width + v]; }
};

// 8-bit gray or RGB PNG.
ImageU8 read_png(const std::filesystem::path& file);
void write_png(const std::filesystem::path& file, const ImageU8& image);

// Single-channel little-endian PFM ("Pf", negative scale).
FloatImage read_pfm(const std::filesystem::path& file);
void write_pfm(const std::filesystem::path& file, const FloatImage& image);

}  // namespace satsurf
