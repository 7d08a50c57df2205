#include "satsurf/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include "satsurf/common.hpp"

namespace satsurf {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

ImageU8 read_png(const std::filesystem::path& file) {
    FilePtr fp(std::fopen(file.string().c_str(), "rb"));
    if (!fp) throw IoError("png: cannot open " + file.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png: allocation failure");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png: failed to read " + file.string());
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_set_strip_16(png);
    png_set_packing(png);
    png_set_strip_alpha(png);
    const int color_type = png_get_color_type(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);

    ImageU8 img;
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.channels = static_cast<int>(png_get_channels(png, info));
    if (img.channels != 1 && img.channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png: expected 1- or 3-channel image in " + file.string());
    }
    img.data.resize(std::size_t(img.width) * img.height * img.channels);
    std::vector<png_bytep> rows(img.height);
    for (int u = 0; u < img.height; ++u)
        rows[u] = img.data.data() + std::size_t(u) * img.width * img.channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png(const std::filesystem::path& file, const ImageU8& image) {
    if (image.channels != 1 && image.channels != 3)
        throw ValidationError("png: only gray or RGB images are written");
    FilePtr fp(std::fopen(file.string().c_str(), "wb"));
    if (!fp) throw IoError("png: cannot write " + file.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png: allocation failure");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png: failed to write " + file.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, image.width, image.height, 8,
                 image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(image.height);
    for (int u = 0; u < image.height; ++u)
        rows[u] = const_cast<png_bytep>(image.data.data() +
                                        std::size_t(u) * image.width * image.channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

FloatImage read_pfm(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("pfm: cannot open " + file.string());
    std::string magic;
    int w = 0, h = 0;
    double scale = 0;
    in >> magic >> w >> h >> scale;
    if (magic != "Pf") throw IoError("pfm: expected single-channel Pf in " + file.string());
    if (scale >= 0) throw IoError("pfm: big-endian files are not supported: " + file.string());
    if (w <= 0 || h <= 0) throw IoError("pfm: bad dimensions in " + file.string());
    in.get();  // single whitespace after the header
    FloatImage img(w, h);
    // rows are stored bottom-to-top
    for (int u = h - 1; u >= 0; --u)
        in.read(reinterpret_cast<char*>(img.data.data() + std::size_t(u) * w),
                std::streamsize(w) * 4);
    if (!in) throw IoError("pfm: truncated file " + file.string());
    return img;
}

void write_pfm(const std::filesystem::path& file, const FloatImage& image) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("pfm: cannot write " + file.string());
    out << "Pf\n" << image.width << " " << image.height << "\n-1.0\n";
    for (int u = image.height - 1; u >= 0; --u)
        out.write(reinterpret_cast<const char*>(image.data.data() + std::size_t(u) * image.width),
                  std::streamsize(image.width) * 4);
    if (!out) throw IoError("pfm: write failed for " + file.string());
}

}  // namespace satsurf
