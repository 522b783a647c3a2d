#include "xq/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <memory>

namespace xq {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) {
            std::fclose(f);
        }
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

}  // namespace

Image read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) {
        throw IoError("cannot open " + path + " for reading");
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                             nullptr, nullptr);
    if (!png) {
        throw IoError("png_create_read_struct failed");
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    Image img;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("failed to decode PNG " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    png_byte color_type = png_get_color_type(png, info);
    png_byte bit_depth = png_get_bit_depth(png, info);

    if (bit_depth == 16) {
        png_set_strip_16(png);
    }
    if (color_type == PNG_COLOR_TYPE_PALETTE) {
        png_set_palette_to_rgb(png);
    }
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
    }
    if (png_get_valid(png, info, PNG_INFO_tRNS)) {
        png_set_tRNS_to_alpha(png);
    }
    if (color_type == PNG_COLOR_TYPE_GRAY ||
        color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
    }
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    img.pixels.resize(static_cast<size_t>(img.height) * img.width * 3);
    rows.resize(img.height);
    for (int r = 0; r < img.height; ++r) {
        rows[r] = img.pixels.data() + static_cast<size_t>(r) * img.width * 3;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png(const std::string& path, const Image& img) {
    if (img.pixels.size() != static_cast<size_t>(img.height) * img.width * 3) {
        throw ShapeError("image pixel buffer length mismatch");
    }
    std::string tmp = path + ".tmp";
    FilePtr fp(std::fopen(tmp.c_str(), "wb"));
    if (!fp) {
        throw IoError("cannot open " + tmp + " for writing");
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                              nullptr, nullptr);
    if (!png) {
        throw IoError("png_create_write_struct failed");
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::remove(tmp.c_str());
        throw IoError("failed to encode PNG " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_const_bytep> rows(img.height);
    for (int r = 0; r < img.height; ++r) {
        rows[r] = img.pixels.data() + static_cast<size_t>(r) * img.width * 3;
    }
    for (int r = 0; r < img.height; ++r) {
        png_write_row(png, rows[r]);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    fp.reset();
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::remove(tmp.c_str());
        throw IoError("cannot rename " + tmp + " to " + path);
    }
}

FeatureGrid patchify(const Image& img, int patch_side) {
    if (patch_side < 1) {
        throw ValueError("patch side must be positive");
    }
    if (img.height % patch_side != 0 || img.width % patch_side != 0) {
        throw ShapeError("image " + std::to_string(img.width) + "x" +
                         std::to_string(img.height) +
                         " is not divisible by patch side " +
                         std::to_string(patch_side));
    }
    const int gh = img.height / patch_side;
    const int gw = img.width / patch_side;
    const int area = patch_side * patch_side;
    FeatureGrid g(gh, gw, 3 * area);
    for (int gr = 0; gr < gh; ++gr) {
        for (int gc = 0; gc < gw; ++gc) {
            auto dst = g.at(gr, gc);
            for (int c = 0; c < 3; ++c) {
                for (int pr = 0; pr < patch_side; ++pr) {
                    for (int pc = 0; pc < patch_side; ++pc) {
                        int row = gr * patch_side + pr;
                        int col = gc * patch_side + pc;
                        uint8_t v = img.pixels[(static_cast<size_t>(row) *
                                                        img.width +
                                                col) *
                                                       3 +
                                               c];
                        dst[c * area + pr * patch_side + pc] = v / 255.0;
                    }
                }
            }
        }
    }
    return g;
}

Image unpatchify(const FeatureGrid& g, int patch_side) {
    const int area = patch_side * patch_side;
    if (g.dim() != 3 * area) {
        throw ShapeError("grid dim " + std::to_string(g.dim()) +
                         " does not match 3 * patch_side^2 = " +
                         std::to_string(3 * area));
    }
    Image img;
    img.height = g.height() * patch_side;
    img.width = g.width() * patch_side;
    img.pixels.resize(static_cast<size_t>(img.height) * img.width * 3);
    for (int gr = 0; gr < g.height(); ++gr) {
        for (int gc = 0; gc < g.width(); ++gc) {
            auto src = g.at(gr, gc);
            for (int c = 0; c < 3; ++c) {
                for (int pr = 0; pr < patch_side; ++pr) {
                    for (int pc = 0; pc < patch_side; ++pc) {
                        double v = src[c * area + pr * patch_side + pc] * 255.0;
                        v = std::clamp(v, 0.0, 255.0);
                        // round half up
                        uint8_t byte = static_cast<uint8_t>(
                                std::floor(v + 0.5) > 255.0
                                        ? 255.0
                                        : std::floor(v + 0.5));
                        int row = gr * patch_side + pr;
                        int col = gc * patch_side + pc;
                        img.pixels[(static_cast<size_t>(row) * img.width +
                                    col) *
                                           3 +
                                   c] = byte;
                    }
                }
            }
        }
    }
    return img;
}

double psnr(const Image& a, const Image& b) {
    if (a.height != b.height || a.width != b.width) {
        throw ShapeError("PSNR image shape mismatch");
    }
    double acc = 0.0;
    for (size_t i = 0; i < a.pixels.size(); ++i) {
        double d = static_cast<double>(a.pixels[i]) - b.pixels[i];
        acc += d * d;
    }
    double m = acc / static_cast<double>(a.pixels.size());
    if (m == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(255.0 * 255.0 / m);
}

}  // namespace xq
