#pragma once

#include <string>

#include "xq/core.hpp"

namespace xq {

/// 8-bit RGB image, row-major, 3 bytes per pixel.
struct Image {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> pixels;  // height * width * 3
};

Image read_png(const std::string& path);
void write_png(const std::string& path, const Image& img);

/// Raw-pixel patch extraction: the image is cut into patch_side x patch_side
/// RGB patches and each patch becomes one grid vector of dim 3 * patch_side^2
/// (channel-major: all red values row-major, then green, then blue), scaled
/// to [0,1]. Image sides must be divisible by patch_side.
FeatureGrid patchify(const Image& img, int patch_side);

/// Inverse of patchify; values are scaled back to [0,255], clamped and
/// rounded half-up.
Image unpatchify(const FeatureGrid& g, int patch_side);

/// Peak signal-to-noise ratio over 8-bit pixels; +inf for identical images.
double psnr(const Image& a, const Image& b);

}  // namespace xq
