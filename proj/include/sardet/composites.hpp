#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "sardet/geometry.hpp"

namespace sardet {

/// Single-band float grid, row-major. SAR bands hold linear amplitude;
/// optical bands hold scaled top-of-atmosphere reflectance.
struct BandRaster {
    int width = 0;
    int height = 0;
    std::vector<float> values; // width * height, row-major
    std::optional<float> nodata;

    float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    bool is_nodata(int x, int y) const { return nodata && at(x, y) == *nodata; }
};

/// Interleaved 8-bit RGB.
struct RGBImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> samples; // width * height * 3

    std::size_t offset(int x, int y) const {
        return (static_cast<std::size_t>(y) * width + x) * 3;
    }
};

struct CropSpec {
    int patch_size = 600;
    int stride = 0;              // 0 means patch_size (non-overlapping)
    double min_box_visibility = 0.5; // detection patches only

    int effective_stride() const { return stride > 0 ? stride : patch_size; }
};

struct Patch {
    RGBImage image;
    int origin_x = 0;
    int origin_y = 0;
};

struct DetectionPatch {
    RGBImage image;
    int origin_x = 0;
    int origin_y = 0;
    std::vector<Annotation> annotations; // remapped to patch coordinates
};

enum class AugmentOp { FlipH, FlipV, Rot90, Rot180, Rot270 };

/// Raw little-endian float32 row-major grid plus a JSON sidecar
/// {"width": int, "height": int, "nodata": real?}.
BandRaster load_raster(const std::filesystem::path& data_path,
                       const std::filesystem::path& sidecar_path);

void save_raster(const BandRaster& raster, const std::filesystem::path& data_path,
                 const std::filesystem::path& sidecar_path);

/// SAR false-color composite: R = |vh|, G = |vv|, B = |vh| / max(|vv|, 1e-6),
/// each channel clipped to its own [low, high] percentiles and mapped
/// linearly to [0, 255] with round half-up. Channels whose clipped range has
/// zero width map to 128 everywhere. Pixels that are nodata in either band
/// come out black.
RGBImage s1_composite(const BandRaster& vh, const BandRaster& vv,
                      std::pair<double, double> clip_percentiles = {2.0, 98.0});

/// True-color composite: channel = round(255 * clip(value / scale, 0, 1)),
/// with B04 -> R, B03 -> G, B02 -> B. Nodata in any band renders black.
RGBImage s2_composite(const BandRaster& b04, const BandRaster& b03, const BandRaster& b02,
                      double reflectance_scale = 10000.0);

/// Non-overlapping-by-default grid of patches fully inside the image,
/// ordered by (origin y, origin x). Trailing remainders are discarded.
std::vector<Patch> crop_grid(const RGBImage& img, const CropSpec& spec);

/// crop_grid plus box remapping: annotations are clipped to each patch,
/// renormalized to patch coordinates, kept when clipped/original area >=
/// min_box_visibility; patches with no surviving annotation are dropped.
std::vector<DetectionPatch> crop_detection_patches(const RGBImage& img,
                                                   const std::vector<Annotation>& annotations,
                                                   const CropSpec& spec);

/// Apply the listed isometries in order to pixels and boxes alike. Rotations
/// require a square patch. rot90/rot270 turn counter-clockwise/clockwise.
std::pair<RGBImage, std::vector<Annotation>> augment(const RGBImage& patch,
                                                     const std::vector<Annotation>& annotations,
                                                     const std::vector<AugmentOp>& ops);

} // namespace sardet
