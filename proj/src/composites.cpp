#include "sardet/composites.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "sardet/error.hpp"

namespace sardet {

using nlohmann::json;

namespace {

constexpr double kRatioEpsilon = 1e-6;

std::uint8_t round_half_up_byte(double v) {
    const double r = std::floor(v + 0.5);
    return static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, r)));
}

/// Percentile with linear interpolation between order statistics
/// (rank = p/100 * (n-1)), over the given values.
double percentile(std::vector<double>& values, double p) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n == 1) {
        return values[0];
    }
    const double rank = p / 100.0 * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = rank - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

/// Clip to [lo, hi] then map linearly onto [0, 255]; zero-width range -> 128.
std::uint8_t stretch_byte(double v, double lo, double hi) {
    if (hi <= lo) {
        return 128;
    }
    const double clipped = std::min(hi, std::max(lo, v));
    return round_half_up_byte((clipped - lo) / (hi - lo) * 255.0);
}

void require_same_dims(const BandRaster& a, const BandRaster& b, const char* what) {
    if (a.width != b.width || a.height != b.height) {
        throw ValidationError(std::string(what) + ": band dimensions differ (" +
                              std::to_string(a.width) + "x" + std::to_string(a.height) +
                              " vs " + std::to_string(b.width) + "x" +
                              std::to_string(b.height) + ")");
    }
}

} // namespace

BandRaster load_raster(const std::filesystem::path& data_path,
                       const std::filesystem::path& sidecar_path) {
    std::ifstream side(sidecar_path, std::ios::binary);
    if (!side) {
        throw IoError("cannot open raster sidecar " + sidecar_path.string());
    }
    json doc;
    try {
        side >> doc;
    } catch (const json::parse_error& e) {
        throw ValidationError(sidecar_path.string() + ": JSON parse failure: " + e.what());
    }
    if (!doc.is_object() || !doc.contains("width") || !doc.contains("height") ||
        !doc["width"].is_number_integer() || !doc["height"].is_number_integer()) {
        throw ValidationError(sidecar_path.string() +
                              ": sidecar must carry integer \"width\" and \"height\"");
    }

    BandRaster raster;
    raster.width = doc["width"].get<int>();
    raster.height = doc["height"].get<int>();
    if (raster.width <= 0 || raster.height <= 0) {
        throw ValidationError(sidecar_path.string() + ": dimensions must be positive");
    }
    if (doc.contains("nodata")) {
        if (!doc["nodata"].is_number()) {
            throw ValidationError(sidecar_path.string() + ": \"nodata\" must be a number");
        }
        raster.nodata = doc["nodata"].get<float>();
    }

    std::ifstream data(data_path, std::ios::binary | std::ios::ate);
    if (!data) {
        throw IoError("cannot open raster data " + data_path.string());
    }
    const std::streamoff size = data.tellg();
    const std::size_t expected =
        static_cast<std::size_t>(raster.width) * static_cast<std::size_t>(raster.height);
    if (static_cast<std::size_t>(size) != expected * sizeof(float)) {
        throw ValidationError(data_path.string() + ": " + std::to_string(size) +
                              " bytes but sidecar declares " + std::to_string(raster.width) +
                              "x" + std::to_string(raster.height) + " (" +
                              std::to_string(expected * sizeof(float)) + " bytes)");
    }
    data.seekg(0);
    raster.values.resize(expected);
    data.read(reinterpret_cast<char*>(raster.values.data()),
              static_cast<std::streamsize>(expected * sizeof(float)));
    if (!data) {
        throw IoError("read failure on " + data_path.string());
    }
    return raster;
}

void save_raster(const BandRaster& raster, const std::filesystem::path& data_path,
                 const std::filesystem::path& sidecar_path) {
    if (raster.values.size() !=
        static_cast<std::size_t>(raster.width) * static_cast<std::size_t>(raster.height)) {
        throw ValidationError("save_raster: value count does not match dimensions");
    }
    std::ofstream data(data_path, std::ios::binary);
    if (!data) {
        throw IoError("cannot open " + data_path.string() + " for writing");
    }
    data.write(reinterpret_cast<const char*>(raster.values.data()),
               static_cast<std::streamsize>(raster.values.size() * sizeof(float)));
    if (!data) {
        throw IoError("write failure on " + data_path.string());
    }
    json doc{{"width", raster.width}, {"height", raster.height}};
    if (raster.nodata) {
        doc["nodata"] = *raster.nodata;
    }
    std::ofstream side(sidecar_path, std::ios::binary);
    if (!side) {
        throw IoError("cannot open " + sidecar_path.string() + " for writing");
    }
    side << doc.dump(2) << "\n";
}

RGBImage s1_composite(const BandRaster& vh, const BandRaster& vv,
                      std::pair<double, double> clip_percentiles) {
    require_same_dims(vh, vv, "s1_composite");
    const auto [p_lo, p_hi] = clip_percentiles;
    if (!(p_lo >= 0.0 && p_hi <= 100.0 && p_lo <= p_hi)) {
        throw ValidationError("s1_composite: percentiles must satisfy 0 <= low <= high <= 100");
    }

    const std::size_t n = vh.values.size();
    std::vector<bool> valid(n);
    std::vector<double> red(n), green(n), blue(n);
    std::vector<double> red_valid, green_valid, blue_valid;
    for (int y = 0; y < vh.height; ++y) {
        for (int x = 0; x < vh.width; ++x) {
            const std::size_t i =
                static_cast<std::size_t>(y) * static_cast<std::size_t>(vh.width) + x;
            if (vh.is_nodata(x, y) || vv.is_nodata(x, y)) {
                valid[i] = false;
                continue;
            }
            valid[i] = true;
            const double avh = std::abs(static_cast<double>(vh.at(x, y)));
            const double avv = std::abs(static_cast<double>(vv.at(x, y)));
            red[i] = avh;
            green[i] = avv;
            blue[i] = avh / std::max(avv, kRatioEpsilon);
            red_valid.push_back(red[i]);
            green_valid.push_back(green[i]);
            blue_valid.push_back(blue[i]);
        }
    }

    RGBImage out;
    out.width = vh.width;
    out.height = vh.height;
    out.samples.assign(n * 3, 0);
    if (red_valid.empty()) {
        return out; // fully nodata -> all black
    }

    const double r_lo = percentile(red_valid, p_lo);
    const double r_hi = percentile(red_valid, p_hi);
    const double g_lo = percentile(green_valid, p_lo);
    const double g_hi = percentile(green_valid, p_hi);
    const double b_lo = percentile(blue_valid, p_lo);
    const double b_hi = percentile(blue_valid, p_hi);

    for (std::size_t i = 0; i < n; ++i) {
        if (!valid[i]) {
            continue;
        }
        out.samples[i * 3 + 0] = stretch_byte(red[i], r_lo, r_hi);
        out.samples[i * 3 + 1] = stretch_byte(green[i], g_lo, g_hi);
        out.samples[i * 3 + 2] = stretch_byte(blue[i], b_lo, b_hi);
    }
    return out;
}

RGBImage s2_composite(const BandRaster& b04, const BandRaster& b03, const BandRaster& b02,
                      double reflectance_scale) {
    require_same_dims(b04, b03, "s2_composite");
    require_same_dims(b04, b02, "s2_composite");
    if (!(reflectance_scale > 0.0)) {
        throw ValidationError("s2_composite: reflectance scale must be positive");
    }

    RGBImage out;
    out.width = b04.width;
    out.height = b04.height;
    out.samples.assign(static_cast<std::size_t>(out.width) * out.height * 3, 0);
    const BandRaster* bands[3] = {&b04, &b03, &b02};
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            if (b04.is_nodata(x, y) || b03.is_nodata(x, y) || b02.is_nodata(x, y)) {
                continue;
            }
            const std::size_t base = out.offset(x, y);
            for (int c = 0; c < 3; ++c) {
                const double reflectance =
                    static_cast<double>(bands[c]->at(x, y)) / reflectance_scale;
                const double clipped = std::min(1.0, std::max(0.0, reflectance));
                out.samples[base + c] = round_half_up_byte(clipped * 255.0);
            }
        }
    }
    return out;
}

std::vector<Patch> crop_grid(const RGBImage& img, const CropSpec& spec) {
    if (spec.patch_size <= 0) {
        throw ValidationError("crop_grid: patch size must be positive");
    }
    const int stride = spec.effective_stride();
    if (stride <= 0 || stride > spec.patch_size) {
        throw ValidationError("crop_grid: stride must be in (0, patch_size]");
    }
    if (img.width < spec.patch_size || img.height < spec.patch_size) {
        throw ValidationError("crop_grid: image " + std::to_string(img.width) + "x" +
                              std::to_string(img.height) + " smaller than patch size " +
                              std::to_string(spec.patch_size));
    }

    std::vector<Patch> patches;
    for (int oy = 0; oy + spec.patch_size <= img.height; oy += stride) {
        for (int ox = 0; ox + spec.patch_size <= img.width; ox += stride) {
            Patch patch;
            patch.origin_x = ox;
            patch.origin_y = oy;
            patch.image.width = spec.patch_size;
            patch.image.height = spec.patch_size;
            patch.image.samples.resize(static_cast<std::size_t>(spec.patch_size) *
                                       spec.patch_size * 3);
            for (int y = 0; y < spec.patch_size; ++y) {
                const std::size_t src = img.offset(ox, oy + y);
                const std::size_t dst = patch.image.offset(0, y);
                std::memcpy(patch.image.samples.data() + dst, img.samples.data() + src,
                            static_cast<std::size_t>(spec.patch_size) * 3);
            }
            patches.push_back(std::move(patch));
        }
    }
    return patches;
}

std::vector<DetectionPatch> crop_detection_patches(const RGBImage& img,
                                                   const std::vector<Annotation>& annotations,
                                                   const CropSpec& spec) {
    if (!(spec.min_box_visibility > 0.0 && spec.min_box_visibility <= 1.0)) {
        throw ValidationError("crop_detection_patches: min_box_visibility must be in (0, 1]");
    }
    std::vector<Patch> grid = crop_grid(img, spec);
    const double img_w = static_cast<double>(img.width);
    const double img_h = static_cast<double>(img.height);
    const double patch_px = static_cast<double>(spec.patch_size);

    std::vector<DetectionPatch> out;
    for (Patch& patch : grid) {
        const double px1 = static_cast<double>(patch.origin_x);
        const double py1 = static_cast<double>(patch.origin_y);
        const double px2 = px1 + patch_px;
        const double py2 = py1 + patch_px;

        std::vector<Annotation> kept;
        for (const Annotation& ann : annotations) {
            // annotation corners in source pixels
            const double ax1 = ann.box.x1 * img_w;
            const double ay1 = ann.box.y1 * img_h;
            const double ax2 = ann.box.x2 * img_w;
            const double ay2 = ann.box.y2 * img_h;
            const double cx1 = std::max(ax1, px1);
            const double cy1 = std::max(ay1, py1);
            const double cx2 = std::min(ax2, px2);
            const double cy2 = std::min(ay2, py2);
            if (cx2 <= cx1 || cy2 <= cy1) {
                continue;
            }
            const double original_area = (ax2 - ax1) * (ay2 - ay1);
            const double clipped_area = (cx2 - cx1) * (cy2 - cy1);
            if (original_area <= 0.0 || clipped_area / original_area < spec.min_box_visibility) {
                continue;
            }
            Annotation remapped = ann;
            remapped.box = BBox((cx1 - px1) / patch_px, (cy1 - py1) / patch_px,
                                (cx2 - px1) / patch_px, (cy2 - py1) / patch_px);
            kept.push_back(remapped);
        }
        if (kept.empty()) {
            continue; // class-presence filter
        }
        DetectionPatch dp;
        dp.image = std::move(patch.image);
        dp.origin_x = patch.origin_x;
        dp.origin_y = patch.origin_y;
        dp.annotations = std::move(kept);
        out.push_back(std::move(dp));
    }
    return out;
}

namespace {

RGBImage transform_pixels(const RGBImage& src, AugmentOp op) {
    RGBImage dst;
    dst.width = src.width;
    dst.height = src.height;
    dst.samples.resize(src.samples.size());
    const int w = src.width;
    const int h = src.height;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int nx = x;
            int ny = y;
            switch (op) {
            case AugmentOp::FlipH: nx = w - 1 - x; ny = y; break;
            case AugmentOp::FlipV: nx = x; ny = h - 1 - y; break;
            case AugmentOp::Rot90: nx = y; ny = w - 1 - x; break;   // counter-clockwise
            case AugmentOp::Rot180: nx = w - 1 - x; ny = h - 1 - y; break;
            case AugmentOp::Rot270: nx = h - 1 - y; ny = x; break;  // clockwise
            }
            const std::size_t s = src.offset(x, y);
            const std::size_t d = dst.offset(nx, ny);
            dst.samples[d] = src.samples[s];
            dst.samples[d + 1] = src.samples[s + 1];
            dst.samples[d + 2] = src.samples[s + 2];
        }
    }
    return dst;
}

BBox transform_box(const BBox& b, AugmentOp op) {
    switch (op) {
    case AugmentOp::FlipH: return BBox(1.0 - b.x2, b.y1, 1.0 - b.x1, b.y2);
    case AugmentOp::FlipV: return BBox(b.x1, 1.0 - b.y2, b.x2, 1.0 - b.y1);
    case AugmentOp::Rot90: return BBox(b.y1, 1.0 - b.x2, b.y2, 1.0 - b.x1);
    case AugmentOp::Rot180: return BBox(1.0 - b.x2, 1.0 - b.y2, 1.0 - b.x1, 1.0 - b.y1);
    case AugmentOp::Rot270: return BBox(1.0 - b.y2, b.x1, 1.0 - b.y1, b.x2);
    }
    return b;
}

} // namespace

std::pair<RGBImage, std::vector<Annotation>> augment(const RGBImage& patch,
                                                     const std::vector<Annotation>& annotations,
                                                     const std::vector<AugmentOp>& ops) {
    RGBImage img = patch;
    std::vector<Annotation> anns = annotations;
    for (AugmentOp op : ops) {
        const bool rotation =
            op == AugmentOp::Rot90 || op == AugmentOp::Rot180 || op == AugmentOp::Rot270;
        if (rotation && img.width != img.height) {
            throw ValidationError("augment: rotations require a square patch, got " +
                                  std::to_string(img.width) + "x" + std::to_string(img.height));
        }
        img = transform_pixels(img, op);
        for (Annotation& ann : anns) {
            ann.box = transform_box(ann.box, op);
        }
    }
    return {std::move(img), std::move(anns)};
}

} // namespace sardet
