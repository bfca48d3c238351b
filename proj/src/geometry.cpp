#include "sardet/geometry.hpp"

#include <algorithm>
#include <string>

#include "sardet/error.hpp"

namespace sardet {

namespace {

double clip01(double v) { return std::min(1.0, std::max(0.0, v)); }

} // namespace

BBox::BBox(double ax1, double ay1, double ax2, double ay2) {
    x1 = clip01(std::min(ax1, ax2));
    x2 = clip01(std::max(ax1, ax2));
    y1 = clip01(std::min(ay1, ay2));
    y2 = clip01(std::max(ay1, ay2));
}

double iou(const BBox& a, const BBox& b) {
    const double ix = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double iy = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    const double inter = (ix > 0.0 && iy > 0.0) ? ix * iy : 0.0;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) {
        return 0.0;
    }
    return inter / uni;
}

BBox from_abs_xywh(double x, double y, double w, double h, double img_w, double img_h) {
    if (img_w <= 0.0 || img_h <= 0.0) {
        throw ValidationError("from_abs_xywh: image dimensions must be positive, got " +
                              std::to_string(img_w) + "x" + std::to_string(img_h));
    }
    if (w < 0.0 || h < 0.0) {
        throw ValidationError("from_abs_xywh: box extent must be non-negative, got w=" +
                              std::to_string(w) + " h=" + std::to_string(h));
    }
    return BBox(x / img_w, y / img_h, (x + w) / img_w, (y + h) / img_h);
}

AbsXywh to_abs_xywh(const BBox& box, double img_w, double img_h) {
    if (img_w <= 0.0 || img_h <= 0.0) {
        throw ValidationError("to_abs_xywh: image dimensions must be positive, got " +
                              std::to_string(img_w) + "x" + std::to_string(img_h));
    }
    return AbsXywh{box.x1 * img_w, box.y1 * img_h, box.width() * img_w, box.height() * img_h};
}

} // namespace sardet
