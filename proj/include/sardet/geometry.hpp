#pragma once

#include <cstdint>
#include <vector>

namespace sardet {

/// Axis-aligned box in normalized corner form. Coordinates are clipped to
/// [0, 1] and corners ordered (x1 <= x2, y1 <= y2) on construction.
/// Zero-area boxes are representable; they score iou = 0 against everything.
struct BBox {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;

    BBox() = default;
    BBox(double ax1, double ay1, double ax2, double ay2);

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return width() * height(); }
};

struct Detection {
    BBox box;
    double score = 0.0;       // in [0, 1]
    int category_id = 1;
    std::int64_t image_id = 0;
    int model_id = 0;         // index of the source detector
    std::int64_t source_index = 0; // position in the source file, tie-breaker
};

struct Annotation {
    BBox box;
    int category_id = 1;
    std::int64_t image_id = 0;
    std::int64_t annotation_id = 0;
};

/// Intersection area over union area; 0 when the union area is 0.
double iou(const BBox& a, const BBox& b);

/// Absolute COCO [x, y, w, h] in pixels -> normalized corner box.
/// Throws ValidationError on non-positive image dimensions.
BBox from_abs_xywh(double x, double y, double w, double h, double img_w, double img_h);

struct AbsXywh {
    double x;
    double y;
    double w;
    double h;
};

/// Normalized corner box -> absolute COCO [x, y, w, h] in pixels.
AbsXywh to_abs_xywh(const BBox& box, double img_w, double img_h);

} // namespace sardet
