#include <doctest.h>

#include <cmath>
#include <random>

#include "sardet/error.hpp"
#include "sardet/geometry.hpp"
#include "testutil.hpp"

using namespace sardet;

TEST_CASE("iou of a box with itself is 1") {
    const BBox b(0.1, 0.2, 0.6, 0.8);
    CHECK(iou(b, b) == doctest::Approx(1.0));
}

TEST_CASE("iou of point-touching boxes is 0") {
    CHECK(iou(BBox(0, 0, 0.5, 0.5), BBox(0.5, 0.5, 1, 1)) == 0.0);
}

TEST_CASE("iou half overlap") {
    // intersection 0.5, union 1.0
    CHECK(iou(BBox(0, 0, 1, 1), BBox(0, 0, 0.5, 1)) == doctest::Approx(0.5));
}

TEST_CASE("degenerate boxes score 0 against everything, even themselves") {
    const BBox point(0.5, 0.5, 0.5, 0.5);
    CHECK(iou(point, point) == 0.0);
    CHECK(iou(point, BBox(0, 0, 1, 1)) == 0.0);
}

TEST_CASE("iou symmetry and range on random boxes") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 500; ++i) {
        const BBox a = testutil::random_box(rng);
        const BBox b = testutil::random_box(rng);
        const double ab = iou(a, b);
        CHECK(ab == iou(b, a));
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
    }
}

TEST_CASE("iou is 1 only for identical non-degenerate boxes") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 200; ++i) {
        const BBox a = testutil::random_box(rng);
        const BBox b = testutil::random_box(rng);
        if (iou(a, b) == 1.0) {
            CHECK(a.x1 == b.x1);
            CHECK(a.y1 == b.y1);
            CHECK(a.x2 == b.x2);
            CHECK(a.y2 == b.y2);
            CHECK(a.area() > 0.0);
        }
    }
}

TEST_CASE("from_abs_xywh full image box") {
    const BBox b = from_abs_xywh(0, 0, 870, 870, 870, 870);
    CHECK(b.x1 == 0.0);
    CHECK(b.y1 == 0.0);
    CHECK(b.x2 == 1.0);
    CHECK(b.y2 == 1.0);
}

TEST_CASE("from_abs_xywh plain division") {
    const BBox b = from_abs_xywh(100, 200, 50, 50, 1000, 1000);
    CHECK(b.x1 == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(b.y1 == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(b.x2 == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(b.y2 == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("from_abs_xywh clips boxes hanging over the edge") {
    const BBox b = from_abs_xywh(900, 900, 200, 200, 1000, 1000);
    CHECK(b.x1 == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(b.y1 == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(b.x2 == 1.0);
    CHECK(b.y2 == 1.0);
}

TEST_CASE("from_abs_xywh rejects bad dimensions") {
    CHECK_THROWS_AS(from_abs_xywh(0, 0, 10, 10, 0, 100), ValidationError);
    CHECK_THROWS_AS(from_abs_xywh(0, 0, 10, 10, 100, -1), ValidationError);
}

TEST_CASE("to_abs_xywh full image and degenerate boxes") {
    const AbsXywh full = to_abs_xywh(BBox(0, 0, 1, 1), 600, 600);
    CHECK(full.x == 0.0);
    CHECK(full.y == 0.0);
    CHECK(full.w == 600.0);
    CHECK(full.h == 600.0);

    const AbsXywh degenerate = to_abs_xywh(BBox(0.5, 0.5, 0.5, 0.5), 123, 456);
    CHECK(degenerate.x == doctest::Approx(61.5));
    CHECK(degenerate.y == doctest::Approx(228.0));
    CHECK(degenerate.w == 0.0);
    CHECK(degenerate.h == 0.0);
}

TEST_CASE("to_abs_xywh inverts from_abs_xywh") {
    const AbsXywh r = to_abs_xywh(BBox(0.1, 0.2, 0.15, 0.25), 1000, 1000);
    CHECK(r.x == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(r.y == doctest::Approx(200.0).epsilon(1e-12));
    CHECK(r.w == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(r.h == doctest::Approx(50.0).epsilon(1e-12));
}

TEST_CASE("round trip through pixel coordinates for in-bounds boxes") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> dim(10.0, 4000.0);
    for (int i = 0; i < 300; ++i) {
        const double img_w = std::floor(dim(rng));
        const double img_h = std::floor(dim(rng));
        const BBox b = testutil::random_box(rng);
        const AbsXywh abs = to_abs_xywh(b, img_w, img_h);
        const BBox back = from_abs_xywh(abs.x, abs.y, abs.w, abs.h, img_w, img_h);
        CHECK(back.x1 == doctest::Approx(b.x1).epsilon(1e-9));
        CHECK(back.y1 == doctest::Approx(b.y1).epsilon(1e-9));
        CHECK(back.x2 == doctest::Approx(b.x2).epsilon(1e-9));
        CHECK(back.y2 == doctest::Approx(b.y2).epsilon(1e-9));
    }
}

TEST_CASE("constructor reorders swapped corners") {
    const BBox b(0.8, 0.9, 0.2, 0.3);
    CHECK(b.x1 == doctest::Approx(0.2));
    CHECK(b.y1 == doctest::Approx(0.3));
    CHECK(b.x2 == doctest::Approx(0.8));
    CHECK(b.y2 == doctest::Approx(0.9));
    CHECK(b.width() >= 0.0);
    CHECK(b.height() >= 0.0);
}
