#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "metrics_oracle.hpp"
#include "sardet/error.hpp"
#include "sardet/metrics.hpp"
#include "testutil.hpp"

using namespace sardet;

namespace {

Detection pred_from_ann(const Annotation& ann, double score, std::int64_t source_index) {
    Detection det;
    det.box = ann.box;
    det.score = score;
    det.category_id = ann.category_id;
    det.image_id = ann.image_id;
    det.source_index = source_index;
    return det;
}

/// GT with 2 categories plus predictions: jittered copies of some boxes and
/// pure-noise extras. Bounded at 3 images, 4 GT and 6 detections per image.
/// With disjoint_gt the ground-truth boxes sit in separate quadrants, so no
/// detection can clear IoU 0.5 against two of them at once.
std::pair<DatasetGT, PredictionSet> random_eval_instance(std::mt19937_64& rng,
                                                         bool disjoint_gt = false) {
    std::uniform_int_distribution<int> n_images_dist(1, 3);
    std::uniform_int_distribution<int> n_gt_dist(0, 4);
    std::uniform_int_distribution<int> n_det_dist(0, 6);
    std::uniform_int_distribution<int> category_dist(1, 2);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    DatasetGT gt;
    gt.categories.push_back({1, "a"});
    gt.categories.push_back({2, "b"});
    const int n_images = n_images_dist(rng);
    std::int64_t ann_id = 1;
    for (int i = 1; i <= n_images; ++i) {
        gt.images.push_back({i, 1000, 1000, "img.png"});
        const int n_gt = n_gt_dist(rng);
        for (int g = 0; g < n_gt; ++g) {
            Annotation ann;
            ann.annotation_id = ann_id++;
            ann.image_id = i;
            ann.category_id = category_dist(rng);
            if (disjoint_gt) {
                const double cx = 0.5 * (g % 2);
                const double cy = 0.5 * (g / 2);
                const double x1 = cx + 0.05 + 0.1 * unit(rng);
                const double y1 = cy + 0.05 + 0.1 * unit(rng);
                ann.box = BBox(x1, y1, x1 + 0.1 + 0.15 * unit(rng),
                               y1 + 0.1 + 0.15 * unit(rng));
            } else {
                ann.box = testutil::random_box(rng, 0.05);
            }
            gt.annotations.push_back(ann);
        }
    }

    PredictionSet preds;
    preds.model_label = "random";
    std::int64_t source = 0;
    for (int i = 1; i <= n_images; ++i) {
        const int n_det = n_det_dist(rng);
        std::vector<const Annotation*> anns;
        for (const auto& ann : gt.annotations) {
            if (ann.image_id == i) {
                anns.push_back(&ann);
            }
        }
        for (int d = 0; d < n_det; ++d) {
            Detection det;
            det.image_id = i;
            det.score = unit(rng);
            det.source_index = source++;
            if (!anns.empty() && unit(rng) < 0.6) {
                const Annotation& ann = *anns[static_cast<std::size_t>(
                    std::uniform_int_distribution<int>(0, static_cast<int>(anns.size()) - 1)(rng))];
                const double jitter = 0.03;
                det.box = BBox(ann.box.x1 + (unit(rng) - 0.5) * jitter,
                               ann.box.y1 + (unit(rng) - 0.5) * jitter,
                               ann.box.x2 + (unit(rng) - 0.5) * jitter,
                               ann.box.y2 + (unit(rng) - 0.5) * jitter);
                det.category_id = unit(rng) < 0.85 ? ann.category_id : category_dist(rng);
            } else {
                det.box = testutil::random_box(rng);
                det.category_id = category_dist(rng);
            }
            preds.detections.push_back(det);
        }
    }
    return {std::move(gt), std::move(preds)};
}

} // namespace

TEST_CASE("match_detections identity overlap") {
    Annotation gt;
    gt.box = BBox(0.2, 0.2, 0.6, 0.6);
    Detection det = pred_from_ann(gt, 0.9, 0);
    const auto matches = match_detections({det}, {gt}, 0.5);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].gt_index == 0);
}

TEST_CASE("match_detections one-to-one constraint") {
    Annotation gt;
    gt.box = BBox(0.2, 0.2, 0.6, 0.6);
    Detection first = pred_from_ann(gt, 0.9, 0);
    Detection second = pred_from_ann(gt, 0.7, 1);
    const auto matches = match_detections({second, first}, {gt}, 0.5);
    REQUIRE(matches.size() == 2);
    CHECK(matches[0].detection.score == 0.9);
    CHECK(matches[0].gt_index == 0);
    CHECK_FALSE(matches[1].gt_index.has_value());
}

TEST_CASE("match_detections below threshold stays unmatched") {
    Annotation gt;
    gt.box = BBox(0.0, 0.0, 0.5, 1.0); // iou 0.4 against a shifted box
    Detection det;
    det.box = BBox(0.1, 0.0, 0.6, 1.0);
    det.score = 0.9;
    CHECK(iou(det.box, gt.box) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    const auto matches = match_detections({det}, {gt}, 0.7);
    REQUIRE(matches.size() == 1);
    CHECK_FALSE(matches[0].gt_index.has_value());
}

TEST_CASE("average_precision on a perfect single point") {
    PRCurve curve;
    curve.points = {{1.0, 1.0}};
    CHECK(average_precision(curve) == doctest::Approx(1.0));
}

TEST_CASE("average_precision of an empty curve is 0") {
    CHECK(average_precision(PRCurve{}) == 0.0);
}

TEST_CASE("evaluate perfect predictions") {
    std::mt19937_64 rng(21);
    const DatasetGT gt = testutil::make_gt({2, 3, 1}, rng);
    PredictionSet preds;
    std::int64_t source = 0;
    for (const auto& ann : gt.annotations) {
        preds.detections.push_back(pred_from_ann(ann, 1.0, source++));
    }
    const EvalReport report = evaluate(gt, preds);
    CHECK(report.ap_50_95 == doctest::Approx(100.0));
    CHECK(report.ap_50 == doctest::Approx(100.0));
    CHECK(report.ap_75 == doctest::Approx(100.0));
    CHECK(report.ar_50_95 == doctest::Approx(100.0));
    CHECK(objective(report) == doctest::Approx(200.0));
}

TEST_CASE("evaluate empty predictions") {
    std::mt19937_64 rng(22);
    const DatasetGT gt = testutil::make_gt({2, 2}, rng);
    const EvalReport report = evaluate(gt, PredictionSet{});
    CHECK(report.ap_50_95 == 0.0);
    CHECK(report.ap_50 == 0.0);
    CHECK(report.ap_75 == 0.0);
    CHECK(report.ar_50_95 == 0.0);
    CHECK(objective(report) == 0.0);
}

TEST_CASE("FP before TP on a single ground truth gives AP 0.5") {
    DatasetGT gt;
    gt.categories.push_back({1, "ports"});
    gt.images.push_back({1, 870, 870, "img.png"});
    Annotation ann;
    ann.annotation_id = 1;
    ann.image_id = 1;
    ann.category_id = 1;
    ann.box = BBox(0.2, 0.2, 0.5, 0.5);
    gt.annotations.push_back(ann);

    PredictionSet preds;
    Detection fp;
    fp.box = BBox(0.7, 0.7, 0.9, 0.9); // zero overlap with the GT
    fp.score = 0.9;
    fp.category_id = 1;
    fp.image_id = 1;
    fp.source_index = 0;
    preds.detections.push_back(fp);
    preds.detections.push_back(pred_from_ann(ann, 0.8, 1));

    const EvalReport report = evaluate(gt, preds);
    CHECK(report.ap_50 == doctest::Approx(50.0).epsilon(1e-4));
    CHECK(report.ar_50_95 == doctest::Approx(100.0));
}

TEST_CASE("objective is the plain sum of AP and AR") {
    EvalReport report;
    report.ap_50_95 = 27.4;
    report.ar_50_95 = 40.5;
    CHECK(objective(report) == doctest::Approx(67.9));
}

TEST_CASE("report schema carries the four headline metrics per category") {
    std::mt19937_64 rng(23);
    const DatasetGT gt = testutil::make_gt({1, 1}, rng);
    PredictionSet preds;
    std::int64_t source = 0;
    for (const auto& ann : gt.annotations) {
        preds.detections.push_back(pred_from_ann(ann, 0.9, source++));
    }
    const EvalReport report = evaluate(gt, preds);
    REQUIRE(report.per_category.count(1) == 1);
    const CategoryMetrics& cm = report.per_category.at(1);
    CHECK(cm.ap_50_95 == doctest::Approx(report.ap_50_95));
    CHECK(cm.ar_50_95 == doctest::Approx(report.ar_50_95));
    CHECK(report.n_images == 2);
    CHECK(report.n_ground_truth == 2);
    CHECK(report.n_detections == 2);
}

TEST_CASE("unknown prediction image ids are rejected with the ids listed") {
    std::mt19937_64 rng(24);
    const DatasetGT gt = testutil::make_gt({1}, rng);
    PredictionSet preds;
    Detection det;
    det.box = BBox(0.1, 0.1, 0.2, 0.2);
    det.score = 0.5;
    det.category_id = 1;
    det.image_id = 99;
    preds.detections.push_back(det);
    CHECK_THROWS_WITH_AS(evaluate(gt, preds), doctest::Contains("99"), ValidationError);
}

TEST_CASE("categories absent from GT are warnings, not errors") {
    std::mt19937_64 rng(25);
    DatasetGT gt = testutil::make_gt({1}, rng);
    gt.categories.push_back({7, "phantom"});
    PredictionSet preds;
    Detection det;
    det.box = BBox(0.1, 0.1, 0.2, 0.2);
    det.score = 0.5;
    det.category_id = 7;
    det.image_id = 1;
    preds.detections.push_back(det);
    const EvalReport report = evaluate(gt, preds);
    REQUIRE(report.warning_categories.size() == 1);
    CHECK(report.warning_categories[0] == 7);
    CHECK(report.per_category.count(7) == 0);
}

TEST_CASE("only the top 100 detections per image count") {
    DatasetGT gt;
    gt.categories.push_back({1, "ports"});
    gt.images.push_back({1, 1000, 1000, "img.png"});
    Annotation ann;
    ann.annotation_id = 1;
    ann.image_id = 1;
    ann.category_id = 1;
    ann.box = BBox(0.4, 0.4, 0.6, 0.6);
    gt.annotations.push_back(ann);

    PredictionSet preds;
    // 100 high-score false positives crowd out the single true positive
    for (int i = 0; i < 100; ++i) {
        Detection det;
        const double x = 0.009 * i;
        det.box = BBox(x, 0.8, x + 0.008, 0.81);
        det.score = 0.9;
        det.category_id = 1;
        det.image_id = 1;
        det.source_index = i;
        preds.detections.push_back(det);
    }
    preds.detections.push_back(pred_from_ann(ann, 0.5, 100));

    const EvalReport report = evaluate(gt, preds);
    CHECK(report.ap_50_95 == 0.0);
    CHECK(report.ar_50_95 == 0.0);
}

TEST_CASE("duplicating all detections never increases AP") {
    // holds when GT boxes are disjoint: a duplicate can never claim a second
    // ground truth, so it can only add a false positive
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        auto [gt, preds] = random_eval_instance(rng, /*disjoint_gt=*/true);
        const EvalReport base = evaluate(gt, preds);

        PredictionSet doubled = preds;
        std::int64_t source = static_cast<std::int64_t>(preds.detections.size());
        for (const auto& det : preds.detections) {
            Detection copy = det;
            copy.source_index = source++;
            doubled.detections.push_back(copy);
        }
        const EvalReport after = evaluate(gt, doubled);
        INFO("seed ", seed);
        CHECK(after.ap_50_95 <= base.ap_50_95 + 1e-9);
        CHECK(after.ap_50 <= base.ap_50 + 1e-9);
        CHECK(after.ap_75 <= base.ap_75 + 1e-9);
    }
}

TEST_CASE("AP is non-increasing in the IoU threshold") {
    for (std::uint64_t seed = 40; seed < 55; ++seed) {
        std::mt19937_64 rng(seed);
        auto [gt, preds] = random_eval_instance(rng);
        const EvalReport report = evaluate(gt, preds);
        CHECK(report.ap_50 >= report.ap_75 - 1e-12);
        CHECK(report.ap_50 >= report.ap_50_95 - 1e-12);
    }
}

TEST_CASE("file order permutation with distinct scores does not change metrics") {
    for (std::uint64_t seed = 60; seed < 70; ++seed) {
        std::mt19937_64 rng(seed);
        auto [gt, preds] = random_eval_instance(rng);
        // force distinct scores, keep ordering semantics score-driven
        for (std::size_t i = 0; i < preds.detections.size(); ++i) {
            preds.detections[i].score =
                0.99 - 0.9 * static_cast<double>(i) / (preds.detections.size() + 1.0);
        }
        const EvalReport base = evaluate(gt, preds);

        PredictionSet shuffled = preds;
        std::shuffle(shuffled.detections.begin(), shuffled.detections.end(), rng);
        for (std::size_t i = 0; i < shuffled.detections.size(); ++i) {
            shuffled.detections[i].source_index = static_cast<std::int64_t>(i);
        }
        const EvalReport after = evaluate(gt, shuffled);
        INFO("seed ", seed);
        CHECK(after.ap_50_95 == doctest::Approx(base.ap_50_95).epsilon(1e-12));
        CHECK(after.ap_50 == doctest::Approx(base.ap_50).epsilon(1e-12));
        CHECK(after.ap_75 == doctest::Approx(base.ap_75).epsilon(1e-12));
        CHECK(after.ar_50_95 == doctest::Approx(base.ar_50_95).epsilon(1e-12));
    }
}

TEST_CASE("evaluate matches the brute-force oracle on random instances") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        std::mt19937_64 rng(seed + 1000);
        auto [gt, preds] = random_eval_instance(rng);
        const EvalReport fast = evaluate(gt, preds);
        const testutil::NaiveReport naive = testutil::naive_evaluate(gt, preds);
        INFO("seed ", seed);
        CHECK(std::abs(fast.ap_50_95 - naive.ap_50_95) <= 1e-9);
        CHECK(std::abs(fast.ap_50 - naive.ap_50) <= 1e-9);
        CHECK(std::abs(fast.ap_75 - naive.ap_75) <= 1e-9);
        CHECK(std::abs(fast.ar_50_95 - naive.ar_50_95) <= 1e-9);
    }
}
