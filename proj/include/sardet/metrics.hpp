#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "sardet/datasets.hpp"
#include "sardet/geometry.hpp"

namespace sardet {

/// Precision/recall points from a score-descending sweep at one IoU threshold.
/// Recall is non-decreasing along the list.
struct PRCurve {
    std::vector<std::pair<double, double>> points; // (recall, precision)
    double iou_threshold = 0.5;
};

struct CategoryMetrics {
    double ap_50_95 = 0.0;
    double ap_50 = 0.0;
    double ap_75 = 0.0;
    double ar_50_95 = 0.0;
};

/// Headline metrics on the [0, 100] scale plus per-category breakdown.
struct EvalReport {
    double ap_50_95 = 0.0;
    double ap_50 = 0.0;
    double ap_75 = 0.0;
    double ar_50_95 = 0.0;
    std::map<int, CategoryMetrics> per_category;
    std::size_t n_images = 0;
    std::size_t n_ground_truth = 0;
    std::size_t n_detections = 0;
    std::vector<int> warning_categories; // predicted but absent from ground truth
};

struct MatchedDetection {
    Detection detection;
    std::optional<std::size_t> gt_index; // into the gts argument
};

/// Greedy matching for one image+category: detections in score-descending
/// order (ties by source_index) each claim the highest-IoU still-unmatched
/// ground truth with IoU >= iou_thr (ties to the lowest gt index).
std::vector<MatchedDetection> match_detections(const std::vector<Detection>& dets,
                                               const std::vector<Annotation>& gts,
                                               double iou_thr);

/// 101-point interpolated AP: mean over the recall grid {0.00, 0.01, ..., 1.00}
/// of the maximum precision at recall >= r (0 where no point reaches r).
double average_precision(const PRCurve& curve);

/// Full evaluation per the COCO convention: IoU thresholds 0.50:0.05:0.95,
/// 101-point interpolation, at most 100 top-score detections per image, no
/// area ranges. Categories are evaluated when they carry at least one ground
/// truth box; means run over thresholds and categories. Values are x100.
EvalReport evaluate(const DatasetGT& gt, const PredictionSet& preds);

/// Tuning objective: ap_50_95 + ar_50_95 on the x100 scale, range [0, 200].
double objective(const EvalReport& report);

} // namespace sardet
