#include "sardet/metrics.hpp"

#include <algorithm>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "sardet/error.hpp"

namespace sardet {

namespace {

constexpr int kMaxDetsPerImage = 100;
constexpr int kRecallGridPoints = 101;

std::vector<double> iou_thresholds() {
    std::vector<double> thrs;
    for (int i = 0; i < 10; ++i) {
        thrs.push_back(static_cast<double>(50 + 5 * i) / 100.0);
    }
    return thrs;
}

bool score_before(const Detection& a, const Detection& b) {
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.source_index < b.source_index;
}

} // namespace

std::vector<MatchedDetection> match_detections(const std::vector<Detection>& dets,
                                               const std::vector<Annotation>& gts,
                                               double iou_thr) {
    std::vector<Detection> ordered = dets;
    std::sort(ordered.begin(), ordered.end(), score_before);

    std::vector<bool> gt_taken(gts.size(), false);
    std::vector<MatchedDetection> out;
    out.reserve(ordered.size());
    for (const Detection& det : ordered) {
        double best_iou = -1.0;
        std::size_t best_gt = 0;
        bool found = false;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (gt_taken[g]) {
                continue;
            }
            const double overlap = iou(det.box, gts[g].box);
            if (overlap >= iou_thr && overlap > best_iou) {
                best_iou = overlap;
                best_gt = g;
                found = true;
            }
        }
        MatchedDetection md;
        md.detection = det;
        if (found) {
            gt_taken[best_gt] = true;
            md.gt_index = best_gt;
        }
        out.push_back(std::move(md));
    }
    return out;
}

double average_precision(const PRCurve& curve) {
    if (curve.points.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (int i = 0; i < kRecallGridPoints; ++i) {
        const double r = static_cast<double>(i) / 100.0;
        double best = 0.0;
        for (const auto& [recall, precision] : curve.points) {
            if (recall >= r && precision > best) {
                best = precision;
            }
        }
        sum += best;
    }
    return sum / static_cast<double>(kRecallGridPoints);
}

EvalReport evaluate(const DatasetGT& gt, const PredictionSet& preds) {
    // prediction image ids must be a subset of the ground-truth image ids
    std::unordered_set<std::int64_t> image_ids;
    for (const auto& img : gt.images) {
        image_ids.insert(img.id);
    }
    std::set<std::int64_t> offenders;
    for (const auto& det : preds.detections) {
        if (!image_ids.count(det.image_id)) {
            offenders.insert(det.image_id);
        }
    }
    if (!offenders.empty()) {
        std::string ids;
        for (auto id : offenders) {
            ids += (ids.empty() ? "" : ", ") + std::to_string(id);
        }
        throw ValidationError("evaluate: predictions reference unknown image ids: " + ids);
    }

    EvalReport report;
    report.n_images = gt.images.size();
    report.n_ground_truth = gt.annotations.size();
    report.n_detections = preds.detections.size();

    // top-100 by score per image (ties by source_index), then grouped by category
    std::unordered_map<std::int64_t, std::vector<Detection>> dets_by_image;
    for (const auto& det : preds.detections) {
        dets_by_image[det.image_id].push_back(det);
    }
    std::unordered_map<std::int64_t, std::unordered_map<int, std::vector<Detection>>> dets_by_image_cat;
    for (auto& [image_id, dets] : dets_by_image) {
        std::sort(dets.begin(), dets.end(), score_before);
        if (dets.size() > static_cast<std::size_t>(kMaxDetsPerImage)) {
            dets.resize(kMaxDetsPerImage);
        }
        for (const auto& det : dets) {
            dets_by_image_cat[image_id][det.category_id].push_back(det);
        }
    }

    std::unordered_map<std::int64_t, std::unordered_map<int, std::vector<Annotation>>> gts_by_image_cat;
    std::set<int> gt_categories;
    for (const auto& ann : gt.annotations) {
        gts_by_image_cat[ann.image_id][ann.category_id].push_back(ann);
        gt_categories.insert(ann.category_id);
    }

    std::set<int> warned;
    for (const auto& det : preds.detections) {
        if (!gt_categories.count(det.category_id)) {
            warned.insert(det.category_id);
        }
    }
    report.warning_categories.assign(warned.begin(), warned.end());

    if (gt_categories.empty()) {
        return report;
    }

    const std::vector<double> thrs = iou_thresholds();
    struct Accum {
        double ap_sum = 0.0;
        double ar_sum = 0.0;
        double ap_50 = 0.0;
        double ap_75 = 0.0;
    };
    std::map<int, Accum> per_cat;

    for (int category : gt_categories) {
        std::size_t n_gt = 0;
        for (const auto& ann : gt.annotations) {
            if (ann.category_id == category) {
                ++n_gt;
            }
        }
        Accum& acc = per_cat[category];
        for (std::size_t ti = 0; ti < thrs.size(); ++ti) {
            const double thr = thrs[ti];
            // per-image greedy matching, then one dataset-wide score sweep
            std::vector<std::pair<Detection, bool>> flagged; // (detection, is TP)
            std::size_t matched_gt = 0;
            for (const auto& img : gt.images) {
                const std::vector<Detection>* dets = nullptr;
                if (auto iti = dets_by_image_cat.find(img.id); iti != dets_by_image_cat.end()) {
                    if (auto itc = iti->second.find(category); itc != iti->second.end()) {
                        dets = &itc->second;
                    }
                }
                const std::vector<Annotation>* anns = nullptr;
                if (auto iti = gts_by_image_cat.find(img.id); iti != gts_by_image_cat.end()) {
                    if (auto itc = iti->second.find(category); itc != iti->second.end()) {
                        anns = &itc->second;
                    }
                }
                if (!dets) {
                    continue;
                }
                static const std::vector<Annotation> kNone;
                const auto matches = match_detections(*dets, anns ? *anns : kNone, thr);
                for (const auto& md : matches) {
                    flagged.emplace_back(md.detection, md.gt_index.has_value());
                    if (md.gt_index.has_value()) {
                        ++matched_gt;
                    }
                }
            }
            std::sort(flagged.begin(), flagged.end(),
                      [](const auto& a, const auto& b) { return score_before(a.first, b.first); });

            PRCurve curve;
            curve.iou_threshold = thr;
            std::size_t tp = 0;
            std::size_t fp = 0;
            for (const auto& [det, is_tp] : flagged) {
                if (is_tp) {
                    ++tp;
                } else {
                    ++fp;
                }
                const double precision =
                    static_cast<double>(tp) / static_cast<double>(tp + fp);
                const double recall =
                    n_gt > 0 ? static_cast<double>(tp) / static_cast<double>(n_gt) : 0.0;
                curve.points.emplace_back(recall, precision);
            }
            const double ap = average_precision(curve);
            const double recall_final =
                n_gt > 0 ? static_cast<double>(matched_gt) / static_cast<double>(n_gt) : 0.0;
            acc.ap_sum += ap;
            acc.ar_sum += recall_final;
            if (ti == 0) {
                acc.ap_50 = ap;
            }
            if (ti == 5) {
                acc.ap_75 = ap;
            }
        }
    }

    const double n_thrs = static_cast<double>(thrs.size());
    const double n_cats = static_cast<double>(per_cat.size());
    for (const auto& [category, acc] : per_cat) {
        CategoryMetrics cm;
        cm.ap_50_95 = 100.0 * acc.ap_sum / n_thrs;
        cm.ap_50 = 100.0 * acc.ap_50;
        cm.ap_75 = 100.0 * acc.ap_75;
        cm.ar_50_95 = 100.0 * acc.ar_sum / n_thrs;
        report.per_category.emplace(category, cm);
        report.ap_50_95 += cm.ap_50_95 / n_cats;
        report.ap_50 += cm.ap_50 / n_cats;
        report.ap_75 += cm.ap_75 / n_cats;
        report.ar_50_95 += cm.ar_50_95 / n_cats;
    }
    return report;
}

double objective(const EvalReport& report) {
    return report.ap_50_95 + report.ar_50_95;
}

} // namespace sardet
