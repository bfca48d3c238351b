#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sardet/datasets.hpp"
#include "sardet/geometry.hpp"

namespace sardet {

/// Fusion parameters: one positive weight per model, the IoU threshold a box
/// must exceed to join a cluster, and the minimum raw confidence below which
/// detections are skipped before weighting.
struct EnsembleConfig {
    std::vector<double> weights;
    double iou_threshold = 0.55;
    double skip_threshold = 0.0;

    /// Throws ValidationError when any invariant is violated.
    void validate() const;
};

struct FusedDetection {
    BBox box;
    double score = 0.0;
    int category_id = 1;
    std::int64_t image_id = 0;
    int cluster_size = 0;
    std::vector<std::pair<int, std::int64_t>> member_ids; // (model_id, source_index)
};

/// Divide weights by their arithmetic mean so the mean becomes 1. Fusion is
/// thereby invariant to the overall weight scale.
std::vector<double> normalize_weights(const std::vector<double>& weights);

/// Weighted Boxes Fusion of one image's per-model detection lists.
///
///  1. weights normalized to mean 1
///  2. detections with raw score < skip_threshold dropped
///  3. effective score s' = score * weight[model]
///  4. detections pooled; categories never mix in a cluster
///  5. sorted by s' descending, ties by (model_id, source_index) ascending
///  6. greedy clustering against each cluster's current fused box: join the
///     highest-IoU cluster with IoU > iou_threshold (ties to the lowest
///     cluster index), else open a new cluster
///  7. fused box = s'-weighted average of member corners, fused raw
///     score = mean member s', both recomputed on every membership change
///  8. final score = raw score * min(T, N) / N for cluster size T and N
///     models, clipped to [0, 1]; fused box clipped to [0, 1]
///
/// Output is sorted by final score descending, ties by cluster creation
/// index.
std::vector<FusedDetection> fuse_image(const std::vector<std::vector<Detection>>& per_model,
                                       const EnsembleConfig& config);

/// fuse_image applied per image over whole prediction sets. The result is
/// labelled "ensemble"; detections are ordered by ascending image id, then by
/// fused score as produced by fuse_image, and renumbered with fresh
/// source indices.
PredictionSet fuse_dataset(const std::vector<PredictionSet>& per_model_sets,
                           const EnsembleConfig& config);

} // namespace sardet
