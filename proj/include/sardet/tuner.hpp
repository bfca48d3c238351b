#pragma once

#include <cstdint>
#include <vector>

#include "sardet/datasets.hpp"
#include "sardet/metrics.hpp"
#include "sardet/rng.hpp"
#include "sardet/wbf.hpp"

namespace sardet {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
};

/// Per-parameter sampling ranges. Every interval must have positive length
/// and lie inside the EnsembleConfig validity domain for its parameter.
struct SearchSpace {
    std::vector<Interval> weight_ranges; // one per model
    Interval iou_range{0.30, 0.80};
    Interval skip_range{0.00, 0.40};

    static SearchSpace defaults(std::size_t n_models);
    void validate() const;
};

struct Trial {
    int index = 0;
    EnsembleConfig config;
    double objective_value = 0.0;
    EvalReport report;
};

struct StudyResult {
    Trial best;
    std::vector<Trial> history;
    std::uint64_t seed = 0;
    int n_trials = 0;
};

/// Draw one config uniformly from the space: weights in range order, then the
/// IoU threshold, then the skip threshold. Identical rng state gives an
/// identical config.
EnsembleConfig sample(const SearchSpace& space, Rng& rng);

/// Seeded uniform random search over fuse_dataset + evaluate + objective.
/// Trial 0 is always the baseline config (uniform weights, iou 0.55, skip 0)
/// so the study never underperforms the unweighted ensemble. Configs are
/// pre-generated sequentially from the seed; trials may then evaluate on
/// `threads` workers with results ordered by trial index, so the study is
/// fully deterministic given (seed, inputs).
StudyResult tune(const DatasetGT& gt, const std::vector<PredictionSet>& per_model_sets,
                 const SearchSpace& space, int n_trials, std::uint64_t seed,
                 int threads = 1);

/// Element i = max objective over trials 0..i; non-decreasing.
std::vector<double> best_so_far_curve(const StudyResult& study);

} // namespace sardet
