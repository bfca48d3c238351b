#include "sardet/tuner.hpp"

#include <algorithm>
#include <string>

#include "sardet/error.hpp"
#include "sardet/parallel.hpp"

namespace sardet {

SearchSpace SearchSpace::defaults(std::size_t n_models) {
    SearchSpace space;
    space.weight_ranges.assign(n_models, Interval{0.01, 2.0});
    return space;
}

void SearchSpace::validate() const {
    if (weight_ranges.empty()) {
        throw ValidationError("SearchSpace: need at least one weight range");
    }
    for (const Interval& r : weight_ranges) {
        if (!(r.length() > 0.0)) {
            throw ValidationError("SearchSpace: weight interval must have positive length");
        }
        if (!(r.lo > 0.0)) {
            throw ValidationError("SearchSpace: weight interval must stay positive, got lo=" +
                                  std::to_string(r.lo));
        }
    }
    if (!(iou_range.length() > 0.0) || !(iou_range.lo > 0.0) || !(iou_range.hi < 1.0)) {
        throw ValidationError("SearchSpace: iou interval must have positive length inside (0, 1)");
    }
    if (!(skip_range.length() > 0.0) || !(skip_range.lo >= 0.0) || !(skip_range.hi < 1.0)) {
        throw ValidationError("SearchSpace: skip interval must have positive length inside [0, 1)");
    }
}

EnsembleConfig sample(const SearchSpace& space, Rng& rng) {
    space.validate();
    EnsembleConfig config;
    config.weights.reserve(space.weight_ranges.size());
    for (const Interval& r : space.weight_ranges) {
        config.weights.push_back(rng.uniform(r.lo, r.hi));
    }
    config.iou_threshold = rng.uniform(space.iou_range.lo, space.iou_range.hi);
    config.skip_threshold = rng.uniform(space.skip_range.lo, space.skip_range.hi);
    return config;
}

StudyResult tune(const DatasetGT& gt, const std::vector<PredictionSet>& per_model_sets,
                 const SearchSpace& space, int n_trials, std::uint64_t seed, int threads) {
    if (n_trials < 1) {
        throw ValidationError("tune: n_trials must be >= 1, got " + std::to_string(n_trials));
    }
    if (per_model_sets.empty()) {
        throw ValidationError("tune: need at least one prediction set");
    }
    space.validate();
    if (space.weight_ranges.size() != per_model_sets.size()) {
        throw ValidationError("tune: " + std::to_string(space.weight_ranges.size()) +
                              " weight ranges but " + std::to_string(per_model_sets.size()) +
                              " prediction sets");
    }

    // configs are drawn up front so worker scheduling cannot affect them
    std::vector<EnsembleConfig> configs;
    configs.reserve(static_cast<std::size_t>(n_trials));
    EnsembleConfig baseline;
    baseline.weights.assign(per_model_sets.size(), 1.0);
    baseline.iou_threshold = 0.55;
    baseline.skip_threshold = 0.0;
    configs.push_back(baseline);
    Rng rng(seed);
    for (int i = 1; i < n_trials; ++i) {
        configs.push_back(sample(space, rng));
    }

    StudyResult study;
    study.seed = seed;
    study.n_trials = n_trials;
    study.history.resize(static_cast<std::size_t>(n_trials));
    parallel_for_indexed(static_cast<std::size_t>(n_trials), threads, [&](std::size_t i) {
        Trial trial;
        trial.index = static_cast<int>(i);
        trial.config = configs[i];
        const PredictionSet fused = fuse_dataset(per_model_sets, trial.config);
        trial.report = evaluate(gt, fused);
        trial.objective_value = objective(trial.report);
        study.history[i] = std::move(trial);
    });

    std::size_t best = 0;
    for (std::size_t i = 1; i < study.history.size(); ++i) {
        if (study.history[i].objective_value > study.history[best].objective_value) {
            best = i;
        }
    }
    study.best = study.history[best];
    return study;
}

std::vector<double> best_so_far_curve(const StudyResult& study) {
    std::vector<double> curve;
    curve.reserve(study.history.size());
    double best = 0.0;
    for (std::size_t i = 0; i < study.history.size(); ++i) {
        best = i == 0 ? study.history[i].objective_value
                      : std::max(best, study.history[i].objective_value);
        curve.push_back(best);
    }
    return curve;
}

} // namespace sardet
