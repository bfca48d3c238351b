#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "sardet/datasets.hpp"
#include "sardet/metrics.hpp"

namespace sardet {

struct SweepEntry {
    std::string label;
    EvalReport report;
};

struct SweepResult {
    std::vector<SweepEntry> curve; // input order
    std::string best_checkpoint;   // argmax ap_50_95, ties to the earliest label
};

/// Evaluate every checkpoint's prediction file against the ground truth. The
/// curve keeps input order; the best checkpoint maximizes ap_50_95, with ties
/// resolved to the label that sorts earliest under natural_less. Errors in a
/// prediction file are reported with its checkpoint label.
SweepResult sweep(const DatasetGT& gt,
                  const std::vector<std::pair<std::string, std::filesystem::path>>& checkpoints,
                  int threads = 1);

} // namespace sardet
