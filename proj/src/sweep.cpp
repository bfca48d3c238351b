#include "sardet/sweep.hpp"

#include "sardet/error.hpp"
#include "sardet/parallel.hpp"

namespace sardet {

SweepResult sweep(const DatasetGT& gt,
                  const std::vector<std::pair<std::string, std::filesystem::path>>& checkpoints,
                  int threads) {
    if (checkpoints.empty()) {
        throw ValidationError("sweep: need at least one checkpoint");
    }

    SweepResult result;
    result.curve.resize(checkpoints.size());
    parallel_for_indexed(checkpoints.size(), threads, [&](std::size_t i) {
        const auto& [label, path] = checkpoints[i];
        SweepEntry entry;
        entry.label = label;
        try {
            const PredictionSet preds = load_predictions(path, gt, 0, label);
            entry.report = evaluate(gt, preds);
        } catch (const IoError& e) {
            throw IoError("checkpoint \"" + label + "\": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError("checkpoint \"" + label + "\": " + e.what());
        }
        result.curve[i] = std::move(entry);
    });

    std::size_t best = 0;
    for (std::size_t i = 1; i < result.curve.size(); ++i) {
        const double ap = result.curve[i].report.ap_50_95;
        const double best_ap = result.curve[best].report.ap_50_95;
        if (ap > best_ap ||
            (ap == best_ap && natural_less(result.curve[i].label, result.curve[best].label))) {
            best = i;
        }
    }
    result.best_checkpoint = result.curve[best].label;
    return result;
}

} // namespace sardet
