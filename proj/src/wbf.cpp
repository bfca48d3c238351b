#include "sardet/wbf.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "sardet/error.hpp"

namespace sardet {

namespace {

double clip01(double v) { return std::min(1.0, std::max(0.0, v)); }

struct Member {
    Detection det;
    double eff_score = 0.0; // s' = score * weight[model]
};

struct Cluster {
    int category_id = 1;
    std::vector<Member> members;
    BBox fused;
    double raw_score = 0.0; // mean of member effective scores

    void refresh() {
        double wsum = 0.0;
        double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;
        double ssum = 0.0;
        for (const Member& m : members) {
            wsum += m.eff_score;
            x1 += m.eff_score * m.det.box.x1;
            y1 += m.eff_score * m.det.box.y1;
            x2 += m.eff_score * m.det.box.x2;
            y2 += m.eff_score * m.det.box.y2;
            ssum += m.eff_score;
        }
        if (wsum > 0.0) {
            fused.x1 = x1 / wsum;
            fused.y1 = y1 / wsum;
            fused.x2 = x2 / wsum;
            fused.y2 = y2 / wsum;
        } else {
            // all-zero effective scores: fall back to plain average
            const double n = static_cast<double>(members.size());
            double ax1 = 0.0, ay1 = 0.0, ax2 = 0.0, ay2 = 0.0;
            for (const Member& m : members) {
                ax1 += m.det.box.x1;
                ay1 += m.det.box.y1;
                ax2 += m.det.box.x2;
                ay2 += m.det.box.y2;
            }
            fused.x1 = ax1 / n;
            fused.y1 = ay1 / n;
            fused.x2 = ax2 / n;
            fused.y2 = ay2 / n;
        }
        raw_score = ssum / static_cast<double>(members.size());
    }
};

bool before(const Member& a, const Member& b) {
    if (a.eff_score != b.eff_score) {
        return a.eff_score > b.eff_score;
    }
    if (a.det.model_id != b.det.model_id) {
        return a.det.model_id < b.det.model_id;
    }
    return a.det.source_index < b.det.source_index;
}

} // namespace

void EnsembleConfig::validate() const {
    if (weights.empty()) {
        throw ValidationError("EnsembleConfig: weights must be non-empty");
    }
    for (double w : weights) {
        if (!(w > 0.0)) {
            throw ValidationError("EnsembleConfig: every weight must be > 0, got " +
                                  std::to_string(w));
        }
    }
    if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
        throw ValidationError("EnsembleConfig: iou_threshold must be in (0, 1), got " +
                              std::to_string(iou_threshold));
    }
    if (!(skip_threshold >= 0.0 && skip_threshold < 1.0)) {
        throw ValidationError("EnsembleConfig: skip_threshold must be in [0, 1), got " +
                              std::to_string(skip_threshold));
    }
}

std::vector<double> normalize_weights(const std::vector<double>& weights) {
    if (weights.empty()) {
        throw ValidationError("normalize_weights: empty weight list");
    }
    double sum = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) {
            throw ValidationError("normalize_weights: weights must be > 0, got " +
                                  std::to_string(w));
        }
        sum += w;
    }
    const double mean = sum / static_cast<double>(weights.size());
    std::vector<double> out;
    out.reserve(weights.size());
    for (double w : weights) {
        out.push_back(w / mean);
    }
    return out;
}

std::vector<FusedDetection> fuse_image(const std::vector<std::vector<Detection>>& per_model,
                                       const EnsembleConfig& config) {
    config.validate();
    if (per_model.size() != config.weights.size()) {
        throw ValidationError("fuse_image: " + std::to_string(per_model.size()) +
                              " models but " + std::to_string(config.weights.size()) +
                              " weights");
    }
    const std::vector<double> weights = normalize_weights(config.weights);
    const int n_models = static_cast<int>(per_model.size());

    bool have_image = false;
    std::int64_t image_id = 0;
    std::vector<Member> pool;
    for (std::size_t m = 0; m < per_model.size(); ++m) {
        for (const Detection& det : per_model[m]) {
            if (!have_image) {
                image_id = det.image_id;
                have_image = true;
            } else if (det.image_id != image_id) {
                throw ValidationError("fuse_image: mixed image ids " +
                                      std::to_string(image_id) + " and " +
                                      std::to_string(det.image_id));
            }
            if (det.score < config.skip_threshold) {
                continue;
            }
            Member member;
            member.det = det;
            member.det.model_id = static_cast<int>(m);
            member.eff_score = det.score * weights[m];
            pool.push_back(member);
        }
    }
    std::sort(pool.begin(), pool.end(), before);

    std::vector<Cluster> clusters;
    for (const Member& member : pool) {
        int best_cluster = -1;
        double best_iou = config.iou_threshold;
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            if (clusters[c].category_id != member.det.category_id) {
                continue;
            }
            const double overlap = iou(member.det.box, clusters[c].fused);
            if (overlap > best_iou) {
                best_iou = overlap;
                best_cluster = static_cast<int>(c);
            }
        }
        if (best_cluster < 0) {
            Cluster cluster;
            cluster.category_id = member.det.category_id;
            cluster.members.push_back(member);
            cluster.refresh();
            clusters.push_back(std::move(cluster));
        } else {
            clusters[static_cast<std::size_t>(best_cluster)].members.push_back(member);
            clusters[static_cast<std::size_t>(best_cluster)].refresh();
        }
    }

    std::vector<FusedDetection> out;
    out.reserve(clusters.size());
    for (const Cluster& cluster : clusters) {
        FusedDetection fd;
        fd.box = BBox(clip01(cluster.fused.x1), clip01(cluster.fused.y1),
                      clip01(cluster.fused.x2), clip01(cluster.fused.y2));
        const int t = static_cast<int>(cluster.members.size());
        fd.score = clip01(cluster.raw_score * static_cast<double>(std::min(t, n_models)) /
                          static_cast<double>(n_models));
        fd.category_id = cluster.category_id;
        fd.image_id = image_id;
        fd.cluster_size = t;
        for (const Member& m : cluster.members) {
            fd.member_ids.emplace_back(m.det.model_id, m.det.source_index);
        }
        out.push_back(std::move(fd));
    }

    // final score descending, ties by cluster creation index
    std::vector<std::size_t> order(out.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&out](std::size_t a, std::size_t b) { return out[a].score > out[b].score; });
    std::vector<FusedDetection> sorted;
    sorted.reserve(out.size());
    for (std::size_t idx : order) {
        sorted.push_back(std::move(out[idx]));
    }
    return sorted;
}

PredictionSet fuse_dataset(const std::vector<PredictionSet>& per_model_sets,
                           const EnsembleConfig& config) {
    config.validate();
    if (per_model_sets.size() != config.weights.size()) {
        throw ValidationError("fuse_dataset: " + std::to_string(per_model_sets.size()) +
                              " prediction sets but " +
                              std::to_string(config.weights.size()) + " weights");
    }

    // group per image, keeping each model's list separate
    std::map<std::int64_t, std::vector<std::vector<Detection>>> by_image;
    for (std::size_t m = 0; m < per_model_sets.size(); ++m) {
        for (const Detection& det : per_model_sets[m].detections) {
            auto& lists = by_image[det.image_id];
            if (lists.empty()) {
                lists.resize(per_model_sets.size());
            }
            Detection copy = det;
            copy.model_id = static_cast<int>(m);
            lists[m].push_back(copy);
        }
    }

    PredictionSet fused;
    fused.model_label = "ensemble";
    std::int64_t next_index = 0;
    for (auto& [image_id, lists] : by_image) {
        const auto image_fused = fuse_image(lists, config);
        for (const FusedDetection& fd : image_fused) {
            Detection det;
            det.box = fd.box;
            det.score = fd.score;
            det.category_id = fd.category_id;
            det.image_id = image_id;
            det.model_id = 0;
            det.source_index = next_index++;
            fused.detections.push_back(det);
        }
    }
    return fused;
}

} // namespace sardet
