#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "sardet/geometry.hpp"

namespace sardet {

struct ImageInfo {
    std::int64_t id = 0;
    int width = 0;
    int height = 0;
    std::string file_name;
};

struct CategoryInfo {
    int id = 0;
    std::string name;
};

/// Validated ground truth: unique image ids, every annotation resolves to an
/// existing image and category, boxes non-degenerate, dimensions positive.
struct DatasetGT {
    std::vector<ImageInfo> images;
    std::vector<Annotation> annotations;
    std::vector<CategoryInfo> categories;

    const ImageInfo* find_image(std::int64_t id) const;
    const CategoryInfo* find_category(int id) const;
};

struct PredictionSet {
    std::string model_label;
    std::vector<Detection> detections;
};

struct SplitSpec {
    double train_fraction = 0.85;
    std::uint64_t seed = 0;
};

/// Load a COCO object-detection ground-truth file. Boxes are normalized
/// against their image dimensions. Throws ValidationError naming the
/// offending record on schema or reference problems, IoError on open failure.
DatasetGT load_gt(const std::filesystem::path& path);

/// Serialize ground truth back to COCO JSON (absolute pixel bboxes).
void save_gt(const DatasetGT& gt, const std::filesystem::path& path);

/// Load a COCO results file (flat array of {image_id, category_id, bbox,
/// score}) against a ground truth that supplies image dimensions. Scores
/// outside [0, 1] and unknown image/category ids are validation errors, never
/// silently fixed. source_index equals the record's position in the file.
PredictionSet load_predictions(const std::filesystem::path& path, const DatasetGT& gt,
                               int model_id = 0, const std::string& label = "");

/// Serialize predictions to a COCO results file (absolute pixel bboxes).
void save_predictions(const PredictionSet& preds, const DatasetGT& gt,
                      const std::filesystem::path& path);

/// Seeded image-level split. Validation size = round(n * (1 - train_fraction))
/// with a floor of 1 (and capped at n - 1 so both sides stay non-empty);
/// annotations follow their images.
std::pair<DatasetGT, DatasetGT> split(const DatasetGT& gt, const SplitSpec& spec);

/// Numeric-aware label ordering: digit runs compare by value, so
/// "epoch2" < "epoch10".
bool natural_less(const std::string& a, const std::string& b);

} // namespace sardet
