#include "sardet/datasets.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "sardet/error.hpp"
#include "sardet/rng.hpp"

namespace sardet {

using nlohmann::json;

namespace {

json parse_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": JSON parse failure: " + e.what());
    }
    return doc;
}

void write_file(const json& doc, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << doc.dump(2) << "\n";
    if (!out) {
        throw IoError("write failure on " + path.string());
    }
}

const json& require_key(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ValidationError(where + ": missing key \"" + key + "\"");
    }
    return *it;
}

double require_number(const json& obj, const char* key, const std::string& where) {
    const json& v = require_key(obj, key, where);
    if (!v.is_number()) {
        throw ValidationError(where + ": \"" + key + "\" is not a number");
    }
    return v.get<double>();
}

std::array<double, 4> require_bbox(const json& obj, const std::string& where) {
    const json& v = require_key(obj, "bbox", where);
    if (!v.is_array() || v.size() != 4 || !std::all_of(v.begin(), v.end(), [](const json& e) {
            return e.is_number();
        })) {
        throw ValidationError(where + ": \"bbox\" must be an array of 4 numbers");
    }
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
}

} // namespace

const ImageInfo* DatasetGT::find_image(std::int64_t id) const {
    for (const auto& img : images) {
        if (img.id == id) {
            return &img;
        }
    }
    return nullptr;
}

const CategoryInfo* DatasetGT::find_category(int id) const {
    for (const auto& cat : categories) {
        if (cat.id == id) {
            return &cat;
        }
    }
    return nullptr;
}

DatasetGT load_gt(const std::filesystem::path& path) {
    const json doc = parse_file(path);
    if (!doc.is_object()) {
        throw ValidationError(path.string() + ": top level is not an object");
    }
    const json& images = require_key(doc, "images", path.string());
    const json& annotations = require_key(doc, "annotations", path.string());
    const json& categories = require_key(doc, "categories", path.string());
    if (!images.is_array() || !annotations.is_array() || !categories.is_array()) {
        throw ValidationError(path.string() +
                              ": images/annotations/categories must be arrays");
    }

    DatasetGT gt;
    std::unordered_map<std::int64_t, const ImageInfo*> image_by_id;
    for (const json& rec : images) {
        const std::string where = path.string() + ": image entry";
        ImageInfo img;
        img.id = static_cast<std::int64_t>(require_number(rec, "id", where));
        img.width = static_cast<int>(require_number(rec, "width", where));
        img.height = static_cast<int>(require_number(rec, "height", where));
        if (auto it = rec.find("file_name"); it != rec.end() && it->is_string()) {
            img.file_name = it->get<std::string>();
        }
        if (img.width <= 0 || img.height <= 0) {
            throw ValidationError(path.string() + ": image id " + std::to_string(img.id) +
                                  " has non-positive dimensions");
        }
        if (image_by_id.count(img.id)) {
            throw ValidationError(path.string() + ": duplicate image id " +
                                  std::to_string(img.id));
        }
        gt.images.push_back(img);
        image_by_id.emplace(img.id, nullptr);
    }
    image_by_id.clear();
    for (const auto& img : gt.images) {
        image_by_id.emplace(img.id, &img);
    }

    std::unordered_set<int> category_ids;
    for (const json& rec : categories) {
        const std::string where = path.string() + ": category entry";
        CategoryInfo cat;
        cat.id = static_cast<int>(require_number(rec, "id", where));
        if (auto it = rec.find("name"); it != rec.end() && it->is_string()) {
            cat.name = it->get<std::string>();
        }
        if (cat.id < 1) {
            throw ValidationError(path.string() + ": category id " + std::to_string(cat.id) +
                                  " must be >= 1");
        }
        if (!category_ids.insert(cat.id).second) {
            throw ValidationError(path.string() + ": duplicate category id " +
                                  std::to_string(cat.id));
        }
        gt.categories.push_back(cat);
    }

    for (const json& rec : annotations) {
        const std::string where = path.string() + ": annotation entry";
        Annotation ann;
        ann.annotation_id = static_cast<std::int64_t>(require_number(rec, "id", where));
        const std::string who = path.string() + ": annotation id " +
                                std::to_string(ann.annotation_id);
        ann.image_id = static_cast<std::int64_t>(require_number(rec, "image_id", who));
        ann.category_id = static_cast<int>(require_number(rec, "category_id", who));
        auto it = image_by_id.find(ann.image_id);
        if (it == image_by_id.end()) {
            throw ValidationError(who + " references unknown image_id " +
                                  std::to_string(ann.image_id));
        }
        if (!category_ids.count(ann.category_id)) {
            throw ValidationError(who + " references unknown category_id " +
                                  std::to_string(ann.category_id));
        }
        const auto b = require_bbox(rec, who);
        const ImageInfo& img = *it->second;
        ann.box = from_abs_xywh(b[0], b[1], b[2], b[3], img.width, img.height);
        if (ann.box.area() <= 0.0) {
            throw ValidationError(who + " has a degenerate (zero-area) box");
        }
        gt.annotations.push_back(ann);
    }
    return gt;
}

void save_gt(const DatasetGT& gt, const std::filesystem::path& path) {
    json doc;
    doc["images"] = json::array();
    for (const auto& img : gt.images) {
        doc["images"].push_back({{"id", img.id},
                                 {"width", img.width},
                                 {"height", img.height},
                                 {"file_name", img.file_name}});
    }
    doc["annotations"] = json::array();
    for (const auto& ann : gt.annotations) {
        const ImageInfo* img = gt.find_image(ann.image_id);
        if (!img) {
            throw ValidationError("save_gt: annotation id " +
                                  std::to_string(ann.annotation_id) +
                                  " references unknown image_id " +
                                  std::to_string(ann.image_id));
        }
        const AbsXywh b = to_abs_xywh(ann.box, img->width, img->height);
        doc["annotations"].push_back({{"id", ann.annotation_id},
                                      {"image_id", ann.image_id},
                                      {"category_id", ann.category_id},
                                      {"bbox", {b.x, b.y, b.w, b.h}},
                                      {"area", b.w * b.h},
                                      {"iscrowd", 0}});
    }
    doc["categories"] = json::array();
    for (const auto& cat : gt.categories) {
        doc["categories"].push_back({{"id", cat.id}, {"name", cat.name}});
    }
    write_file(doc, path);
}

PredictionSet load_predictions(const std::filesystem::path& path, const DatasetGT& gt,
                               int model_id, const std::string& label) {
    const json doc = parse_file(path);
    if (!doc.is_array()) {
        throw ValidationError(path.string() + ": results file must be a JSON array");
    }

    std::unordered_map<std::int64_t, const ImageInfo*> image_by_id;
    for (const auto& img : gt.images) {
        image_by_id.emplace(img.id, &img);
    }
    std::unordered_set<int> category_ids;
    for (const auto& cat : gt.categories) {
        category_ids.insert(cat.id);
    }

    PredictionSet set;
    set.model_label = label.empty() ? path.stem().string() : label;
    std::vector<std::int64_t> unknown_images;
    std::int64_t index = 0;
    for (const json& rec : doc) {
        const std::string who = path.string() + ": result #" + std::to_string(index);
        Detection det;
        det.image_id = static_cast<std::int64_t>(require_number(rec, "image_id", who));
        det.category_id = static_cast<int>(require_number(rec, "category_id", who));
        det.score = require_number(rec, "score", who);
        if (det.score < 0.0 || det.score > 1.0) {
            throw ValidationError(who + ": score " + std::to_string(det.score) +
                                  " outside [0, 1]");
        }
        if (!category_ids.count(det.category_id)) {
            throw ValidationError(who + ": unknown category_id " +
                                  std::to_string(det.category_id));
        }
        auto it = image_by_id.find(det.image_id);
        if (it == image_by_id.end()) {
            unknown_images.push_back(det.image_id);
            ++index;
            continue;
        }
        const auto b = require_bbox(rec, who);
        det.box = from_abs_xywh(b[0], b[1], b[2], b[3], it->second->width,
                                it->second->height);
        det.model_id = model_id;
        det.source_index = index;
        set.detections.push_back(det);
        ++index;
    }
    if (!unknown_images.empty()) {
        std::string ids;
        for (auto id : unknown_images) {
            ids += (ids.empty() ? "" : ", ") + std::to_string(id);
        }
        throw ValidationError(path.string() + ": predictions reference unknown image ids: " +
                              ids);
    }
    return set;
}

void save_predictions(const PredictionSet& preds, const DatasetGT& gt,
                      const std::filesystem::path& path) {
    json doc = json::array();
    for (const auto& det : preds.detections) {
        const ImageInfo* img = gt.find_image(det.image_id);
        if (!img) {
            throw ValidationError("save_predictions: detection references unknown image_id " +
                                  std::to_string(det.image_id));
        }
        const AbsXywh b = to_abs_xywh(det.box, img->width, img->height);
        doc.push_back({{"image_id", det.image_id},
                       {"category_id", det.category_id},
                       {"bbox", {b.x, b.y, b.w, b.h}},
                       {"score", det.score}});
    }
    write_file(doc, path);
}

std::pair<DatasetGT, DatasetGT> split(const DatasetGT& gt, const SplitSpec& spec) {
    if (spec.train_fraction <= 0.0 || spec.train_fraction >= 1.0) {
        throw ValidationError("split: train_fraction must be in (0, 1), got " +
                              std::to_string(spec.train_fraction));
    }
    const std::size_t n = gt.images.size();
    if (n < 2) {
        throw ValidationError("split: need at least 2 images, got " + std::to_string(n));
    }
    std::size_t val_count = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * (1.0 - spec.train_fraction)));
    val_count = std::max<std::size_t>(1, std::min(val_count, n - 1));

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    Rng rng(spec.seed);
    shuffle(order, rng);

    std::vector<bool> in_val(n, false);
    for (std::size_t i = 0; i < val_count; ++i) {
        in_val[order[i]] = true;
    }

    DatasetGT train;
    DatasetGT val;
    train.categories = gt.categories;
    val.categories = gt.categories;
    std::unordered_set<std::int64_t> val_image_ids;
    for (std::size_t i = 0; i < n; ++i) {
        if (in_val[i]) {
            val.images.push_back(gt.images[i]);
            val_image_ids.insert(gt.images[i].id);
        } else {
            train.images.push_back(gt.images[i]);
        }
    }
    for (const auto& ann : gt.annotations) {
        if (val_image_ids.count(ann.image_id)) {
            val.annotations.push_back(ann);
        } else {
            train.annotations.push_back(ann);
        }
    }
    return {std::move(train), std::move(val)};
}

bool natural_less(const std::string& a, const std::string& b) {
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.size() && j < b.size()) {
        const bool da = std::isdigit(static_cast<unsigned char>(a[i])) != 0;
        const bool db = std::isdigit(static_cast<unsigned char>(b[j])) != 0;
        if (da && db) {
            std::size_t ia = i;
            std::size_t jb = j;
            while (ia < a.size() && std::isdigit(static_cast<unsigned char>(a[ia]))) ++ia;
            while (jb < b.size() && std::isdigit(static_cast<unsigned char>(b[jb]))) ++jb;
            std::string_view na(a.data() + i, ia - i);
            std::string_view nb(b.data() + j, jb - j);
            // compare by value: strip leading zeros, then by length, then lexically
            while (na.size() > 1 && na.front() == '0') na.remove_prefix(1);
            while (nb.size() > 1 && nb.front() == '0') nb.remove_prefix(1);
            if (na.size() != nb.size()) {
                return na.size() < nb.size();
            }
            if (na != nb) {
                return na < nb;
            }
            i = ia;
            j = jb;
        } else {
            if (a[i] != b[j]) {
                return a[i] < b[j];
            }
            ++i;
            ++j;
        }
    }
    if (i >= a.size() && j >= b.size()) {
        return a < b; // equal under natural order, e.g. "epoch01" vs "epoch1"
    }
    return (a.size() - i) < (b.size() - j);
}

} // namespace sardet
