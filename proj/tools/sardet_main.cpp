#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sardet/composites.hpp"
#include "sardet/datasets.hpp"
#include "sardet/error.hpp"
#include "sardet/metrics.hpp"
#include "sardet/parallel.hpp"
#include "sardet/png_io.hpp"
#include "sardet/sweep.hpp"
#include "sardet/tuner.hpp"
#include "sardet/wbf.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitValidation = 2;

struct GlobalOpts {
    int threads = sardet::default_thread_count();
    bool quiet = false;
    bool verbose = false;
};

void info(const GlobalOpts& opts, const std::string& msg) {
    if (!opts.quiet) {
        std::cerr << msg << "\n";
    }
}

std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
    std::vector<double> values;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::string item =
            text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        try {
            std::size_t used = 0;
            values.push_back(std::stod(item, &used));
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            throw sardet::ValidationError(flag + ": cannot parse \"" + item + "\" as a number");
        }
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return values;
}

std::pair<double, double> parse_pair(const std::string& text, const std::string& flag) {
    const auto values = parse_double_list(text, flag);
    if (values.size() != 2) {
        throw sardet::ValidationError(flag + ": expected LO,HI, got \"" + text + "\"");
    }
    return {values[0], values[1]};
}

std::string format_metric(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

sardet::BandRaster load_band(const std::string& path) {
    return sardet::load_raster(path, path + ".json");
}

json report_to_json(const sardet::EvalReport& report) {
    json per_category = json::object();
    for (const auto& [id, cm] : report.per_category) {
        per_category[std::to_string(id)] = {{"ap_50_95", cm.ap_50_95},
                                            {"ap_50", cm.ap_50},
                                            {"ap_75", cm.ap_75},
                                            {"ar_50_95", cm.ar_50_95}};
    }
    return {{"ap_50_95", report.ap_50_95},
            {"ap_50", report.ap_50},
            {"ap_75", report.ap_75},
            {"ar_50_95", report.ar_50_95},
            {"per_category", per_category},
            {"counts",
             {{"images", report.n_images},
              {"ground_truth", report.n_ground_truth},
              {"detections", report.n_detections}}},
            {"warning_categories", report.warning_categories}};
}

json study_to_json(const sardet::StudyResult& study) {
    auto config_fields = [](const sardet::Trial& trial) {
        return json{{"index", trial.index},
                    {"weights", trial.config.weights},
                    {"iou_threshold", trial.config.iou_threshold},
                    {"skip_threshold", trial.config.skip_threshold},
                    {"objective", trial.objective_value},
                    {"ap_50_95", trial.report.ap_50_95},
                    {"ar_50_95", trial.report.ar_50_95}};
    };
    json history = json::array();
    for (const auto& trial : study.history) {
        history.push_back(config_fields(trial));
    }
    return {{"seed", study.seed},
            {"n_trials", study.n_trials},
            {"best",
             {{"weights", study.best.config.weights},
              {"iou_threshold", study.best.config.iou_threshold},
              {"skip_threshold", study.best.config.skip_threshold},
              {"objective", study.best.objective_value}}},
            {"history", history},
            {"best_so_far", sardet::best_so_far_curve(study)}};
}

void write_json(const json& doc, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw sardet::IoError("cannot open " + path.string() + " for writing");
    }
    out << doc.dump(2) << "\n";
    if (!out) {
        throw sardet::IoError("write failure on " + path.string());
    }
}

// -------------------------------------------------------------- composite --

struct CompositeS1Args {
    std::string vh;
    std::string vv;
    std::string out;
    std::string clip = "2,98";
};

struct CompositeS2Args {
    std::string b04;
    std::string b03;
    std::string b02;
    std::string out;
    double scale = 10000.0;
};

void run_composite_s1(const CompositeS1Args& args, const GlobalOpts& opts) {
    const auto clip = parse_pair(args.clip, "--clip");
    const auto vh = load_band(args.vh);
    const auto vv = load_band(args.vv);
    const auto rgb = sardet::s1_composite(vh, vv, clip);
    sardet::save_png(rgb, args.out);
    info(opts, "wrote " + args.out);
}

void run_composite_s2(const CompositeS2Args& args, const GlobalOpts& opts) {
    const auto b04 = load_band(args.b04);
    const auto b03 = load_band(args.b03);
    const auto b02 = load_band(args.b02);
    const auto rgb = sardet::s2_composite(b04, b03, b02, args.scale);
    sardet::save_png(rgb, args.out);
    info(opts, "wrote " + args.out);
}

// ------------------------------------------------------------------- crop --

struct CropArgs {
    std::string in;
    int size = 600;
    int stride = 0;
    std::string gt;
    double min_visibility = 0.5;
    std::vector<std::string> exclude;
    std::string out_dir;
};

std::string patch_file_name(const std::string& stem, int oy, int ox) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "_y%06d_x%06d.png", oy, ox);
    return stem + buf;
}

void run_crop(const CropArgs& args, const GlobalOpts& opts) {
    const auto img = sardet::load_png(args.in);
    sardet::CropSpec spec;
    spec.patch_size = args.size;
    spec.stride = args.stride;
    spec.min_box_visibility = args.min_visibility;

    std::vector<std::pair<int, int>> excluded;
    for (const auto& e : args.exclude) {
        const auto xy = parse_pair(e, "--exclude");
        excluded.emplace_back(static_cast<int>(xy.first), static_cast<int>(xy.second));
    }
    auto is_excluded = [&excluded](int ox, int oy) {
        return std::find(excluded.begin(), excluded.end(), std::make_pair(ox, oy)) !=
               excluded.end();
    };

    fs::create_directories(args.out_dir);
    const std::string stem = fs::path(args.in).stem().string();
    json manifest = json::array();

    if (args.gt.empty()) {
        const auto patches = sardet::crop_grid(img, spec);
        for (const auto& patch : patches) {
            if (is_excluded(patch.origin_x, patch.origin_y)) {
                continue;
            }
            const std::string name = patch_file_name(stem, patch.origin_y, patch.origin_x);
            sardet::save_png(patch.image, fs::path(args.out_dir) / name);
            manifest.push_back({{"file_name", name},
                                {"origin_x", patch.origin_x},
                                {"origin_y", patch.origin_y},
                                {"source", args.in}});
        }
    } else {
        const auto gt = sardet::load_gt(args.gt);
        // resolve which ground-truth image the input corresponds to
        const sardet::ImageInfo* match = nullptr;
        const std::string base = fs::path(args.in).filename().string();
        for (const auto& info_rec : gt.images) {
            if (info_rec.file_name == base) {
                match = &info_rec;
                break;
            }
        }
        if (!match && gt.images.size() == 1) {
            match = &gt.images.front();
        }
        if (!match) {
            throw sardet::ValidationError("crop: no ground-truth image named \"" + base +
                                          "\" and the file lists " +
                                          std::to_string(gt.images.size()) + " images");
        }
        if (match->width != img.width || match->height != img.height) {
            throw sardet::ValidationError(
                "crop: ground-truth image " + std::to_string(match->id) + " is " +
                std::to_string(match->width) + "x" + std::to_string(match->height) +
                " but the input PNG is " + std::to_string(img.width) + "x" +
                std::to_string(img.height));
        }
        std::vector<sardet::Annotation> annotations;
        for (const auto& ann : gt.annotations) {
            if (ann.image_id == match->id) {
                annotations.push_back(ann);
            }
        }

        const auto patches = sardet::crop_detection_patches(img, annotations, spec);
        sardet::DatasetGT patches_gt;
        patches_gt.categories = gt.categories;
        std::int64_t next_ann_id = 1;
        for (const auto& patch : patches) {
            if (is_excluded(patch.origin_x, patch.origin_y)) {
                continue;
            }
            const std::string name = patch_file_name(stem, patch.origin_y, patch.origin_x);
            sardet::save_png(patch.image, fs::path(args.out_dir) / name);
            manifest.push_back({{"file_name", name},
                                {"origin_x", patch.origin_x},
                                {"origin_y", patch.origin_y},
                                {"source", args.in}});
            sardet::ImageInfo pimg;
            pimg.id = static_cast<std::int64_t>(manifest.size());
            pimg.width = spec.patch_size;
            pimg.height = spec.patch_size;
            pimg.file_name = name;
            patches_gt.images.push_back(pimg);
            for (const auto& ann : patch.annotations) {
                sardet::Annotation out_ann = ann;
                out_ann.annotation_id = next_ann_id++;
                out_ann.image_id = pimg.id;
                patches_gt.annotations.push_back(out_ann);
            }
        }
        sardet::save_gt(patches_gt, fs::path(args.out_dir) / "patches_gt.json");
    }

    write_json(manifest, fs::path(args.out_dir) / "manifest.json");
    info(opts, "wrote " + std::to_string(manifest.size()) + " patches to " + args.out_dir);
}

// ------------------------------------------------------------------ split --

struct SplitArgs {
    std::string gt;
    double train_fraction = 0.85;
    std::uint64_t seed = 0;
    std::string out_train;
    std::string out_val;
};

void run_split(const SplitArgs& args, const GlobalOpts& opts) {
    const auto gt = sardet::load_gt(args.gt);
    sardet::SplitSpec spec;
    spec.train_fraction = args.train_fraction;
    spec.seed = args.seed;
    const auto [train, val] = sardet::split(gt, spec);
    sardet::save_gt(train, args.out_train);
    sardet::save_gt(val, args.out_val);
    info(opts, "split " + std::to_string(gt.images.size()) + " images into " +
                   std::to_string(train.images.size()) + " train / " +
                   std::to_string(val.images.size()) + " val");
}

// ------------------------------------------------------------------- eval --

struct EvalArgs {
    std::string gt;
    std::string pred;
    std::string json_out;
};

void run_eval(const EvalArgs& args, const GlobalOpts& opts) {
    const auto gt = sardet::load_gt(args.gt);
    const auto preds = sardet::load_predictions(args.pred, gt);
    const auto report = sardet::evaluate(gt, preds);
    for (int category : report.warning_categories) {
        info(opts, "warning: category " + std::to_string(category) +
                       " has predictions but no ground truth");
    }
    std::cout << "ap_50_95 " << format_metric(report.ap_50_95) << "\n"
              << "ap_50 " << format_metric(report.ap_50) << "\n"
              << "ap_75 " << format_metric(report.ap_75) << "\n"
              << "ar_50_95 " << format_metric(report.ar_50_95) << "\n";
    if (!args.json_out.empty()) {
        write_json(report_to_json(report), args.json_out);
    }
}

// ------------------------------------------------------------------- fuse --

struct FuseArgs {
    std::string gt;
    std::vector<std::string> preds;
    std::string weights;
    double iou_thr = 0.55;
    double skip_thr = 0.0;
    std::string out;
};

std::vector<sardet::PredictionSet> load_model_sets(const std::vector<std::string>& paths,
                                                   const sardet::DatasetGT& gt) {
    std::vector<sardet::PredictionSet> sets;
    sets.reserve(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) {
        sets.push_back(sardet::load_predictions(paths[i], gt, static_cast<int>(i)));
    }
    return sets;
}

void run_fuse(const FuseArgs& args, const GlobalOpts& opts) {
    const auto gt = sardet::load_gt(args.gt);
    const auto sets = load_model_sets(args.preds, gt);
    sardet::EnsembleConfig config;
    config.weights = args.weights.empty()
                         ? std::vector<double>(sets.size(), 1.0)
                         : parse_double_list(args.weights, "--weights");
    config.iou_threshold = args.iou_thr;
    config.skip_threshold = args.skip_thr;
    if (config.weights.size() != sets.size()) {
        throw sardet::ValidationError("fuse: " + std::to_string(config.weights.size()) +
                                      " weights for " + std::to_string(sets.size()) +
                                      " prediction files");
    }
    const auto fused = sardet::fuse_dataset(sets, config);
    sardet::save_predictions(fused, gt, args.out);
    info(opts, "fused " + std::to_string(sets.size()) + " models into " + args.out + " (" +
                   std::to_string(fused.detections.size()) + " detections)");
}

// ------------------------------------------------------------------- tune --

struct TuneArgs {
    std::string gt;
    std::vector<std::string> preds;
    int trials = 100;
    std::uint64_t seed = 0;
    std::string out;
    std::string weight_range = "0.01,2.0";
    std::string iou_range = "0.30,0.80";
    std::string skip_range = "0.00,0.40";
};

void run_tune(const TuneArgs& args, const GlobalOpts& opts) {
    const auto gt = sardet::load_gt(args.gt);
    const auto sets = load_model_sets(args.preds, gt);
    sardet::SearchSpace space = sardet::SearchSpace::defaults(sets.size());
    const auto wr = parse_pair(args.weight_range, "--weight-range");
    space.weight_ranges.assign(sets.size(), sardet::Interval{wr.first, wr.second});
    const auto ir = parse_pair(args.iou_range, "--iou-range");
    space.iou_range = {ir.first, ir.second};
    const auto sr = parse_pair(args.skip_range, "--skip-range");
    space.skip_range = {sr.first, sr.second};

    const auto study = sardet::tune(gt, sets, space, args.trials, args.seed, opts.threads);
    write_json(study_to_json(study), args.out);
    info(opts, "best objective " + format_metric(study.best.objective_value) + " at trial " +
                   std::to_string(study.best.index) + "; report in " + args.out);
}

// ------------------------------------------------------------------ sweep --

struct SweepArgs {
    std::string gt;
    std::string pred_dir;
    std::string out_csv;
};

void run_sweep(const SweepArgs& args, const GlobalOpts& opts) {
    const auto gt = sardet::load_gt(args.gt);
    std::vector<std::pair<std::string, fs::path>> checkpoints;
    {
        std::error_code ec;
        fs::directory_iterator it(args.pred_dir, ec);
        if (ec) {
            throw sardet::IoError("cannot read directory " + args.pred_dir + ": " +
                                  ec.message());
        }
        for (const auto& entry : it) {
            if (entry.is_regular_file() && entry.path().extension() == ".json") {
                checkpoints.emplace_back(entry.path().stem().string(), entry.path());
            }
        }
    }
    std::sort(checkpoints.begin(), checkpoints.end(),
              [](const auto& a, const auto& b) { return sardet::natural_less(a.first, b.first); });
    if (checkpoints.empty()) {
        throw sardet::ValidationError("sweep: no .json prediction files in " + args.pred_dir);
    }

    const auto result = sardet::sweep(gt, checkpoints, opts.threads);

    std::ofstream csv(args.out_csv, std::ios::binary);
    if (!csv) {
        throw sardet::IoError("cannot open " + args.out_csv + " for writing");
    }
    csv << "label,ap_50_95,ap_50,ap_75,ar_50_95\n";
    for (const auto& entry : result.curve) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f", entry.report.ap_50_95,
                      entry.report.ap_50, entry.report.ap_75, entry.report.ar_50_95);
        csv << entry.label << "," << buf << "\n";
    }
    if (!csv) {
        throw sardet::IoError("write failure on " + args.out_csv);
    }
    std::cout << "best " << result.best_checkpoint << "\n";
    info(opts, "swept " + std::to_string(result.curve.size()) + " checkpoints into " +
                   args.out_csv);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SAR/optical detection dataset tooling: composites, patches, "
                 "COCO evaluation, box fusion, ensemble tuning, checkpoint sweeps"};
    app.require_subcommand(1);

    GlobalOpts opts;
    app.add_option("--threads", opts.threads, "Worker threads for tune/sweep")
        ->check(CLI::PositiveNumber);
    app.add_flag("-q,--quiet", opts.quiet, "Suppress progress messages");
    app.add_flag("-v,--verbose", opts.verbose, "Verbose progress messages");

    auto* composite = app.add_subcommand("composite", "Build an RGB composite from band rasters");
    composite->require_subcommand(1);
    CompositeS1Args s1_args;
    auto* s1 = composite->add_subcommand("s1", "SAR composite: R=|VH| G=|VV| B=|VH|/|VV|");
    s1->add_option("--vh", s1_args.vh, "VH band raster (expects <file>.json sidecar)")->required();
    s1->add_option("--vv", s1_args.vv, "VV band raster")->required();
    s1->add_option("--out", s1_args.out, "Output PNG")->required();
    s1->add_option("--clip", s1_args.clip, "Percentile clip LO,HI (default 2,98)");

    CompositeS2Args s2_args;
    auto* s2 = composite->add_subcommand("s2", "True color composite from B04/B03/B02");
    s2->add_option("--b04", s2_args.b04, "B04 (red) band raster")->required();
    s2->add_option("--b03", s2_args.b03, "B03 (green) band raster")->required();
    s2->add_option("--b02", s2_args.b02, "B02 (blue) band raster")->required();
    s2->add_option("--out", s2_args.out, "Output PNG")->required();
    s2->add_option("--scale", s2_args.scale, "Reflectance scale (default 10000)");

    CropArgs crop_args;
    auto* crop = app.add_subcommand("crop", "Cut an image into square patches");
    crop->add_option("--in", crop_args.in, "Input PNG")->required();
    crop->add_option("--size", crop_args.size, "Patch side in pixels")->required();
    crop->add_option("--stride", crop_args.stride, "Grid stride (default = size)");
    crop->add_option("--gt", crop_args.gt, "COCO ground truth; keeps only patches with boxes");
    crop->add_option("--min-visibility", crop_args.min_visibility,
                     "Minimum clipped/original box area ratio (default 0.5)");
    crop->add_option("--exclude", crop_args.exclude, "Patch origin X,Y to skip (repeatable)");
    crop->add_option("--out", crop_args.out_dir, "Output directory")->required();

    SplitArgs split_args;
    auto* split_cmd = app.add_subcommand("split", "Deterministic train/validation split");
    split_cmd->add_option("--gt", split_args.gt, "COCO ground truth")->required();
    split_cmd->add_option("--train-fraction", split_args.train_fraction,
                          "Train fraction (default 0.85)");
    split_cmd->add_option("--seed", split_args.seed, "Shuffle seed (default 0)");
    split_cmd->add_option("--out-train", split_args.out_train, "Train output file")->required();
    split_cmd->add_option("--out-val", split_args.out_val, "Validation output file")->required();

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "COCO-style AP/AR evaluation");
    eval_cmd->add_option("--gt", eval_args.gt, "COCO ground truth")->required();
    eval_cmd->add_option("--pred", eval_args.pred, "COCO results file")->required();
    eval_cmd->add_option("--json-out", eval_args.json_out, "Machine-readable report");

    FuseArgs fuse_args;
    auto* fuse_cmd = app.add_subcommand("fuse", "Weighted Boxes Fusion of model outputs");
    fuse_cmd->add_option("--gt", fuse_args.gt, "COCO ground truth (for image dimensions)")
        ->required();
    fuse_cmd->add_option("--pred", fuse_args.preds, "COCO results files, one per model")
        ->required();
    fuse_cmd->add_option("--weights", fuse_args.weights,
                         "Comma-separated model weights (default: uniform)");
    fuse_cmd->add_option("--iou-thr", fuse_args.iou_thr, "Cluster IoU threshold (default 0.55)");
    fuse_cmd->add_option("--skip-thr", fuse_args.skip_thr,
                         "Minimum raw confidence (default 0)");
    fuse_cmd->add_option("--out", fuse_args.out, "Fused COCO results file")->required();

    TuneArgs tune_args;
    auto* tune_cmd = app.add_subcommand("tune", "Search fusion parameters for max AP+AR");
    tune_cmd->add_option("--gt", tune_args.gt, "COCO ground truth")->required();
    tune_cmd->add_option("--pred", tune_args.preds, "COCO results files, one per model")
        ->required();
    tune_cmd->add_option("--trials", tune_args.trials, "Number of trials (default 100)");
    tune_cmd->add_option("--seed", tune_args.seed, "Sampler seed (default 0)");
    tune_cmd->add_option("--weight-range", tune_args.weight_range,
                         "Weight interval LO,HI (default 0.01,2.0)");
    tune_cmd->add_option("--iou-range", tune_args.iou_range,
                         "IoU threshold interval (default 0.30,0.80)");
    tune_cmd->add_option("--skip-range", tune_args.skip_range,
                         "Skip threshold interval (default 0.00,0.40)");
    tune_cmd->add_option("--out", tune_args.out, "Study report JSON")->required();

    SweepArgs sweep_args;
    auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate every checkpoint's predictions");
    sweep_cmd->add_option("--gt", sweep_args.gt, "COCO ground truth")->required();
    sweep_cmd->add_option("--pred-dir", sweep_args.pred_dir,
                          "Directory of <label>.json results files")
        ->required();
    sweep_cmd->add_option("--out-csv", sweep_args.out_csv, "Per-checkpoint metric CSV")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (s1->parsed()) {
            run_composite_s1(s1_args, opts);
        } else if (s2->parsed()) {
            run_composite_s2(s2_args, opts);
        } else if (crop->parsed()) {
            run_crop(crop_args, opts);
        } else if (split_cmd->parsed()) {
            run_split(split_args, opts);
        } else if (eval_cmd->parsed()) {
            run_eval(eval_args, opts);
        } else if (fuse_cmd->parsed()) {
            run_fuse(fuse_args, opts);
        } else if (tune_cmd->parsed()) {
            run_tune(tune_args, opts);
        } else if (sweep_cmd->parsed()) {
            run_sweep(sweep_args, opts);
        }
    } catch (const sardet::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const sardet::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}
