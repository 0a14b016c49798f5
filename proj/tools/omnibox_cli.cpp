// omnibox command-line tool. Machine-readable output (JSON) goes to stdout;
// logs and errors go to stderr.
//
// Exit codes: 0 success, 1 invalid input or format error, 2 I/O error,
// 3 partial augmentation, 4 internal error.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "omnibox/omnibox.h"

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

int ExitCodeFor(obx_status status) {
  switch (status) {
    case OBX_OK: return 0;
    case OBX_ERR_INVALID_ARGUMENT:
    case OBX_ERR_FORMAT: return 1;
    case OBX_ERR_IO: return 2;
    case OBX_ERR_PARTIAL: return 3;
    case OBX_ERR_INTERNAL: return 4;
  }
  return 4;
}

// Thrown to unwind out of a subcommand with the status already reported.
struct Failure {
  obx_status status;
};

void Check(obx_status status, const char* what) {
  if (status == OBX_OK) return;
  std::cerr << "omnibox: " << what << ": " << obx_last_error() << "\n";
  throw Failure{status};
}

// Owns a string returned by the C API.
class CString {
 public:
  CString() = default;
  ~CString() { obx_string_free(ptr_); }
  CString(const CString&) = delete;
  CString& operator=(const CString&) = delete;
  char** out() { return &ptr_; }
  const char* get() const { return ptr_ ? ptr_ : ""; }

 private:
  char* ptr_ = nullptr;
};

template <typename T, void (*Free)(T*)>
class Handle {
 public:
  Handle() = default;
  ~Handle() { Free(ptr_); }
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  T** out() { return &ptr_; }
  const T* get() const { return ptr_; }

 private:
  T* ptr_ = nullptr;
};

using Coco = Handle<obx_coco, obx_coco_free>;
using Dataset = Handle<obx_dataset, obx_dataset_free>;

void LoadDataset(const std::string& path, const std::string& format, Dataset* out) {
  Check(obx_dataset_load(path.c_str(), format.c_str(), out->out()),
        ("cannot load " + path).c_str());
}

// Loads annotations and echoes ingestion warnings and record errors to stderr.
void LoadCocoLogged(const std::string& path, const std::string& category, Coco* out) {
  Check(obx_coco_load(path.c_str(), category.c_str(), out->out()), "cannot load annotations");
  CString report;
  Check(obx_coco_report_json(out->get(), report.out()), "cannot read ingestion report");
  const auto ingest = nlohmann::json::parse(report.get())["ingest"];
  for (const auto& w : ingest["warnings"]) {
    std::cerr << "omnibox: warning: " << w.get<std::string>() << "\n";
  }
  for (const auto& e : ingest["record_errors"]) {
    std::cerr << "omnibox: skipped: " << e.get<std::string>() << "\n";
  }
}

struct GenBoxesArgs {
  std::string coco;
  std::string out;
  std::string category = "person";
  int workers = 0;
};

int RunGenBoxes(const GenBoxesArgs& a) {
  Coco coco;
  LoadCocoLogged(a.coco, a.category, &coco);
  Dataset dataset;
  CString report;
  Check(obx_coco_generate(coco.get(), a.workers, dataset.out(), report.out()),
        "box generation failed");
  Check(obx_dataset_save(dataset.get(), a.out.c_str()), "cannot write output");
  std::cerr << "omnibox: wrote " << obx_dataset_box_count(dataset.get()) << " boxes for "
            << obx_dataset_image_count(dataset.get()) << " images to " << a.out << "\n";
  std::cout << report.get();
  return 0;
}

struct AugmentArgs {
  std::string coco;
  std::string dataset;
  std::string format = "internal-json";
  std::string category = "person";
  std::string images;
  std::string out;
  int workers = 0;
  uint64_t seed = 0;
  int copies = 1;
  bool no_rotate = false;
  std::vector<double> rotation_deg;
  std::vector<double> f_range;
  double qc_jitter = 0.0;
  double fisheye_probability = 0.0;
  std::vector<int> out_size;
  double min_visibility = 0.0;
};

int RunAugment(const AugmentArgs& a, const obx_augment_config& config) {
  CString report;
  obx_status status;
  if (!a.coco.empty()) {
    Coco coco;
    LoadCocoLogged(a.coco, a.category, &coco);
    status = obx_augment_coco(coco.get(), a.images.c_str(), a.out.c_str(), &config,
                              a.workers, report.out());
  } else {
    Dataset dataset;
    LoadDataset(a.dataset, a.format, &dataset);
    status = obx_augment_dataset(dataset.get(), a.images.c_str(), a.out.c_str(),
                                 &config, a.workers, report.out());
  }
  std::cout << report.get();
  if (status == OBX_ERR_PARTIAL) {
    std::cerr << "omnibox: augment finished with failures: " << obx_last_error() << "\n";
    return ExitCodeFor(status);
  }
  Check(status, "augmentation failed");
  return 0;
}

struct PairArgs {
  std::string gt;
  std::string pred;
  std::string gt_format = "internal-json";
  std::string pred_format = "internal-json";
};

int RunMatchLoss(const PairArgs& a, const obx_loss_weights& weights) {
  Dataset gt, pred;
  LoadDataset(a.gt, a.gt_format, &gt);
  LoadDataset(a.pred, a.pred_format, &pred);
  CString json;
  Check(obx_match_loss(gt.get(), pred.get(), &weights, json.out()), "match-loss failed");
  std::cout << json.get();
  return 0;
}

int RunEvaluate(const PairArgs& a, const obx_eval_options& options) {
  Dataset gt, pred;
  LoadDataset(a.gt, a.gt_format, &gt);
  LoadDataset(a.pred, a.pred_format, &pred);
  CString json;
  Check(obx_evaluate(gt.get(), pred.get(), &options, json.out()), "evaluation failed");
  std::cout << json.get();
  return 0;
}

struct StatsArgs {
  std::string coco;
  std::string category = "person";
  std::string dataset;
  std::string format = "internal-json";
};

int RunStats(const StatsArgs& a) {
  CString json;
  if (!a.coco.empty()) {
    Coco coco;
    LoadCocoLogged(a.coco, a.category, &coco);
    Check(obx_coco_report_json(coco.get(), json.out()), "stats failed");
  } else {
    Dataset dataset;
    LoadDataset(a.dataset, a.format, &dataset);
    Check(obx_dataset_stats_json(dataset.get(), json.out()), "stats failed");
  }
  std::cout << json.get();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rotated-box dataset tooling for omnidirectional pedestrian detection"};
  app.set_version_flag("--version", std::string(obx_version()));
  app.set_config("--config", "", "Key = value file mirroring the flags (flags win)");
  app.require_subcommand(1);
  const std::vector<std::string> formats = {"internal-json", "cepdof-json"};

  // gen-boxes
  GenBoxesArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-boxes", "Segmentation -> rotated boxes");
  gen_cmd->add_option("--coco", gen.coco, "COCO annotation JSON")->required();
  gen_cmd->add_option("--out", gen.out, "Output internal-json file")->required();
  gen_cmd->add_option("--category", gen.category, "Category name or id")
      ->capture_default_str();
  gen_cmd->add_option("--workers", gen.workers, "Worker threads (0: all cores)");

  // augment
  AugmentArgs aug;
  obx_augment_config config;
  obx_augment_config_init(&config);
  aug.seed = config.seed;
  aug.copies = config.copies;
  aug.rotation_deg = {config.rotation_min / kDegToRad, config.rotation_max / kDegToRad};
  aug.f_range = {config.f_min, config.f_max};
  aug.qc_jitter = config.qc_jitter;
  aug.fisheye_probability = config.fisheye_probability;
  aug.min_visibility = config.min_visibility;
  auto* aug_cmd = app.add_subcommand("augment", "Rotation + pseudo-fisheye augmentation");
  auto* aug_src = aug_cmd->add_option_group("source")->require_option(1);
  aug_src->add_option("--coco", aug.coco, "COCO annotation JSON");
  aug_src->add_option("--dataset", aug.dataset, "Rotated-box dataset");
  aug_cmd->add_option("--format", aug.format, "Format of --dataset")
      ->check(CLI::IsMember(formats))
      ->capture_default_str();
  aug_cmd->add_option("--category", aug.category, "Category for --coco")
      ->capture_default_str();
  aug_cmd->add_option("--images", aug.images, "Source image directory")->required();
  aug_cmd->add_option("--out", aug.out, "Output directory")->required();
  aug_cmd->add_option("--workers", aug.workers, "Worker threads (0: all cores)");
  aug_cmd->add_option("--seed", aug.seed, "RNG seed")->capture_default_str();
  aug_cmd->add_option("--copies", aug.copies, "Augmented copies per image")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  aug_cmd->add_flag("--no-rotate", aug.no_rotate, "Disable random rotation");
  aug_cmd->add_option("--rotation-range", aug.rotation_deg, "Rotation range, degrees")
      ->expected(2);
  aug_cmd->add_option("--f-range", aug.f_range,
                      "Focal range as multiples of the half-diagonal")
      ->expected(2);
  aug_cmd->add_option("--qc-jitter", aug.qc_jitter, "Optical-axis jitter fraction")
      ->capture_default_str();
  aug_cmd->add_option("--fisheye-prob", aug.fisheye_probability,
                      "Probability of the fisheye warp")
      ->capture_default_str();
  aug_cmd->add_option("--out-size", aug.out_size, "Output canvas W H")->expected(2);
  aug_cmd->add_option("--min-visibility", aug.min_visibility,
                      "Drop boxes less visible than this")
      ->capture_default_str();

  // match-loss
  PairArgs loss_args;
  obx_loss_weights weights;
  obx_loss_weights_init(&weights);
  auto* loss_cmd = app.add_subcommand("match-loss", "Hungarian matching + loss breakdown");
  loss_cmd->add_option("--gt", loss_args.gt, "Ground-truth dataset")->required();
  loss_cmd->add_option("--pred", loss_args.pred, "Prediction dataset")->required();
  loss_cmd->add_option("--gt-format", loss_args.gt_format)->check(CLI::IsMember(formats));
  loss_cmd->add_option("--pred-format", loss_args.pred_format)
      ->check(CLI::IsMember(formats));
  loss_cmd->add_option("--lambda-c", weights.lambda_c)->capture_default_str();
  loss_cmd->add_option("--lambda-b", weights.lambda_b)->capture_default_str();
  loss_cmd->add_option("--lambda-u", weights.lambda_u)->capture_default_str();
  loss_cmd->add_option("--lambda-a", weights.lambda_a)->capture_default_str();
  loss_cmd->add_option("--focal-alpha", weights.focal_alpha)->capture_default_str();
  loss_cmd->add_option("--focal-gamma", weights.focal_gamma)->capture_default_str();

  // evaluate
  PairArgs eval_args;
  obx_eval_options eval;
  obx_eval_options_init(&eval);
  std::vector<std::string> strata;
  std::string interpolation = "101";
  std::vector<int> image_size;
  auto* eval_cmd = app.add_subcommand("evaluate", "Rotated-box AP metrics");
  eval_cmd->add_option("--gt", eval_args.gt, "Ground-truth dataset")->required();
  eval_cmd->add_option("--pred", eval_args.pred, "Prediction dataset")->required();
  eval_cmd->add_option("--gt-format", eval_args.gt_format)->check(CLI::IsMember(formats));
  eval_cmd->add_option("--pred-format", eval_args.pred_format)
      ->check(CLI::IsMember(formats));
  eval_cmd->add_option("--strata", strata, "distance and/or angle")
      ->check(CLI::IsMember({"distance", "angle"}));
  eval_cmd->add_option("--rotate-interval", eval.rotate_interval_deg,
                       "Rotation step for stratified AP50, degrees (0: none)")
      ->capture_default_str();
  eval_cmd->add_option("--distance-bins", eval.distance_bins)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  eval_cmd->add_option("--angle-bin", eval.angle_bin_deg, "Polar bin width, degrees")
      ->capture_default_str();
  eval_cmd->add_option("--interpolation", interpolation, "101 or all")
      ->check(CLI::IsMember({"101", "all"}))
      ->capture_default_str();
  eval_cmd->add_option("--image-size", image_size,
                       "W H for images whose size the ground truth lacks")
      ->expected(2);

  // stats
  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "Dataset statistics");
  auto* stats_src = stats_cmd->add_option_group("source")->require_option(1);
  stats_src->add_option("--coco", stats.coco, "COCO annotation JSON");
  stats_src->add_option("--dataset", stats.dataset, "Rotated-box dataset");
  stats_cmd->add_option("--category", stats.category)->capture_default_str();
  stats_cmd->add_option("--format", stats.format)->check(CLI::IsMember(formats));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*gen_cmd) return RunGenBoxes(gen);
    if (*aug_cmd) {
      config.rotate = aug.no_rotate ? 0 : 1;
      config.rotation_min = aug.rotation_deg[0] * kDegToRad;
      config.rotation_max = aug.rotation_deg[1] * kDegToRad;
      config.f_min = aug.f_range[0];
      config.f_max = aug.f_range[1];
      config.qc_jitter = aug.qc_jitter;
      config.fisheye_probability = aug.fisheye_probability;
      config.seed = aug.seed;
      config.copies = aug.copies;
      config.min_visibility = aug.min_visibility;
      if (aug.out_size.size() == 2) {
        config.out_w = aug.out_size[0];
        config.out_h = aug.out_size[1];
      }
      return RunAugment(aug, config);
    }
    if (*loss_cmd) return RunMatchLoss(loss_args, weights);
    if (*eval_cmd) {
      for (const auto& s : strata) {
        eval.strata |= s == "distance" ? OBX_STRATA_DISTANCE : OBX_STRATA_ANGLE;
      }
      eval.interpolation_points = interpolation == "all" ? 0 : 101;
      if (image_size.size() == 2) {
        eval.default_width = image_size[0];
        eval.default_height = image_size[1];
      }
      return RunEvaluate(eval_args, eval);
    }
    if (*stats_cmd) return RunStats(stats);
  } catch (const Failure& f) {
    return ExitCodeFor(f.status);
  }
  return 1;
}
