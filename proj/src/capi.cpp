#include "omnibox/omnibox.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <map>
#include <memory>
#include <new>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "omnibox/annotations.hpp"
#include "omnibox/augment.hpp"
#include "omnibox/boxgen.hpp"
#include "omnibox/error.hpp"
#include "omnibox/evaluation.hpp"
#include "omnibox/matching_loss.hpp"

struct obx_coco {
  omnibox::CocoDataset data;
};

struct obx_dataset {
  std::vector<omnibox::RotatedRecord> records;
};

namespace {

using Json = nlohmann::ordered_json;
using omnibox::ErrorCode;

thread_local std::string g_last_error;

obx_status StatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return OBX_ERR_INVALID_ARGUMENT;
    case ErrorCode::kFormat: return OBX_ERR_FORMAT;
    case ErrorCode::kIo: return OBX_ERR_IO;
  }
  return OBX_ERR_INTERNAL;
}

// Runs fn, translating exceptions into a status and the thread's last error.
template <typename Fn>
obx_status Guard(Fn&& fn) {
  g_last_error.clear();
  try {
    return fn();
  } catch (const omnibox::Error& e) {
    g_last_error = e.what();
    return StatusFor(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return OBX_ERR_INTERNAL;
}

void Require(bool condition, const char* what) {
  if (!condition) throw omnibox::InvalidInput(what);
}

char* CopyString(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void EmitJson(const Json& j, char** out) {
  if (out != nullptr) *out = CopyString(j.dump(2) + "\n");
}

Json Optional(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

Json StringList(const std::vector<std::string>& items) {
  Json out = Json::array();
  for (const auto& s : items) out.push_back(s);
  return out;
}

Json IngestJson(const omnibox::IngestReport& r) {
  Json j;
  j["category_id"] = r.category_id;
  j["images_in_file"] = r.images_in_file;
  j["images_selected"] = r.images_selected;
  j["instances"] = r.instances;
  j["crowd_instances"] = r.crowd_instances;
  j["rle_instances"] = r.rle_instances;
  j["dropped_segments"] = r.dropped_segments;
  j["clamped_vertices"] = r.clamped_vertices;
  j["record_errors"] = StringList(r.record_errors);
  j["warnings"] = StringList(r.warnings);
  return j;
}

Json BoxgenJson(const omnibox::BoxgenReport& r) {
  Json j;
  j["images"] = r.images;
  j["instances"] = r.instances;
  j["boxes"] = r.boxes;
  j["excluded"] = r.excluded;
  j["degenerate"] = r.degenerate;
  j["skipped"] = r.skipped;
  j["low_visibility"] = r.low_visibility;
  j["messages"] = StringList(r.messages);
  return j;
}

Json AugmentJson(const omnibox::AugmentRunReport& r) {
  Json j;
  j["images_in"] = r.images_in;
  j["images_written"] = r.images_written;
  j["boxes"] = r.boxes;
  j["degenerate"] = r.degenerate;
  j["low_visibility"] = r.low_visibility;
  j["failures"] = StringList(r.failures);
  return j;
}

Json BinsJson(const std::vector<omnibox::BinStat>& bins) {
  Json out = Json::array();
  for (const auto& b : bins) {
    Json j;
    j["lo"] = b.lo;
    j["hi"] = b.hi;
    j["ap50_mean"] = Optional(b.mean);
    j["ap50_std_error"] = b.mean ? Json(b.std_error) : Json(nullptr);
    j["intervals"] = b.intervals;
    j["gt_count"] = b.gt_count;
    out.push_back(j);
  }
  return out;
}

omnibox::RotatedBox ToBox(const obx_rotated_box& b) {
  return omnibox::RotatedBox{b.cx, b.cy, b.w, b.h, b.theta};
}

obx_rotated_box FromBox(const omnibox::RotatedBox& b) {
  return obx_rotated_box{b.cx, b.cy, b.w, b.h, b.theta};
}

omnibox::AugmentConfig ToConfig(const obx_augment_config& c) {
  omnibox::AugmentConfig out;
  out.rotate = c.rotate != 0;
  out.rotation_min = c.rotation_min;
  out.rotation_max = c.rotation_max;
  out.fisheye_probability = c.fisheye_probability;
  out.f_min = c.f_min;
  out.f_max = c.f_max;
  out.qc_jitter = c.qc_jitter;
  out.out_w = c.out_w;
  out.out_h = c.out_h;
  out.seed = c.seed;
  out.copies = c.copies;
  out.min_visibility = c.min_visibility;
  omnibox::ValidateConfig(out);
  return out;
}

omnibox::FisheyeParams ToParams(const obx_fisheye_params& p) {
  return omnibox::FisheyeParams{p.f, {p.qc_x, p.qc_y}, p.out_w, p.out_h};
}

void CheckParams(const obx_fisheye_params& p) {
  if (!(p.f > 0.0) || !std::isfinite(p.f) || !std::isfinite(p.qc_x) ||
      !std::isfinite(p.qc_y)) {
    throw omnibox::InvalidInput("fisheye: f must be positive and qc finite");
  }
  if (p.out_w <= 0 || p.out_h <= 0) {
    throw omnibox::InvalidInput("fisheye: output size must be positive");
  }
}

void ToWeights(const obx_loss_weights& w, omnibox::LossWeights* weights,
               omnibox::FocalParams* focal) {
  *weights = {w.lambda_c, w.lambda_b, w.lambda_u, w.lambda_a};
  omnibox::ValidateWeights(*weights);
  if (!(w.focal_alpha >= 0.0 && w.focal_alpha <= 1.0) ||
      !(w.focal_gamma >= 0.0) || !std::isfinite(w.focal_gamma)) {
    throw omnibox::InvalidInput("focal alpha must be in [0, 1] and gamma >= 0");
  }
  *focal = {w.focal_alpha, w.focal_gamma};
}

Json WeightsJson(const omnibox::LossWeights& w, const omnibox::FocalParams& f) {
  Json j;
  j["lambda_c"] = w.lambda_c;
  j["lambda_b"] = w.lambda_b;
  j["lambda_u"] = w.lambda_u;
  j["lambda_a"] = w.lambda_a;
  j["focal_alpha"] = f.alpha;
  j["focal_gamma"] = f.gamma;
  return j;
}

// Lists ids present in one dataset only; empty when the sets agree.
std::string IdSetDifference(const std::vector<omnibox::RotatedRecord>& gt,
                            const std::vector<omnibox::RotatedRecord>& pred) {
  std::set<int64_t> gt_ids, pred_ids;
  for (const auto& r : gt) gt_ids.insert(r.image_id);
  for (const auto& r : pred) pred_ids.insert(r.image_id);
  std::string only_gt, only_pred;
  for (int64_t id : gt_ids) {
    if (!pred_ids.count(id)) only_gt += (only_gt.empty() ? "" : ",") + std::to_string(id);
  }
  for (int64_t id : pred_ids) {
    if (!gt_ids.count(id)) only_pred += (only_pred.empty() ? "" : ",") + std::to_string(id);
  }
  if (only_gt.empty() && only_pred.empty()) return {};
  return "image id sets differ; only in ground truth: [" + only_gt +
         "]; only in predictions: [" + only_pred + "]";
}

Json DatasetStats(const std::vector<omnibox::RotatedRecord>& records) {
  constexpr int kAngleBins = 12;  // 15 degrees each over [-90, 90)
  size_t boxes = 0, with_boxes = 0, scored = 0, degenerate = 0;
  size_t small = 0, medium = 0, large = 0;
  double sum_w = 0.0, sum_h = 0.0, sum_aspect = 0.0;
  size_t aspect_n = 0;
  std::vector<size_t> angle_hist(kAngleBins, 0);
  for (const auto& r : records) {
    if (!r.boxes.empty()) ++with_boxes;
    for (const auto& e : r.boxes) {
      ++boxes;
      if (e.score) ++scored;
      const double area = e.box.area();
      if (area < omnibox::kMinBoxArea) ++degenerate;
      if (area < omnibox::kSmallAreaMax) {
        ++small;
      } else if (area < omnibox::kMediumAreaMax) {
        ++medium;
      } else {
        ++large;
      }
      sum_w += e.box.w;
      sum_h += e.box.h;
      if (e.box.w > 0.0) {
        sum_aspect += e.box.h / e.box.w;
        ++aspect_n;
      }
      const double deg = e.box.theta * 180.0 / omnibox::kPi;
      int bin = static_cast<int>(std::floor((deg + 90.0) / 15.0));
      angle_hist[std::clamp(bin, 0, kAngleBins - 1)]++;
    }
  }
  Json j;
  j["images"] = records.size();
  j["images_with_boxes"] = with_boxes;
  j["boxes"] = boxes;
  j["scored_boxes"] = scored;
  j["degenerate_boxes"] = degenerate;
  j["area_small"] = small;
  j["area_medium"] = medium;
  j["area_large"] = large;
  j["mean_w"] = boxes ? Json(sum_w / boxes) : Json(nullptr);
  j["mean_h"] = boxes ? Json(sum_h / boxes) : Json(nullptr);
  j["mean_aspect_h_over_w"] = aspect_n ? Json(sum_aspect / aspect_n) : Json(nullptr);
  Json hist = Json::array();
  for (int b = 0; b < kAngleBins; ++b) {
    Json bin;
    bin["lo_deg"] = -90 + 15 * b;
    bin["hi_deg"] = -75 + 15 * b;
    bin["count"] = angle_hist[b];
    hist.push_back(bin);
  }
  j["angle_histogram"] = hist;
  return j;
}

omnibox::Interpolation ToInterpolation(int points) {
  if (points == 101) return omnibox::Interpolation::kPoints101;
  if (points == 0) return omnibox::Interpolation::kAllPoints;
  throw omnibox::InvalidInput("interpolation must be 101 or 0 (all-point)");
}

double OrNan(const std::optional<double>& v) {
  return v ? *v : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

extern "C" {

const char* obx_version(void) { return "0.1.0"; }

const char* obx_last_error(void) { return g_last_error.c_str(); }

void obx_string_free(char* s) { std::free(s); }

obx_status obx_coco_load(const char* path, const char* category, obx_coco** out) {
  return Guard([&] {
    Require(path && category && out, "obx_coco_load: null argument");
    *out = nullptr;
    auto handle = std::make_unique<obx_coco>();
    handle->data = omnibox::LoadCoco(path, category);
    *out = handle.release();
    return OBX_OK;
  });
}

obx_status obx_coco_parse(const char* json_text, size_t length,
                          const char* category, obx_coco** out) {
  return Guard([&] {
    Require((json_text || length == 0) && category && out,
            "obx_coco_parse: null argument");
    *out = nullptr;
    auto handle = std::make_unique<obx_coco>();
    handle->data = omnibox::ParseCoco(std::string_view(json_text ? json_text : "", length),
                                      category);
    *out = handle.release();
    return OBX_OK;
  });
}

void obx_coco_free(obx_coco* coco) { delete coco; }

obx_status obx_coco_report_json(const obx_coco* coco, char** json_out) {
  return Guard([&] {
    Require(coco && json_out, "obx_coco_report_json: null argument");
    Json j;
    j["ingest"] = IngestJson(coco->data.report);
    size_t excluded = 0;
    for (const auto& r : coco->data.records) {
      for (const auto& inst : r.instances) excluded += inst.excluded() ? 1 : 0;
    }
    j["excluded_instances"] = excluded;
    EmitJson(j, json_out);
    return OBX_OK;
  });
}

obx_status obx_coco_generate(const obx_coco* coco, int workers, obx_dataset** out,
                             char** report_json) {
  return Guard([&] {
    Require(coco && out, "obx_coco_generate: null argument");
    *out = nullptr;
    omnibox::BoxgenOptions options;
    options.workers = workers;
    omnibox::BoxgenResult result = omnibox::GenerateDataset(coco->data.records, options);
    auto handle = std::make_unique<obx_dataset>();
    handle->records = std::move(result.records);
    if (report_json != nullptr) {
      Json j;
      j["ingest"] = IngestJson(coco->data.report);
      j["boxgen"] = BoxgenJson(result.report);
      EmitJson(j, report_json);
    }
    *out = handle.release();
    return OBX_OK;
  });
}

obx_status obx_dataset_load(const char* path, const char* format, obx_dataset** out) {
  return Guard([&] {
    Require(path && format && out, "obx_dataset_load: null argument");
    *out = nullptr;
    const omnibox::RotatedFormat fmt = omnibox::ParseRotatedFormat(format);
    auto handle = std::make_unique<obx_dataset>();
    handle->records = omnibox::LoadRotatedGt(path, fmt);
    *out = handle.release();
    return OBX_OK;
  });
}

obx_status obx_dataset_parse(const char* json_text, size_t length, const char* format,
                             obx_dataset** out) {
  return Guard([&] {
    Require((json_text || length == 0) && format && out,
            "obx_dataset_parse: null argument");
    *out = nullptr;
    const omnibox::RotatedFormat fmt = omnibox::ParseRotatedFormat(format);
    auto handle = std::make_unique<obx_dataset>();
    handle->records = omnibox::ParseRotatedGt(
        std::string_view(json_text ? json_text : "", length), fmt);
    *out = handle.release();
    return OBX_OK;
  });
}

obx_status obx_dataset_save(const obx_dataset* dataset, const char* path) {
  return Guard([&] {
    Require(dataset && path, "obx_dataset_save: null argument");
    omnibox::SaveRotatedDataset(dataset->records, path);
    return OBX_OK;
  });
}

obx_status obx_dataset_to_json(const obx_dataset* dataset, char** json_out) {
  return Guard([&] {
    Require(dataset && json_out, "obx_dataset_to_json: null argument");
    *json_out = CopyString(omnibox::SerializeRotatedDataset(dataset->records));
    return OBX_OK;
  });
}

size_t obx_dataset_image_count(const obx_dataset* dataset) {
  return dataset ? dataset->records.size() : 0;
}

size_t obx_dataset_box_count(const obx_dataset* dataset) {
  if (dataset == nullptr) return 0;
  size_t n = 0;
  for (const auto& r : dataset->records) n += r.boxes.size();
  return n;
}

obx_status obx_dataset_stats_json(const obx_dataset* dataset, char** json_out) {
  return Guard([&] {
    Require(dataset && json_out, "obx_dataset_stats_json: null argument");
    EmitJson(DatasetStats(dataset->records), json_out);
    return OBX_OK;
  });
}

void obx_dataset_free(obx_dataset* dataset) { delete dataset; }

void obx_augment_config_init(obx_augment_config* config) {
  if (config == nullptr) return;
  const omnibox::AugmentConfig d;
  config->rotate = d.rotate ? 1 : 0;
  config->rotation_min = d.rotation_min;
  config->rotation_max = d.rotation_max;
  config->fisheye_probability = d.fisheye_probability;
  config->f_min = d.f_min;
  config->f_max = d.f_max;
  config->qc_jitter = d.qc_jitter;
  config->out_w = d.out_w;
  config->out_h = d.out_h;
  config->seed = d.seed;
  config->copies = d.copies;
  config->min_visibility = d.min_visibility;
}

static obx_status RunAugment(const std::vector<omnibox::ImageRecord>& records,
                             const char* images_dir, const char* out_dir,
                             const obx_augment_config* config, int workers,
                             char** report_json) {
  Require(images_dir && out_dir && config, "augment: null argument");
  const omnibox::AugmentConfig cfg = ToConfig(*config);
  const omnibox::AugmentRunReport report =
      omnibox::AugmentDataset(records, images_dir, out_dir, cfg, workers);
  EmitJson(AugmentJson(report), report_json);
  if (!report.failures.empty()) {
    g_last_error = std::to_string(report.failures.size()) + " record(s) failed";
    return OBX_ERR_PARTIAL;
  }
  return OBX_OK;
}

obx_status obx_augment_coco(const obx_coco* coco, const char* images_dir,
                            const char* out_dir, const obx_augment_config* config,
                            int workers, char** report_json) {
  return Guard([&] {
    Require(coco != nullptr, "obx_augment_coco: null argument");
    return RunAugment(coco->data.records, images_dir, out_dir, config, workers,
                      report_json);
  });
}

obx_status obx_augment_dataset(const obx_dataset* dataset, const char* images_dir,
                               const char* out_dir, const obx_augment_config* config,
                               int workers, char** report_json) {
  return Guard([&] {
    Require(dataset != nullptr, "obx_augment_dataset: null argument");
    return RunAugment(omnibox::RecordsFromBoxes(dataset->records), images_dir, out_dir,
                      config, workers, report_json);
  });
}

void obx_loss_weights_init(obx_loss_weights* weights) {
  if (weights == nullptr) return;
  const omnibox::LossWeights w;
  const omnibox::FocalParams f;
  *weights = {w.lambda_c, w.lambda_b, w.lambda_u, w.lambda_a, f.alpha, f.gamma};
}

obx_status obx_match_loss(const obx_dataset* gt, const obx_dataset* pred,
                          const obx_loss_weights* weights, char** json_out) {
  return Guard([&] {
    Require(gt && pred && weights && json_out, "obx_match_loss: null argument");
    omnibox::LossWeights w;
    omnibox::FocalParams focal;
    ToWeights(*weights, &w, &focal);
    const std::string diff = IdSetDifference(gt->records, pred->records);
    if (!diff.empty()) throw omnibox::InvalidInput(diff);

    std::map<int64_t, const omnibox::RotatedRecord*> pred_by_id;
    for (const auto& r : pred->records) pred_by_id[r.image_id] = &r;

    omnibox::LossSums total;
    Json images = Json::array();
    for (const auto& g : gt->records) {
      const omnibox::RotatedRecord& p = *pred_by_id.at(g.image_id);
      const int width = g.width > 0 ? g.width : p.width;
      const int height = g.height > 0 ? g.height : p.height;
      if (width <= 0 || height <= 0) {
        throw omnibox::InvalidInput("image " + std::to_string(g.image_id) +
                                    " has no dimensions to normalize boxes");
      }
      if (p.boxes.size() < g.boxes.size()) {
        throw omnibox::InvalidInput(
            "image " + std::to_string(g.image_id) + ": " +
            std::to_string(p.boxes.size()) + " predictions cannot cover " +
            std::to_string(g.boxes.size()) + " ground truths");
      }
      auto normalize = [&](const omnibox::RotatedBox& b) {
        return omnibox::AxisBox{b.cx / width, b.cy / height, b.w / width, b.h / height};
      };
      std::vector<omnibox::GroundTruthEntry> gts;
      for (const auto& e : g.boxes) {
        omnibox::GroundTruthEntry entry;
        entry.class_onehot = {1.0};
        entry.box = normalize(e.box);
        entry.theta = e.box.theta;
        gts.push_back(entry);
      }
      gts.resize(p.boxes.size(), omnibox::GroundTruthEntry::Phi());
      std::vector<omnibox::Prediction> preds;
      for (const auto& e : p.boxes) {
        omnibox::Prediction q;
        q.class_probs = {e.score.value_or(1.0)};
        q.box = normalize(e.box);
        q.a_hat = e.a_hat.value_or((e.box.theta + omnibox::kPi) / (2.0 * omnibox::kPi));
        preds.push_back(q);
      }
      const omnibox::LossSums sums = omnibox::ComputeLossSums(gts, preds, w, focal);
      total.class_loss += sums.class_loss;
      total.box_l1 += sums.box_l1;
      total.giou_loss += sums.giou_loss;
      total.angle_loss += sums.angle_loss;
      total.num_real += sums.num_real;

      Json img;
      img["id"] = g.image_id;
      img["num_real"] = sums.num_real;
      img["num_queries"] = preds.size();
      img["class_loss_sum"] = sums.class_loss;
      img["box_l1_sum"] = sums.box_l1;
      img["giou_loss_sum"] = sums.giou_loss;
      img["angle_loss_sum"] = sums.angle_loss;
      Json assignment = Json::array();
      for (size_t i = 0; i < g.boxes.size(); ++i) assignment.push_back(sums.assignment[i]);
      img["assignment"] = assignment;
      images.push_back(img);
    }
    const omnibox::LossBreakdown out = omnibox::Normalize(total, w);

    Json j;
    j["weights"] = WeightsJson(w, focal);
    j["num_images"] = gt->records.size();
    j["num_real"] = total.num_real;
    j["total"] = out.total;
    j["class_loss"] = out.class_loss;
    j["box_l1"] = out.box_l1;
    j["giou_loss"] = out.giou_loss;
    j["angle_loss"] = out.angle_loss;
    j["images"] = images;
    EmitJson(j, json_out);
    return OBX_OK;
  });
}

void obx_eval_options_init(obx_eval_options* options) {
  if (options == nullptr) return;
  const omnibox::StrataOptions s;
  options->interpolation_points = 101;
  options->strata = 0;
  options->distance_bins = s.distance_bins;
  options->angle_bin_deg = s.angle_bin_deg;
  options->rotate_interval_deg = s.rotate_interval_deg;
  options->default_width = 0;
  options->default_height = 0;
}

obx_status obx_evaluate(const obx_dataset* gt, const obx_dataset* pred,
                        const obx_eval_options* options, char** json_out) {
  return Guard([&] {
    Require(gt && pred && options && json_out, "obx_evaluate: null argument");
    omnibox::EvalOptions eval;
    eval.interpolation = ToInterpolation(options->interpolation_points);

    std::vector<omnibox::GroundTruthBox> gts;
    std::map<int64_t, omnibox::ImageSize> sizes;
    for (const auto& r : gt->records) {
      for (const auto& e : r.boxes) gts.push_back({r.image_id, e.box});
      omnibox::ImageSize size{r.width, r.height};
      if (size.width <= 0 || size.height <= 0) {
        size = {options->default_width, options->default_height};
      }
      sizes[r.image_id] = size;
    }
    std::vector<omnibox::Detection> dets;
    for (const auto& r : pred->records) {
      for (const auto& e : r.boxes) dets.push_back({r.image_id, e.box, e.score.value_or(1.0)});
    }

    omnibox::APReport report = omnibox::CocoAp(dets, gts, eval);
    if (options->strata != 0) {
      omnibox::StrataOptions strata;
      strata.distance = (options->strata & OBX_STRATA_DISTANCE) != 0;
      strata.angle = (options->strata & OBX_STRATA_ANGLE) != 0;
      strata.distance_bins = options->distance_bins;
      strata.angle_bin_deg = options->angle_bin_deg;
      strata.rotate_interval_deg = options->rotate_interval_deg;
      omnibox::StratifiedAp50(dets, gts, sizes, strata, &report, eval);
    }

    Json j;
    j["interpolation"] = options->interpolation_points == 101 ? "101-point" : "all-point";
    j["num_gt"] = gts.size();
    j["num_det"] = dets.size();
    j["ap"] = Optional(report.ap);
    j["ap50"] = Optional(report.ap50);
    j["ap75"] = Optional(report.ap75);
    j["ap_small"] = Optional(report.ap_small);
    j["ap_medium"] = Optional(report.ap_medium);
    j["ap_large"] = Optional(report.ap_large);
    Json per = Json::array();
    const std::vector<double> thresholds = omnibox::CocoThresholds();
    for (size_t k = 0; k < thresholds.size(); ++k) {
      Json t;
      t["iou"] = thresholds[k];
      t["ap"] = Optional(report.per_threshold[k]);
      per.push_back(t);
    }
    j["per_threshold"] = per;
    if (options->strata & OBX_STRATA_DISTANCE) j["distance_bins"] = BinsJson(report.distance_bins);
    if (options->strata & OBX_STRATA_ANGLE) j["angle_bins"] = BinsJson(report.angle_bins);
    EmitJson(j, json_out);
    return OBX_OK;
  });
}

obx_status obx_generate_box(const double* xy, size_t n_vertices, int image_w,
                            int image_h, obx_rotated_box* box,
                            obx_rotated_box* normalized, int* degenerate) {
  return Guard([&] {
    Require(xy && box, "obx_generate_box: null argument");
    Require(image_w > 0 && image_h > 0, "obx_generate_box: image size must be positive");
    std::vector<omnibox::Point2> points(n_vertices);
    for (size_t i = 0; i < n_vertices; ++i) points[i] = {xy[2 * i], xy[2 * i + 1]};
    const omnibox::GeneratedBox g = omnibox::GenerateBoxFromPoints(points, image_w, image_h);
    *box = FromBox(g.box);
    if (normalized != nullptr) *normalized = FromBox(g.normalized);
    if (degenerate != nullptr) *degenerate = g.degenerate ? 1 : 0;
    return OBX_OK;
  });
}

obx_status obx_fisheye_sample(const obx_augment_config* config, int src_w, int src_h,
                              uint64_t stream, obx_fisheye_params* out) {
  return Guard([&] {
    Require(config && out, "obx_fisheye_sample: null argument");
    Require(src_w > 0 && src_h > 0, "obx_fisheye_sample: image size must be positive");
    const omnibox::AugmentConfig cfg = ToConfig(*config);
    omnibox::AugmentRng rng(cfg.seed, stream);
    const omnibox::FisheyeParams p = omnibox::SampleParams(cfg, {src_w, src_h}, rng);
    *out = {p.f, p.qc.x, p.qc.y, p.out_w, p.out_h};
    return OBX_OK;
  });
}

obx_status obx_fisheye_warp(const uint8_t* src, int src_w, int src_h,
                            const obx_fisheye_params* params, uint8_t* dst,
                            uint8_t* mask) {
  return Guard([&] {
    Require(src && params && dst, "obx_fisheye_warp: null argument");
    Require(src_w > 0 && src_h > 0, "obx_fisheye_warp: image size must be positive");
    CheckParams(*params);
    omnibox::ImageBuffer image(src_w, src_h);
    std::memcpy(image.pixels.data(), src, image.pixels.size());
    const omnibox::WarpResult r = omnibox::WarpImage(image, ToParams(*params));
    std::memcpy(dst, r.image.pixels.data(), r.image.pixels.size());
    if (mask != nullptr) std::memcpy(mask, r.mask.data(), r.mask.size());
    return OBX_OK;
  });
}

obx_status obx_fisheye_map_vertices(const double* xy, size_t n_vertices,
                                    const obx_fisheye_params* params, double* out_xy,
                                    size_t* n_out) {
  return Guard([&] {
    Require((xy || n_vertices == 0) && params && (out_xy || n_vertices == 0) && n_out,
            "obx_fisheye_map_vertices: null argument");
    CheckParams(*params);
    std::vector<omnibox::Point2> points(n_vertices);
    for (size_t i = 0; i < n_vertices; ++i) points[i] = {xy[2 * i], xy[2 * i + 1]};
    const omnibox::Polygon mapped = omnibox::MapSegmentVertices(points, ToParams(*params));
    for (size_t i = 0; i < mapped.size(); ++i) {
      out_xy[2 * i] = mapped[i].x;
      out_xy[2 * i + 1] = mapped[i].y;
    }
    *n_out = mapped.size();
    return OBX_OK;
  });
}

obx_status obx_compute_loss(const obx_ground_truth* gts, const obx_prediction* preds,
                            size_t n, const obx_loss_weights* weights,
                            obx_loss_breakdown* out, size_t* assignment) {
  return Guard([&] {
    Require(gts && preds && weights && out, "obx_compute_loss: null argument");
    omnibox::LossWeights w;
    omnibox::FocalParams focal;
    ToWeights(*weights, &w, &focal);
    std::vector<omnibox::GroundTruthEntry> g(n);
    std::vector<omnibox::Prediction> p(n);
    for (size_t i = 0; i < n; ++i) {
      if (gts[i].is_phi) {
        g[i] = omnibox::GroundTruthEntry::Phi();
      } else {
        g[i].class_onehot = {1.0};
        g[i].box = {gts[i].cx, gts[i].cy, gts[i].w, gts[i].h};
        g[i].theta = gts[i].theta;
      }
      p[i].class_probs = {preds[i].prob};
      p[i].box = {preds[i].cx, preds[i].cy, preds[i].w, preds[i].h};
      p[i].a_hat = preds[i].a_hat;
    }
    const omnibox::LossBreakdown r = omnibox::ComputeLoss(g, p, w, focal);
    *out = {r.total, r.class_loss, r.box_l1, r.giou_loss, r.angle_loss};
    if (assignment != nullptr) {
      for (size_t i = 0; i < n; ++i) assignment[i] = r.assignment[i];
    }
    return OBX_OK;
  });
}

obx_status obx_coco_ap(const obx_detection* dets, size_t n_dets, const obx_gt_box* gts,
                       size_t n_gts, int interpolation_points, obx_ap_summary* out) {
  return Guard([&] {
    Require((dets || n_dets == 0) && (gts || n_gts == 0) && out,
            "obx_coco_ap: null argument");
    omnibox::EvalOptions eval;
    eval.interpolation = ToInterpolation(interpolation_points);
    std::vector<omnibox::Detection> d(n_dets);
    for (size_t i = 0; i < n_dets; ++i) {
      d[i] = {dets[i].image_id, omnibox::Canonicalize(ToBox(dets[i].box)), dets[i].score};
    }
    std::vector<omnibox::GroundTruthBox> g(n_gts);
    for (size_t i = 0; i < n_gts; ++i) {
      g[i] = {gts[i].image_id, omnibox::Canonicalize(ToBox(gts[i].box))};
    }
    const omnibox::APReport r = omnibox::CocoAp(d, g, eval);
    *out = {OrNan(r.ap), OrNan(r.ap50), OrNan(r.ap75),
            OrNan(r.ap_small), OrNan(r.ap_medium), OrNan(r.ap_large)};
    return OBX_OK;
  });
}

}  // extern "C"
