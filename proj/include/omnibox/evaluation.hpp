#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "omnibox/augment.hpp"
#include "omnibox/geometry.hpp"

namespace omnibox {

struct Detection {
  int64_t image_id = 0;
  RotatedBox box;  // pixels
  double score = 0.0;
};

struct GroundTruthBox {
  int64_t image_id = 0;
  RotatedBox box;  // pixels
};

enum class Interpolation {
  kPoints101,  // COCO: precision envelope sampled at recall 0, 0.01, ..., 1
  kAllPoints,  // area under the precision envelope
};

struct EvalOptions {
  Interpolation interpolation = Interpolation::kPoints101;
};

// Area strata (rotated-box area, px^2): small < 64^2 <= medium < 96^2 <= large.
inline constexpr double kSmallAreaMax = 64.0 * 64.0;
inline constexpr double kMediumAreaMax = 96.0 * 96.0;

// Greedy matching by descending score (ties: larger best IoU first), each
// ground truth matched at most once, rotated IoU >= threshold. Absent when
// there is no ground truth.
std::optional<double> ApAtIou(const std::vector<Detection>& dets,
                              const std::vector<GroundTruthBox>& gts,
                              double iou_threshold, const EvalOptions& options = {});

// {0.50, 0.55, ..., 0.95}
std::vector<double> CocoThresholds();

struct BinStat {
  double lo = 0.0;  // normalized distance or degrees
  double hi = 0.0;
  std::optional<double> mean;  // AP50 averaged over rotation intervals
  double std_error = 0.0;
  size_t intervals = 0;  // intervals where the bin had ground truth
  size_t gt_count = 0;   // ground truths in the bin at zero rotation
};

struct APReport {
  std::optional<double> ap;
  std::optional<double> ap50;
  std::optional<double> ap75;
  std::optional<double> ap_small;
  std::optional<double> ap_medium;
  std::optional<double> ap_large;
  std::vector<std::optional<double>> per_threshold;  // aligned with CocoThresholds()
  std::vector<BinStat> distance_bins;
  std::vector<BinStat> angle_bins;
};

APReport CocoAp(const std::vector<Detection>& dets,
                const std::vector<GroundTruthBox>& gts,
                const EvalOptions& options = {});

struct StrataOptions {
  bool distance = true;
  bool angle = true;
  int distance_bins = 5;
  double angle_bin_deg = 15.0;
  // Dataset copies rotated about each image center at this step (degrees);
  // 0 evaluates the unrotated data only.
  double rotate_interval_deg = 5.0;
};

// AP50 per radial-distance bin (center distance over half the shorter image
// side, clamped into the last bin) and per polar-angle bin of the box center,
// as mean and standard error over rotated copies. Ground truths outside a bin
// are ignored, as are unmatched detections whose centers fall outside it.
// Throws InvalidInput when an image size is missing or zero.
void StratifiedAp50(const std::vector<Detection>& dets,
                    const std::vector<GroundTruthBox>& gts,
                    const std::map<int64_t, ImageSize>& image_sizes,
                    const StrataOptions& strata, APReport* report,
                    const EvalOptions& options = {});

}  // namespace omnibox
