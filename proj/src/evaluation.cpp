#include "omnibox/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>

#include "omnibox/error.hpp"

namespace omnibox {
namespace {

double ComputeAp(const std::vector<char>& tp, size_t npos,
                 Interpolation interpolation) {
  const size_t n = tp.size();
  if (n == 0) return 0.0;
  std::vector<double> recall(n), precision(n);
  size_t tp_count = 0;
  for (size_t i = 0; i < n; ++i) {
    tp_count += tp[i] ? 1 : 0;
    recall[i] = static_cast<double>(tp_count) / static_cast<double>(npos);
    precision[i] = static_cast<double>(tp_count) / static_cast<double>(i + 1);
  }
  for (size_t i = n - 1; i-- > 0;) {
    precision[i] = std::max(precision[i], precision[i + 1]);
  }
  if (interpolation == Interpolation::kAllPoints) {
    double ap = 0.0;
    double prev = 0.0;
    for (size_t i = 0; i < n; ++i) {
      ap += (recall[i] - prev) * precision[i];
      prev = recall[i];
    }
    return ap;
  }
  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[it - recall.begin()];
  }
  return sum / 101.0;
}

// Precomputes per-image IoU tables and a global, input-order independent
// detection ranking so that several thresholds and ignore masks can be
// evaluated cheaply.
class Matcher {
 public:
  Matcher(const std::vector<Detection>& dets, const std::vector<GroundTruthBox>& gts)
      : dets_(dets), gts_(gts), det_row_(dets.size()) {
    for (size_t g = 0; g < gts.size(); ++g) images_[gts[g].image_id].gts.push_back(g);
    for (size_t d = 0; d < dets.size(); ++d) {
      if (!std::isfinite(dets[d].score)) {
        throw InvalidInput("detection score must be finite");
      }
      Image& img = images_[dets[d].image_id];
      det_row_[d] = img.dets.size();
      img.dets.push_back(d);
    }
    std::vector<double> best_iou(dets.size(), 0.0);
    for (auto& [id, img] : images_) {
      const size_t ng = img.gts.size();
      img.iou.assign(img.dets.size() * ng, 0.0);
      for (size_t r = 0; r < img.dets.size(); ++r) {
        for (size_t c = 0; c < ng; ++c) {
          const double iou =
              RotatedIou(dets[img.dets[r]].box, gts[img.gts[c]].box);
          img.iou[r * ng + c] = iou;
          best_iou[img.dets[r]] = std::max(best_iou[img.dets[r]], iou);
        }
      }
    }
    order_.resize(dets.size());
    std::iota(order_.begin(), order_.end(), size_t{0});
    auto key = [&](size_t d) {
      const Detection& x = dets[d];
      return std::make_tuple(-x.score, x.image_id, -best_iou[d], x.box.cx,
                             x.box.cy, x.box.w, x.box.h, x.box.theta);
    };
    std::stable_sort(order_.begin(), order_.end(),
                     [&](size_t a, size_t b) { return key(a) < key(b); });
  }

  std::optional<double> Ap(double threshold, const std::vector<char>& gt_ignore,
                           const std::vector<char>& det_ignore,
                           Interpolation interpolation) const {
    size_t npos = 0;
    for (size_t g = 0; g < gts_.size(); ++g) npos += gt_ignore[g] ? 0 : 1;
    if (npos == 0) return std::nullopt;

    std::vector<char> taken(gts_.size(), 0);
    std::vector<char> tp;
    tp.reserve(dets_.size());
    for (size_t d : order_) {
      const Image& img = images_.at(dets_[d].image_id);
      const size_t ng = img.gts.size();
      const double* row = img.iou.data() + det_row_[d] * ng;
      auto best_match = [&](bool ignored) -> std::optional<size_t> {
        std::optional<size_t> best;
        double best_iou = threshold;
        for (size_t c = 0; c < ng; ++c) {
          const size_t g = img.gts[c];
          if (taken[g] || (gt_ignore[g] != 0) != ignored) continue;
          if (row[c] >= best_iou && (!best || row[c] > best_iou)) {
            best = c;
            best_iou = row[c];
          }
        }
        return best;
      };
      if (const auto c = best_match(false)) {
        taken[img.gts[*c]] = 1;
        tp.push_back(1);
      } else if (const auto ci = best_match(true)) {
        taken[img.gts[*ci]] = 1;
      } else if (!det_ignore[d]) {
        tp.push_back(0);
      }
    }
    return ComputeAp(tp, npos, interpolation);
  }

 private:
  struct Image {
    std::vector<size_t> dets;
    std::vector<size_t> gts;
    std::vector<double> iou;  // dets x gts
  };

  const std::vector<Detection>& dets_;
  const std::vector<GroundTruthBox>& gts_;
  std::map<int64_t, Image> images_;
  std::vector<size_t> det_row_;
  std::vector<size_t> order_;
};

std::optional<double> MeanOfPresent(const std::vector<std::optional<double>>& values) {
  double sum = 0.0;
  size_t n = 0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::optional<double> AreaStratum(const Matcher& matcher,
                                  const std::vector<Detection>& dets,
                                  const std::vector<GroundTruthBox>& gts,
                                  double lo, double hi, Interpolation interpolation) {
  auto outside = [&](const RotatedBox& b) { return b.area() < lo || b.area() >= hi; };
  std::vector<char> gt_ignore(gts.size()), det_ignore(dets.size());
  for (size_t g = 0; g < gts.size(); ++g) gt_ignore[g] = outside(gts[g].box);
  for (size_t d = 0; d < dets.size(); ++d) det_ignore[d] = outside(dets[d].box);
  std::vector<std::optional<double>> per;
  for (double t : CocoThresholds()) {
    per.push_back(matcher.Ap(t, gt_ignore, det_ignore, interpolation));
  }
  return MeanOfPresent(per);
}

struct BinAccumulator {
  std::vector<double> values;
  size_t gt_count = 0;
};

BinStat Summarize(double lo, double hi, const BinAccumulator& acc) {
  BinStat s;
  s.lo = lo;
  s.hi = hi;
  s.gt_count = acc.gt_count;
  s.intervals = acc.values.size();
  if (acc.values.empty()) return s;
  const double n = static_cast<double>(acc.values.size());
  const double mean = std::accumulate(acc.values.begin(), acc.values.end(), 0.0) / n;
  s.mean = mean;
  if (acc.values.size() >= 2) {
    double ss = 0.0;
    for (double v : acc.values) ss += (v - mean) * (v - mean);
    s.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return s;
}

}  // namespace

std::vector<double> CocoThresholds() {
  std::vector<double> t;
  for (int k = 0; k < 10; ++k) t.push_back((50 + 5 * k) / 100.0);
  return t;
}

std::optional<double> ApAtIou(const std::vector<Detection>& dets,
                              const std::vector<GroundTruthBox>& gts,
                              double iou_threshold, const EvalOptions& options) {
  const Matcher matcher(dets, gts);
  return matcher.Ap(iou_threshold, std::vector<char>(gts.size(), 0),
                    std::vector<char>(dets.size(), 0), options.interpolation);
}

APReport CocoAp(const std::vector<Detection>& dets,
                const std::vector<GroundTruthBox>& gts, const EvalOptions& options) {
  const Matcher matcher(dets, gts);
  const std::vector<char> no_gt_ignore(gts.size(), 0);
  const std::vector<char> no_det_ignore(dets.size(), 0);
  APReport report;
  for (double t : CocoThresholds()) {
    report.per_threshold.push_back(
        matcher.Ap(t, no_gt_ignore, no_det_ignore, options.interpolation));
  }
  report.ap = MeanOfPresent(report.per_threshold);
  report.ap50 = report.per_threshold[0];
  report.ap75 = report.per_threshold[5];
  report.ap_small =
      AreaStratum(matcher, dets, gts, 0.0, kSmallAreaMax, options.interpolation);
  report.ap_medium = AreaStratum(matcher, dets, gts, kSmallAreaMax, kMediumAreaMax,
                                 options.interpolation);
  report.ap_large = AreaStratum(matcher, dets, gts, kMediumAreaMax,
                                std::numeric_limits<double>::infinity(),
                                options.interpolation);
  return report;
}

void StratifiedAp50(const std::vector<Detection>& dets,
                    const std::vector<GroundTruthBox>& gts,
                    const std::map<int64_t, ImageSize>& image_sizes,
                    const StrataOptions& strata, APReport* report,
                    const EvalOptions& options) {
  if (strata.distance && strata.distance_bins <= 0) {
    throw InvalidInput("distance bin count must be positive");
  }
  if (strata.angle && !(strata.angle_bin_deg > 0.0)) {
    throw InvalidInput("angle bin width must be positive");
  }
  auto size_of = [&](int64_t image_id) {
    const auto it = image_sizes.find(image_id);
    if (it == image_sizes.end() || it->second.width <= 0 || it->second.height <= 0) {
      throw InvalidInput("image " + std::to_string(image_id) +
                         " has no known size; stratified AP needs image dimensions");
    }
    return it->second;
  };

  std::vector<double> angles = {0.0};
  if (strata.rotate_interval_deg > 0.0) {
    angles.clear();
    for (int k = 0; k * strata.rotate_interval_deg < 360.0 - 1e-9; ++k) {
      angles.push_back(k * strata.rotate_interval_deg);
    }
  }
  const int n_dist = strata.distance ? strata.distance_bins : 0;
  const int n_angle =
      strata.angle ? static_cast<int>(std::ceil(360.0 / strata.angle_bin_deg - 1e-9)) : 0;

  auto bins_of = [&](const RotatedBox& box, int64_t image_id) {
    const ImageSize size = size_of(image_id);
    const Point2 d = box.center() - ImageCenter(size);
    const double radius = 0.5 * std::min(size.width, size.height);
    const double r = Norm(d) / radius;
    const int dist_bin = n_dist > 0 ? std::min(static_cast<int>(r * n_dist), n_dist - 1) : 0;
    double polar = std::atan2(d.y, d.x) * 180.0 / kPi;
    if (polar < 0.0) polar += 360.0;
    const int angle_bin =
        n_angle > 0 ? std::min(static_cast<int>(polar / strata.angle_bin_deg), n_angle - 1)
                    : 0;
    return std::make_pair(dist_bin, angle_bin);
  };

  std::vector<BinAccumulator> dist_acc(n_dist), angle_acc(n_angle);
  for (size_t a = 0; a < angles.size(); ++a) {
    const double rad = angles[a] * kPi / 180.0;
    std::vector<Detection> rdets = dets;
    std::vector<GroundTruthBox> rgts = gts;
    for (auto& d : rdets) d.box = RotateBox(d.box, ImageCenter(size_of(d.image_id)), rad);
    for (auto& g : rgts) g.box = RotateBox(g.box, ImageCenter(size_of(g.image_id)), rad);

    std::vector<std::pair<int, int>> gbin(rgts.size()), dbin(rdets.size());
    for (size_t g = 0; g < rgts.size(); ++g) gbin[g] = bins_of(rgts[g].box, rgts[g].image_id);
    for (size_t d = 0; d < rdets.size(); ++d) dbin[d] = bins_of(rdets[d].box, rdets[d].image_id);

    const Matcher matcher(rdets, rgts);
    auto run = [&](int bin, bool use_distance, BinAccumulator& acc) {
      auto pick = [&](const std::pair<int, int>& b) {
        return use_distance ? b.first : b.second;
      };
      std::vector<char> gt_ignore(rgts.size()), det_ignore(rdets.size());
      size_t count = 0;
      for (size_t g = 0; g < rgts.size(); ++g) {
        gt_ignore[g] = pick(gbin[g]) != bin;
        count += gt_ignore[g] ? 0 : 1;
      }
      for (size_t d = 0; d < rdets.size(); ++d) det_ignore[d] = pick(dbin[d]) != bin;
      if (a == 0) acc.gt_count = count;
      if (const auto ap = matcher.Ap(0.5, gt_ignore, det_ignore, options.interpolation)) {
        acc.values.push_back(*ap);
      }
    };
    for (int b = 0; b < n_dist; ++b) run(b, true, dist_acc[b]);
    for (int b = 0; b < n_angle; ++b) run(b, false, angle_acc[b]);
  }

  report->distance_bins.clear();
  report->angle_bins.clear();
  for (int b = 0; b < n_dist; ++b) {
    report->distance_bins.push_back(Summarize(static_cast<double>(b) / n_dist,
                                              static_cast<double>(b + 1) / n_dist,
                                              dist_acc[b]));
  }
  for (int b = 0; b < n_angle; ++b) {
    report->angle_bins.push_back(Summarize(b * strata.angle_bin_deg,
                                           std::min(360.0, (b + 1) * strata.angle_bin_deg),
                                           angle_acc[b]));
  }
}

}  // namespace omnibox
