#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "omnibox/geometry.hpp"

namespace omnibox {

// One detector query: post-sigmoid class probabilities, a normalized
// axis-aligned box and a normalized angle a_hat in [0, 1].
struct Prediction {
  std::vector<double> class_probs;
  AxisBox box;
  double a_hat = 0.5;

  // Maps a_hat onto [-pi, pi].
  double theta_hat() const { return 2.0 * kPi * a_hat - kPi; }
};

struct GroundTruthEntry {
  std::vector<double> class_onehot;
  AxisBox box;
  double theta = 0.0;  // [-pi/2, pi/2)
  bool is_phi = false;  // padding: "no object"

  static GroundTruthEntry Phi() {
    GroundTruthEntry e;
    e.is_phi = true;
    return e;
  }
};

struct LossWeights {
  double lambda_c = 2.0;
  double lambda_b = 5.0;
  double lambda_u = 2.0;
  double lambda_a = 0.1;
};

struct FocalParams {
  double alpha = 0.25;
  double gamma = 2.0;
};

inline constexpr double kProbEpsilon = 1e-8;

struct LossBreakdown {
  double total = 0.0;
  double class_loss = 0.0;
  double box_l1 = 0.0;
  double giou_loss = 0.0;
  double angle_loss = 0.0;
  std::vector<size_t> assignment;  // ground truth i -> prediction assignment[i]
};

// Alpha-balanced focal loss summed over classes; probabilities are clamped
// to [eps, 1 - eps].
double FocalLoss(std::span<const double> target, std::span<const double> probs,
                 const FocalParams& focal = {});

// |mod(theta_hat - theta - pi/2, pi) - pi/2| with a floored modulo; period pi,
// range [0, pi/2].
double AngleLoss(double theta_hat, double theta);

double BoxL1(const AxisBox& a, const AxisBox& b);

// Hungarian cost for one (ground truth, prediction) cell. Real ground truths
// use the positive-class focal term plus the box, GIoU and angle terms;
// padding rows cost the background focal term only.
double PairCost(const GroundTruthEntry& gt, const Prediction& pred,
                const LossWeights& weights, const FocalParams& focal = {});

// Minimum-cost permutation for a square row-major matrix (O(n^3)
// Kuhn-Munkres with potentials). result[row] = column. Throws InvalidInput on
// non-finite entries or a non-square shape.
std::vector<size_t> HungarianMatch(std::span<const double> cost, size_t n);
std::vector<size_t> HungarianMatch(const std::vector<std::vector<double>>& cost);

// Unnormalized per-term sums over one padded set plus the matching. Lets
// callers normalize across several images at once.
struct LossSums {
  double class_loss = 0.0;
  double box_l1 = 0.0;
  double giou_loss = 0.0;
  double angle_loss = 0.0;
  size_t num_real = 0;
  std::vector<size_t> assignment;
};

LossSums ComputeLossSums(std::span<const GroundTruthEntry> gts,
                         std::span<const Prediction> preds,
                         const LossWeights& weights, const FocalParams& focal = {});

// Divides the sums by num_real and applies the weights.
LossBreakdown Normalize(const LossSums& sums, const LossWeights& weights);

// Full matched loss for one padded set (|gts| == |preds|). Throws
// InvalidInput when the sizes differ or no ground truth is real.
LossBreakdown ComputeLoss(std::span<const GroundTruthEntry> gts,
                          std::span<const Prediction> preds,
                          const LossWeights& weights, const FocalParams& focal = {});

// Throws InvalidInput for negative or non-finite weights.
void ValidateWeights(const LossWeights& weights);

}  // namespace omnibox
