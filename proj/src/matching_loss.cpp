#include "omnibox/matching_loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "omnibox/error.hpp"

namespace omnibox {
namespace {

double ClampProb(double p) {
  return std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
}

double PositiveFocal(double p, const FocalParams& focal) {
  p = ClampProb(p);
  return -focal.alpha * std::pow(1.0 - p, focal.gamma) * std::log(p);
}

double NegativeFocal(double p, const FocalParams& focal) {
  p = ClampProb(p);
  return -(1.0 - focal.alpha) * std::pow(p, focal.gamma) * std::log(1.0 - p);
}

double BackgroundFocal(const Prediction& pred, const FocalParams& focal) {
  double sum = 0.0;
  for (double p : pred.class_probs) sum += NegativeFocal(p, focal);
  return sum;
}

void CheckClassShape(const GroundTruthEntry& gt, const Prediction& pred) {
  if (!gt.is_phi && gt.class_onehot.size() != pred.class_probs.size()) {
    throw InvalidInput("class vector length mismatch between ground truth (" +
                       std::to_string(gt.class_onehot.size()) +
                       ") and prediction (" +
                       std::to_string(pred.class_probs.size()) + ")");
  }
}

}  // namespace

double FocalLoss(std::span<const double> target, std::span<const double> probs,
                 const FocalParams& focal) {
  if (target.size() != probs.size()) {
    throw InvalidInput("focal loss: target and probability lengths differ");
  }
  double sum = 0.0;
  for (size_t k = 0; k < target.size(); ++k) {
    sum += target[k] > 0.5 ? PositiveFocal(probs[k], focal)
                           : NegativeFocal(probs[k], focal);
  }
  return sum;
}

double AngleLoss(double theta_hat, double theta) {
  const double x = theta_hat - theta - kHalfPi;
  double m = x - kPi * std::floor(x / kPi);
  if (m >= kPi) m -= kPi;
  if (m < 0.0) m = 0.0;
  return std::abs(m - kHalfPi);
}

double BoxL1(const AxisBox& a, const AxisBox& b) {
  return std::abs(a.cx - b.cx) + std::abs(a.cy - b.cy) + std::abs(a.w - b.w) +
         std::abs(a.h - b.h);
}

double PairCost(const GroundTruthEntry& gt, const Prediction& pred,
                const LossWeights& weights, const FocalParams& focal) {
  CheckClassShape(gt, pred);
  if (gt.is_phi) return weights.lambda_c * BackgroundFocal(pred, focal);
  double class_cost = 0.0;
  for (size_t k = 0; k < gt.class_onehot.size(); ++k) {
    if (gt.class_onehot[k] > 0.5) class_cost += PositiveFocal(pred.class_probs[k], focal);
  }
  return weights.lambda_c * class_cost + weights.lambda_b * BoxL1(gt.box, pred.box) +
         weights.lambda_u * (1.0 - Giou(gt.box, pred.box)) +
         weights.lambda_a * AngleLoss(pred.theta_hat(), gt.theta);
}

std::vector<size_t> HungarianMatch(std::span<const double> cost, size_t n) {
  if (cost.size() != n * n) throw InvalidInput("cost matrix must be square");
  for (double c : cost) {
    if (!std::isfinite(c)) throw InvalidInput("cost matrix contains NaN or Inf");
  }
  if (n == 0) return {};

  // 1-based potentials; column 0 is the virtual start column.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<size_t> owner(n + 1, 0), way(n + 1, 0);
  for (size_t row = 1; row <= n; ++row) {
    owner[0] = row;
    size_t col0 = 0;
    std::vector<double> min_slack(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[col0] = 1;
      const size_t row0 = owner[col0];
      double delta = inf;
      size_t col1 = 0;
      for (size_t col = 1; col <= n; ++col) {
        if (used[col]) continue;
        const double slack = cost[(row0 - 1) * n + (col - 1)] - u[row0] - v[col];
        if (slack < min_slack[col]) {
          min_slack[col] = slack;
          way[col] = col0;
        }
        if (min_slack[col] < delta) {
          delta = min_slack[col];
          col1 = col;
        }
      }
      for (size_t col = 0; col <= n; ++col) {
        if (used[col]) {
          u[owner[col]] += delta;
          v[col] -= delta;
        } else {
          min_slack[col] -= delta;
        }
      }
      col0 = col1;
    } while (owner[col0] != 0);
    do {
      const size_t col1 = way[col0];
      owner[col0] = owner[col1];
      col0 = col1;
    } while (col0 != 0);
  }

  std::vector<size_t> assignment(n);
  for (size_t col = 1; col <= n; ++col) assignment[owner[col] - 1] = col - 1;
  return assignment;
}

std::vector<size_t> HungarianMatch(const std::vector<std::vector<double>>& cost) {
  const size_t n = cost.size();
  std::vector<double> flat;
  flat.reserve(n * n);
  for (const auto& row : cost) {
    if (row.size() != n) throw InvalidInput("cost matrix must be square");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return HungarianMatch(flat, n);
}

LossSums ComputeLossSums(std::span<const GroundTruthEntry> gts,
                         std::span<const Prediction> preds,
                         const LossWeights& weights, const FocalParams& focal) {
  const size_t n = gts.size();
  if (preds.size() != n) {
    throw InvalidInput("padded ground truth count (" + std::to_string(n) +
                       ") must equal prediction count (" +
                       std::to_string(preds.size()) + ")");
  }
  std::vector<double> cost(n * n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      cost[i * n + j] = PairCost(gts[i], preds[j], weights, focal);
    }
  }

  LossSums sums;
  sums.assignment = HungarianMatch(cost, n);
  for (size_t i = 0; i < n; ++i) {
    const GroundTruthEntry& gt = gts[i];
    const Prediction& pred = preds[sums.assignment[i]];
    if (gt.is_phi) {
      sums.class_loss += BackgroundFocal(pred, focal);
      continue;
    }
    ++sums.num_real;
    sums.class_loss += FocalLoss(gt.class_onehot, pred.class_probs, focal);
    sums.box_l1 += BoxL1(gt.box, pred.box);
    sums.giou_loss += 1.0 - Giou(gt.box, pred.box);
    sums.angle_loss += AngleLoss(pred.theta_hat(), gt.theta);
  }
  return sums;
}

LossBreakdown Normalize(const LossSums& sums, const LossWeights& weights) {
  if (sums.num_real == 0) {
    throw InvalidInput("no real ground truth: loss normalization is undefined");
  }
  const double inv = 1.0 / static_cast<double>(sums.num_real);
  LossBreakdown out;
  out.class_loss = sums.class_loss * inv;
  out.box_l1 = sums.box_l1 * inv;
  out.giou_loss = sums.giou_loss * inv;
  out.angle_loss = sums.angle_loss * inv;
  out.total = weights.lambda_c * out.class_loss + weights.lambda_b * out.box_l1 +
              weights.lambda_u * out.giou_loss + weights.lambda_a * out.angle_loss;
  out.assignment = sums.assignment;
  return out;
}

LossBreakdown ComputeLoss(std::span<const GroundTruthEntry> gts,
                          std::span<const Prediction> preds,
                          const LossWeights& weights, const FocalParams& focal) {
  const bool any_real = std::any_of(gts.begin(), gts.end(),
                                    [](const GroundTruthEntry& g) { return !g.is_phi; });
  if (!any_real) {
    throw InvalidInput("no real ground truth: loss normalization is undefined");
  }
  return Normalize(ComputeLossSums(gts, preds, weights, focal), weights);
}

void ValidateWeights(const LossWeights& weights) {
  for (double w : {weights.lambda_c, weights.lambda_b, weights.lambda_u,
                   weights.lambda_a}) {
    if (!std::isfinite(w) || w < 0.0) {
      throw InvalidInput("loss weights must be finite and non-negative");
    }
  }
}

}  // namespace omnibox
