// Acceptance suite: one PASS / FAIL / SKIP line per criterion. Exits non-zero
// when any criterion fails. Every tolerance lives in the constants below.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "omnibox/annotations.hpp"
#include "omnibox/augment.hpp"
#include "omnibox/boxgen.hpp"
#include "omnibox/evaluation.hpp"
#include "omnibox/geometry.hpp"
#include "omnibox/image.hpp"
#include "omnibox/matching_loss.hpp"
#include "omnibox/omnibox.h"
#include "oracles.hpp"

using namespace omnibox;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Pinned tolerances and sizes.
constexpr int kMbrPolygons = 500;
constexpr double kMbrRelTol = 0.005;
constexpr double kMbrSeconds = 60.0;
constexpr int kIouPairs = 1000;
constexpr int kIouRasterSide = 1000;  // 10^6 samples per pair
constexpr double kIouAbsTol = 1e-2;
constexpr double kIouAnalyticTol = 1e-9;
constexpr int kHungarianMatrices = 200;
constexpr int kHungarianMaxN = 7;
constexpr int kAnglePairs = 100000;
constexpr double kAngleTol = 1e-9;
constexpr double kPerfectLossTol = 1e-6;
constexpr int kFisheyeRoundTrips = 100000;
constexpr double kFisheyeRoundTripTol = 1e-9;
constexpr int kArgminGrid = 128;
constexpr int kArgminVertices = 400;
constexpr double kArgminPixelTol = 1.0;
constexpr int kCropLevelTol = 1;
constexpr int kEquivarianceInstances = 200;
constexpr double kEquivarianceTol = 1e-6;
constexpr double kApExactTol = 1e-15;
constexpr int kMonotoneScenes = 200;
constexpr double kCocoCountTol = 0.005;
constexpr size_t kCocoImages = 64115;
constexpr size_t kCocoInstances = 262465;

const fs::path kData = OMNIBOX_TEST_DATA_DIR;
const fs::path kToy = kData / "toy";
const fs::path kShippedConfig = kData.parent_path().parent_path() / "config" / "defaults.ini";

struct Outcome {
  enum Kind { kPass, kFail, kSkip } kind;
  std::string detail;
};

Outcome Fail(std::string d) { return {Outcome::kFail, std::move(d)}; }
Outcome Check(bool ok, std::string d) { return {ok ? Outcome::kPass : Outcome::kFail, std::move(d)}; }

template <typename... Args>
std::string Fmt(Args&&... args) {
  std::ostringstream os;
  os.precision(6);
  (os << ... << args);
  return os.str();
}

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult RunCli(const std::string& args) {
  const std::string cmd = std::string("'") + OMNIBOX_CLI_PATH + "' " + args + " 2>/dev/null";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string Q(const fs::path& p) { return "'" + p.string() + "'"; }

Outcome MbrOracle() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> nv(3, 12);
  double worst = 0.0;
  int outside = 0, above_grid = 0, explained = 0;
  double worst_fine = 0.0;
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < kMbrPolygons; ++i) {
    const auto poly = oracle::RandomStarPolygon(rng, nv(rng), 2.0, 50.0);
    const RotatedBox box = MinAreaRect(ConvexHull(poly));
    const double grid = oracle::GridMinRectArea(poly);
    const double rel = std::abs(box.area() - grid) / grid;
    worst = std::max(worst, rel);
    above_grid += box.area() > grid + 1e-9;
    if (rel > kMbrRelTol) {
      ++outside;
      // Diagnostics only: a grid sampled half a step off the optimum
      // overestimates a w x h rectangle by about (h/w + w/h) * step / 2.
      const double aspect = box.h / box.w;
      const double bound = (aspect + 1.0 / aspect) * 0.5 * kPi / 1800.0 * 1.01;
      explained += box.area() <= grid && rel <= bound;
      const double fine = oracle::GridMinRectArea(poly, 1800 * 1000);
      worst_fine = std::max(worst_fine, std::abs(box.area() - fine) / fine);
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::string detail = Fmt("worst rel diff ", worst, " (tol ", kMbrRelTol, "), ", outside,
                           " of ", kMbrPolygons, " outside, ", above_grid,
                           " above the grid, ", secs, " s (< ", kMbrSeconds, ")");
  if (outside > 0) {
    detail += Fmt("; the ", outside, " outliers are below the grid by at most its own ",
                  "resolution error (", explained, " of ", outside,
                  "), and a 1000x finer grid agrees within ", worst_fine);
  }
  return Check(worst <= kMbrRelTol && above_grid == 0 && secs < kMbrSeconds, detail);
}

Outcome IouOracle() {
  const double analytic =
      std::abs(RotatedIou({0, 0, 1, 1, 0}, {0, 0, 1, 1, kPi / 4}) - 1.0 / std::sqrt(2.0));
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> c(-8.0, 8.0), s(1.0, 20.0), t(-kPi, kPi);
  double worst = 0.0;
  int overlapping = 0;
  for (int i = 0; i < kIouPairs; ++i) {
    const RotatedBox a{0, 0, s(rng), s(rng), t(rng)};
    const RotatedBox b{c(rng), c(rng), s(rng), s(rng), t(rng)};
    const double iou = RotatedIou(a, b);
    overlapping += iou > 0.0;
    worst = std::max(worst, std::abs(iou - oracle::RasterIou(a, b, kIouRasterSide)));
  }
  return Check(worst <= kIouAbsTol && analytic <= kIouAnalyticTol,
               Fmt("worst |diff| ", worst, " over ", kIouPairs, " pairs (", overlapping,
                   " overlapping), 45-degree case off by ", analytic));
}

Outcome HungarianOracle() {
  std::mt19937_64 rng(107);
  std::uniform_int_distribution<int> cost(0, 1000), size(1, kHungarianMaxN);
  int mismatches = 0;
  for (int i = 0; i < kHungarianMatrices; ++i) {
    const size_t n = static_cast<size_t>(size(rng));
    std::vector<double> m(n * n);
    for (auto& v : m) v = cost(rng);
    const auto perm = HungarianMatch(m, n);
    double total = 0.0;
    for (size_t r = 0; r < n; ++r) total += m[r * n + perm[r]];
    mismatches += total != oracle::BruteAssignmentCost(m, n);
  }
  return Check(mismatches == 0, Fmt(mismatches, " of ", kHungarianMatrices,
                                    " totals differ from brute force"));
}

Outcome AngleLossProperties() {
  std::mt19937_64 rng(109);
  std::uniform_real_distribution<double> a(-4 * kPi, 4 * kPi);
  double worst_period = 0.0, worst_range = 0.0;
  int zero_violations = 0;
  for (int i = 0; i < kAnglePairs; ++i) {
    const double x = a(rng), y = a(rng);
    const double f = AngleLoss(x, y);
    worst_period = std::max(worst_period, std::abs(AngleLoss(x + kPi, y) - f));
    worst_range = std::max({worst_range, -f, f - kHalfPi});
    const bool equal_mod_pi = std::abs(std::remainder(x - y, kPi)) <= kAngleTol;
    zero_violations += (f <= kAngleTol) != equal_mod_pi;
    // The zero side of the equivalence, exercised on every pair.
    const double shifted = y + kPi * std::round(a(rng) / kPi);
    zero_violations += AngleLoss(shifted, y) > kAngleTol;
  }
  return Check(worst_period <= kAngleTol && worst_range <= kAngleTol && zero_violations == 0,
               Fmt("periodicity ", worst_period, ", range excess ", std::max(0.0, worst_range),
                   ", zero-set violations ", zero_violations));
}

Outcome LossDefaults() {
  // Shipped config, read through the CLI.
  const fs::path dir = fs::temp_directory_path() / "omnibox_acceptance_loss";
  fs::remove_all(dir);
  fs::create_directories(dir);
  WriteTextFile(dir / "gt.json", R"({"images": [{"id": 1, "file": "a.png", "width": 100,
    "height": 100, "boxes": [{"cx": 50, "cy": 50, "w": 10, "h": 20, "angle_deg": 0}]}]})");
  const RunResult r = RunCli("--config " + Q(kShippedConfig) + " match-loss --gt " +
                             Q(dir / "gt.json") + " --pred " + Q(dir / "gt.json"));
  fs::remove_all(dir);
  if (r.exit_code != 0) return Fail(Fmt("CLI exited ", r.exit_code));
  const json w = json::parse(r.out)["weights"];
  const bool shipped = w["lambda_c"] == 2.0 && w["lambda_b"] == 5.0 && w["lambda_u"] == 2.0 &&
                       w["lambda_a"] == 0.1;
  obx_loss_weights c;
  obx_loss_weights_init(&c);
  const LossWeights lib;
  const bool builtin = c.lambda_c == 2.0 && c.lambda_b == 5.0 && c.lambda_u == 2.0 &&
                       c.lambda_a == 0.1 && lib.lambda_c == 2.0 && lib.lambda_b == 5.0 &&
                       lib.lambda_u == 2.0 && lib.lambda_a == 0.1;

  // Perfect predictions: matched queries certain and exact, the rest certain
  // background.
  auto real = [](AxisBox b, double theta) {
    GroundTruthEntry g;
    g.class_onehot = {1.0};
    g.box = b;
    g.theta = theta;
    return g;
  };
  auto pred = [](double p, AxisBox b, double theta) {
    Prediction q;
    q.class_probs = {p};
    q.box = b;
    q.a_hat = (theta + kPi) / (2 * kPi);
    return q;
  };
  std::vector<GroundTruthEntry> gts = {real({0.3, 0.4, 0.1, 0.3}, 0.4),
                                       real({0.7, 0.2, 0.05, 0.2}, -1.1),
                                       real({0.5, 0.8, 0.2, 0.1}, -kHalfPi)};
  const std::vector<Prediction> preds = {
      pred(kProbEpsilon, {0.1, 0.1, 0.1, 0.1}, 0.0),
      pred(1 - kProbEpsilon, {0.5, 0.8, 0.2, 0.1}, -kHalfPi),
      pred(1 - kProbEpsilon, {0.3, 0.4, 0.1, 0.3}, 0.4),
      pred(kProbEpsilon, {0.9, 0.9, 0.2, 0.2}, 1.0),
      pred(1 - kProbEpsilon, {0.7, 0.2, 0.05, 0.2}, -1.1)};
  gts.resize(preds.size(), GroundTruthEntry::Phi());
  const double total = ComputeLoss(gts, preds, LossWeights()).total;
  return Check(shipped && builtin && total <= kPerfectLossTol,
               Fmt("shipped config ", shipped ? "(2, 5, 2, 0.1)" : "differs", ", built-in ",
                   builtin ? "(2, 5, 2, 0.1)" : "differs", ", perfect-fixture loss ", total));
}

Outcome FisheyeConsistency() {
  std::mt19937_64 rng(113);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_trip = 0.0;
  for (int i = 0; i < kFisheyeRoundTrips; ++i) {
    const FisheyeParams p{20.0 + 2000.0 * u(rng), {2000 * u(rng), 2000 * u(rng)}, 16, 16};
    // Valid domain: |qe| / f strictly inside pi/2.
    const double r = 0.99 * p.f * kHalfPi * u(rng);
    const double a = 2 * kPi * u(rng);
    const Point2 qe{r * std::cos(a), r * std::sin(a)};
    const auto qp = FisheyeProject(qe, p);
    if (!qp) return Fail("projection undefined inside the valid domain");
    const Point2 back = FisheyeInverseMap(*qp, p);
    worst_trip = std::max({worst_trip, std::abs(back.x - qe.x), std::abs(back.y - qe.y)});
  }

  double worst_argmin = 0.0;
  int checked = 0;
  for (int i = 0; i < kArgminVertices; ++i) {
    const FisheyeParams p{kArgminGrid * (0.3 + 0.9 * u(rng)),
                          {kArgminGrid * (0.3 + 0.4 * u(rng)), kArgminGrid * (0.3 + 0.4 * u(rng))},
                          kArgminGrid, kArgminGrid};
    const Point2 v{p.qc.x + kArgminGrid * (u(rng) - 0.5) * 0.8,
                   p.qc.y + kArgminGrid * (u(rng) - 0.5) * 0.8};
    const Polygon mapped = MapSegmentVertices(std::vector<Point2>{v}, p);
    if (mapped.empty()) continue;
    const Point2 brute = oracle::BruteNearestGrid(v, p.f, p.qc, kArgminGrid, kArgminGrid);
    worst_argmin = std::max(worst_argmin, std::hypot(mapped[0].x - brute.x, mapped[0].y - brute.y));
    ++checked;
  }

  ImageBuffer src(160, 120);
  for (int y = 0; y < 120; ++y) {
    for (int x = 0; x < 160; ++x) {
      uint8_t* px = src.at(x, y);
      px[0] = static_cast<uint8_t>((x * 5 + y * 3) % 256);
      px[1] = static_cast<uint8_t>((x * x + y) % 256);
      px[2] = static_cast<uint8_t>((y * 9) % 256);
    }
  }
  const FisheyeParams big{1e7, {80, 60}, 64, 64};
  const WarpResult w = WarpImage(src, big);
  const Point2 o = OutputOrigin(big);
  int worst_level = 0;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      const uint8_t* a = w.image.at(x, y);
      const uint8_t* b = src.at(x - static_cast<int>(o.x) + 80, y - static_cast<int>(o.y) + 60);
      for (int c = 0; c < 3; ++c) worst_level = std::max(worst_level, std::abs(a[c] - b[c]));
    }
  }
  return Check(worst_trip <= kFisheyeRoundTripTol && worst_argmin <= kArgminPixelTol &&
                   checked > kArgminVertices / 2 && worst_level <= kCropLevelTol,
               Fmt("round trip ", worst_trip, ", argmin distance ", worst_argmin, " px over ",
                   checked, " vertices on ", kArgminGrid, "^2 grids, crop diff ", worst_level,
                   " levels"));
}

Outcome BoxgenEquivariance() {
  std::mt19937_64 rng(127);
  std::uniform_real_distribution<double> ang(-kPi, kPi), piv(-200.0, 200.0);
  std::uniform_int_distribution<int> nv(3, 16);
  double worst = 0.0;
  for (int i = 0; i < kEquivarianceInstances; ++i) {
    const auto seg = oracle::RandomStarPolygon(rng, nv(rng), 3.0, 60.0);
    const double t = ang(rng);
    const Point2 pivot{piv(rng), piv(rng)};
    Polygon rotated;
    for (const Point2& p : seg) rotated.push_back(RotatePoint(p, pivot, t));
    const RotatedBox a = GenerateBoxFromPoints(rotated, 1000, 1000).box;
    const RotatedBox b = RotateBox(GenerateBoxFromPoints(seg, 1000, 1000).box, pivot, t);
    worst = std::max(worst, oracle::CornerSetDistance(BoxCorners(a), BoxCorners(b)));
  }
  return Check(worst <= kEquivarianceTol,
               Fmt("worst corner distance ", worst, " over ", kEquivarianceInstances,
                   " instances"));
}

Outcome ApEvaluator() {
  auto gt = [](double cx, double cy) {
    return GroundTruthBox{1, Canonicalize(cx, cy, 10, 20, 0)};
  };
  const std::vector<GroundTruthBox> two = {gt(20, 20), gt(60, 60)};
  const double perfect =
      ApAtIou({{1, two[0].box, 0.9}, {1, two[1].box, 0.8}}, two, 0.5).value();
  const double half = ApAtIou({{1, two[0].box, 0.9}}, two, 0.5).value();
  const double dup =
      ApAtIou({{1, two[0].box, 0.9}, {1, two[0].box, 0.8}, {1, two[1].box, 0.7}}, two, 0.5)
          .value();
  // Hand-computed 101-point values: precision 1 on 51 of the 101 recall
  // samples for half recall; 51 samples at 1 plus 50 at 2/3 with a duplicate.
  const double want_half = 51.0 / 101.0;
  const double want_dup = (51.0 + 50.0 * 2.0 / 3.0) / 101.0;
  const bool fixtures = std::abs(perfect - 1.0) <= kApExactTol &&
                        std::abs(half - want_half) <= kApExactTol &&
                        std::abs(dup - want_dup) <= kApExactTol;

  std::mt19937_64 rng(131);
  std::uniform_real_distribution<double> jitter(-5.0, 5.0), score(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 10);
  int violations = 0;
  for (int s = 0; s < kMonotoneScenes; ++s) {
    std::vector<GroundTruthBox> gts;
    std::vector<Detection> dets;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      gts.push_back({1 + i % 3, Canonicalize(40 + 70 * i, 60, 16, 40, 0.2 * i)});
      RotatedBox b = gts.back().box;
      b.cx += jitter(rng);
      b.cy += jitter(rng);
      b.theta += 0.04 * jitter(rng);
      dets.push_back({gts.back().image_id, b, score(rng)});
      if (score(rng) < 0.3) dets.push_back({1, Canonicalize(40 + 70 * i, 300, 16, 40, 0), score(rng)});
    }
    const APReport r = CocoAp(dets, gts);
    for (size_t t = 1; t < r.per_threshold.size(); ++t) {
      violations += *r.per_threshold[t] > *r.per_threshold[t - 1];
    }
  }
  return Check(fixtures && violations == 0,
               Fmt("perfect ", perfect, ", half-recall ", half, " (want ", want_half,
                   "), duplicate ", dup, " (want ", want_dup, "), monotonicity violations ",
                   violations, " over ", kMonotoneScenes, " scenes"));
}

Outcome EndToEndCli() {
  const fs::path dir = fs::temp_directory_path() / "omnibox_acceptance_e2e";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const RunResult gen =
      RunCli("gen-boxes --coco " + Q(kToy / "coco.json") + " --out " + Q(dir / "gt.json"));
  if (gen.exit_code != 0) return Fail(Fmt("gen-boxes exited ", gen.exit_code));
  const bool golden =
      ReadTextFile(dir / "gt.json") == ReadTextFile(kToy / "golden_boxes.json");
  const RunResult aug = RunCli("augment --dataset " + Q(dir / "gt.json") + " --images " +
                               Q(kToy / "images") + " --copies 2 --out " + Q(dir / "aug"));
  if (aug.exit_code != 0) return Fail(Fmt("augment exited ", aug.exit_code));
  const fs::path ann = dir / "aug" / "annotations.json";
  const RunResult eval = RunCli("evaluate --gt " + Q(ann) + " --pred " + Q(ann));
  if (eval.exit_code != 0) return Fail(Fmt("evaluate exited ", eval.exit_code));
  const json r = json::parse(eval.out);
  const double ap = r["ap"].is_number() ? r["ap"].get<double>() : -1.0;
  fs::remove_all(dir);
  return Check(golden && ap == 1.0,
               Fmt("golden ", golden ? "byte-identical" : "DIFFERS", ", pipeline AP ", ap,
                   " over ", r["num_gt"].get<int>(), " boxes"));
}

Outcome CocoCounts() {
  const char* path = std::getenv("OMNIBOX_COCO_TRAIN2017");
  if (!path || !*path) {
    return {Outcome::kSkip, "set OMNIBOX_COCO_TRAIN2017 to instances_train2017.json"};
  }
  const CocoDataset ds = LoadCoco(path, "person");
  const IngestReport& rep = ds.report;
  const double di = std::abs(static_cast<double>(rep.images_selected) - kCocoImages) / kCocoImages;
  const double dn = std::abs(static_cast<double>(rep.instances) - kCocoInstances) / kCocoInstances;
  return Check(di <= kCocoCountTol && dn <= kCocoCountTol,
               Fmt(rep.images_selected, " images (want ", kCocoImages, "), ", rep.instances,
                   " instances (want ", kCocoInstances, "; ", rep.crowd_instances,
                   " crowd, ", rep.rle_instances, " RLE), tolerance ", kCocoCountTol));
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"mbr_oracle", MbrOracle},
      {"rotated_iou_oracle", IouOracle},
      {"hungarian_oracle", HungarianOracle},
      {"angle_loss_properties", AngleLossProperties},
      {"loss_defaults", LossDefaults},
      {"fisheye_consistency", FisheyeConsistency},
      {"boxgen_equivariance", BoxgenEquivariance},
      {"ap_evaluator", ApEvaluator},
      {"end_to_end_cli", EndToEndCli},
      {"coco_dataset_counts", CocoCounts},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = Fail(std::string("exception: ") + e.what());
    }
    const char* tag = o.kind == Outcome::kPass ? "PASS" : o.kind == Outcome::kFail ? "FAIL" : "SKIP";
    failures += o.kind == Outcome::kFail;
    std::printf("%s %s: %s\n", tag, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
