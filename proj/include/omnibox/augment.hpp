#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "omnibox/annotations.hpp"
#include "omnibox/boxgen.hpp"
#include "omnibox/geometry.hpp"
#include "omnibox/image.hpp"

namespace omnibox {

// Pixel coordinates follow the sampling grid: integer (x, y) is the center
// of pixel (x, y). Annotation vertices use the same frame.

struct ImageSize {
  int width = 0;
  int height = 0;
};

// Equidistant ("pseudo-fisheye") warp of a perspective image. The output
// optical axis sits at grid point OutputOrigin(); qc is the source optical
// axis.
struct FisheyeParams {
  double f = 1.0;  // focal length, pixels
  Point2 qc;
  int out_w = 0;
  int out_h = 0;
};

Point2 OutputOrigin(const FisheyeParams& params);

// q_p = (f tan(|qe| / f) / |qe|) qe + qc, or nullopt once |qe| / f >= pi/2.
std::optional<Point2> FisheyeProject(Point2 qe, const FisheyeParams& params);

// FisheyeProject restricted to source points inside [0, W-1] x [0, H-1].
std::optional<Point2> FisheyeForwardMap(Point2 qe, const FisheyeParams& params,
                                        ImageSize source);

// Closed-form inverse: q_e = (f atan(r_p / f) / r_p) (qp - qc).
Point2 FisheyeInverseMap(Point2 qp, const FisheyeParams& params);

struct WarpResult {
  ImageBuffer image;
  std::vector<uint8_t> mask;  // 1 where the output pixel has a source
};

// Bilinear sampling at the forward-mapped point; unmapped pixels are black
// and masked out. Rows are processed in parallel; output does not depend on
// `workers`.
WarpResult WarpImage(const ImageBuffer& src, const FisheyeParams& params,
                     int workers = 1);

// Each vertex goes to the output grid point whose forward image is closest
// to it, computed as the rounded closed-form inverse. Vertices landing
// outside the output canvas are dropped.
Polygon MapSegmentVertices(std::span<const Point2> segment,
                           const FisheyeParams& params);

// Rotation about the image center ((W-1)/2, (H-1)/2) on the same canvas.
// Positive angles turn +x toward +y.
ImageBuffer RotateImage(const ImageBuffer& src, double angle, int workers = 1);
Point2 ImageCenter(ImageSize size);

struct AugmentedSample {
  ImageBuffer image;
  ImageRecord record;  // transformed segments; upright boxes cleared
  std::vector<GeneratedBox> boxes;  // regenerated; filter on degenerate/visibility
};

AugmentedSample RotateImageAndAnnotations(const ImageRecord& record,
                                          const ImageBuffer& image,
                                          double angle, int workers = 1);
AugmentedSample ApplyFisheye(const ImageRecord& record, const ImageBuffer& image,
                             const FisheyeParams& params, int workers = 1);

// Boxes for every usable instance of an already transformed record.
std::vector<GeneratedBox> RegenerateBoxes(const ImageRecord& record);

// Deterministic per-(seed, stream) generator; each image copy gets its own
// stream so results do not depend on scheduling.
class AugmentRng {
 public:
  AugmentRng(uint64_t seed, uint64_t stream);

  double Uniform();  // [0, 1)
  double Uniform(double lo, double hi);

 private:
  std::mt19937_64 engine_;
};

struct AugmentConfig {
  bool rotate = true;
  double rotation_min = -kPi;
  double rotation_max = kPi;
  double fisheye_probability = 0.5;
  double f_min = 0.4;  // multiples of the source half-diagonal
  double f_max = 1.2;
  double qc_jitter = 0.1;  // fraction of image size around the center
  int out_w = 0;  // 0: square of side min(W, H)
  int out_h = 0;
  uint64_t seed = 20220901;
  int copies = 1;
  double min_visibility = kDefaultMinVisibility;
  // Photometric step (e.g. colour jitter) applied after the geometric ones.
  std::function<void(ImageBuffer&, AugmentRng&)> photometric;
};

// Throws InvalidInput for empty ranges or probabilities outside [0, 1].
void ValidateConfig(const AugmentConfig& config);

FisheyeParams SampleParams(const AugmentConfig& config, ImageSize source,
                           AugmentRng& rng);

// One augmented copy: rotation (when enabled), then the fisheye warp with
// probability fisheye_probability, then the photometric hook.
AugmentedSample AugmentOnce(const ImageRecord& record, const ImageBuffer& image,
                            const AugmentConfig& config, AugmentRng& rng,
                            int workers = 1);

struct AugmentRunReport {
  size_t images_in = 0;
  size_t images_written = 0;
  size_t boxes = 0;
  size_t degenerate = 0;
  size_t low_visibility = 0;
  std::vector<std::string> failures;  // per-record problems (missing files...)
};

// Reads each record's image from images_dir, writes PNGs to
// out_dir/images and the transformed ground truth to out_dir/annotations.json.
// Output ids equal input ids when copies == 1, else id * copies + copy.
AugmentRunReport AugmentDataset(const std::vector<ImageRecord>& records,
                                const std::filesystem::path& images_dir,
                                const std::filesystem::path& out_dir,
                                const AugmentConfig& config, int workers = 1);

// Turns each rotated box into a 4-vertex instance so box-only datasets can go
// through the same augmentation path.
std::vector<ImageRecord> RecordsFromBoxes(const std::vector<RotatedRecord>& records);

}  // namespace omnibox
