#include "omnibox/augment.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "omnibox/error.hpp"
#include "parallel.hpp"

namespace omnibox {
namespace {

struct CosSin {
  double c;
  double s;
};

// Exact values at multiples of a quarter turn so right-angle rotations permute
// pixels without interpolation.
CosSin RotationCosSin(double angle) {
  const double quarters = std::round(angle / kHalfPi);
  if (std::abs(angle - quarters * kHalfPi) < 1e-12) {
    const int k = ((static_cast<int>(quarters) % 4) + 4) % 4;
    static constexpr CosSin kTable[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    return kTable[k];
  }
  return {std::cos(angle), std::sin(angle)};
}

Point2 Rotate(Point2 p, Point2 center, CosSin r) {
  const Point2 d = p - center;
  return {center.x + r.c * d.x - r.s * d.y, center.y + r.s * d.x + r.c * d.y};
}

// Source coordinates must already lie in [0, W-1] x [0, H-1] (up to rounding).
void SampleBilinear(const ImageBuffer& src, double x, double y, uint8_t* out) {
  x = std::clamp(x, 0.0, static_cast<double>(src.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(src.height - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, src.width - 1);
  const int y1 = std::min(y0 + 1, src.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const uint8_t* p00 = src.at(x0, y0);
  const uint8_t* p10 = src.at(x1, y0);
  const uint8_t* p01 = src.at(x0, y1);
  const uint8_t* p11 = src.at(x1, y1);
  for (int c = 0; c < 3; ++c) {
    const double top = (1.0 - fx) * p00[c] + fx * p10[c];
    const double bottom = (1.0 - fx) * p01[c] + fx * p11[c];
    const double v = (1.0 - fy) * top + fy * bottom;
    out[c] = static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  }
}

bool InsideGrid(double x, double y, int width, int height) {
  constexpr double kEps = 1e-9;
  return x >= -kEps && y >= -kEps && x <= width - 1 + kEps &&
         y <= height - 1 + kEps;
}

void CheckParams(const FisheyeParams& params) {
  if (!(params.f > 0.0) || !std::isfinite(params.f)) {
    throw InvalidInput("fisheye focal length must be positive");
  }
  if (params.out_w <= 0 || params.out_h <= 0) {
    throw InvalidInput("fisheye output size must be positive");
  }
}

uint64_t SeedWord(uint64_t v, int half) {
  return half == 0 ? (v & 0xffffffffu) : (v >> 32);
}

}  // namespace

Point2 OutputOrigin(const FisheyeParams& params) {
  return {static_cast<double>(params.out_w / 2),
          static_cast<double>(params.out_h / 2)};
}

std::optional<Point2> FisheyeProject(Point2 qe, const FisheyeParams& params) {
  const double r_e = Norm(qe);
  if (r_e == 0.0) return params.qc;
  const double angle = r_e / params.f;
  if (angle >= kHalfPi) return std::nullopt;
  const double scale = params.f * std::tan(angle) / r_e;
  return scale * qe + params.qc;
}

std::optional<Point2> FisheyeForwardMap(Point2 qe, const FisheyeParams& params,
                                        ImageSize source) {
  const auto qp = FisheyeProject(qe, params);
  if (!qp) return std::nullopt;
  if (qp->x < 0.0 || qp->y < 0.0 || qp->x > source.width - 1 ||
      qp->y > source.height - 1) {
    return std::nullopt;
  }
  return qp;
}

Point2 FisheyeInverseMap(Point2 qp, const FisheyeParams& params) {
  const Point2 d = qp - params.qc;
  const double r_p = Norm(d);
  if (r_p == 0.0) return {0.0, 0.0};
  const double angle = std::atan(r_p / params.f);
  return (params.f * angle / r_p) * d;
}

WarpResult WarpImage(const ImageBuffer& src, const FisheyeParams& params,
                     int workers) {
  CheckParams(params);
  if (src.empty()) throw InvalidInput("cannot warp an empty image");
  WarpResult out;
  out.image = ImageBuffer(params.out_w, params.out_h);
  out.mask.assign(static_cast<size_t>(params.out_w) * params.out_h, 0);
  const Point2 origin = OutputOrigin(params);
  const ImageSize source{src.width, src.height};
  internal::ParallelFor(static_cast<size_t>(params.out_h), workers, [&](size_t row) {
    const int v = static_cast<int>(row);
    for (int u = 0; u < params.out_w; ++u) {
      const Point2 qe{u - origin.x, v - origin.y};
      const auto qp = FisheyeForwardMap(qe, params, source);
      if (!qp) continue;
      SampleBilinear(src, qp->x, qp->y, out.image.at(u, v));
      out.mask[static_cast<size_t>(v) * params.out_w + u] = 1;
    }
  });
  return out;
}

Polygon MapSegmentVertices(std::span<const Point2> segment,
                           const FisheyeParams& params) {
  CheckParams(params);
  const Point2 origin = OutputOrigin(params);
  Polygon mapped;
  mapped.reserve(segment.size());
  for (const Point2& p : segment) {
    const Point2 qe = FisheyeInverseMap(p, params);
    const Point2 grid{std::round(qe.x) + origin.x, std::round(qe.y) + origin.y};
    if (grid.x < 0.0 || grid.y < 0.0 || grid.x > params.out_w - 1 ||
        grid.y > params.out_h - 1) {
      continue;
    }
    mapped.push_back(grid);
  }
  return mapped;
}

Point2 ImageCenter(ImageSize size) {
  return {0.5 * (size.width - 1), 0.5 * (size.height - 1)};
}

ImageBuffer RotateImage(const ImageBuffer& src, double angle, int workers) {
  if (src.empty()) throw InvalidInput("cannot rotate an empty image");
  ImageBuffer out(src.width, src.height);
  const Point2 center = ImageCenter({src.width, src.height});
  const CosSin inverse = RotationCosSin(-angle);
  internal::ParallelFor(static_cast<size_t>(src.height), workers, [&](size_t row) {
    const int v = static_cast<int>(row);
    for (int u = 0; u < src.width; ++u) {
      const Point2 s = Rotate({static_cast<double>(u), static_cast<double>(v)},
                              center, inverse);
      if (!InsideGrid(s.x, s.y, src.width, src.height)) continue;
      SampleBilinear(src, s.x, s.y, out.at(u, v));
    }
  });
  return out;
}

std::vector<GeneratedBox> RegenerateBoxes(const ImageRecord& record) {
  std::vector<GeneratedBox> boxes;
  for (const InstanceAnnotation& inst : record.instances) {
    if (inst.excluded()) continue;
    size_t vertices = 0;
    for (const Polygon& seg : inst.segments) vertices += seg.size();
    if (vertices == 0) continue;
    boxes.push_back(GenerateBox(inst, record.width, record.height));
  }
  return boxes;
}

AugmentedSample RotateImageAndAnnotations(const ImageRecord& record,
                                          const ImageBuffer& image,
                                          double angle, int workers) {
  AugmentedSample out;
  out.image = RotateImage(image, angle, workers);
  out.record = record;
  const Point2 center = ImageCenter({image.width, image.height});
  const CosSin rot = RotationCosSin(angle);
  for (InstanceAnnotation& inst : out.record.instances) {
    inst.upright_box.reset();
    for (Polygon& seg : inst.segments) {
      for (Point2& p : seg) p = Rotate(p, center, rot);
    }
  }
  out.boxes = RegenerateBoxes(out.record);
  return out;
}

AugmentedSample ApplyFisheye(const ImageRecord& record, const ImageBuffer& image,
                             const FisheyeParams& params, int workers) {
  AugmentedSample out;
  WarpResult warped = WarpImage(image, params, workers);
  out.image = std::move(warped.image);
  out.record = record;
  out.record.width = params.out_w;
  out.record.height = params.out_h;
  for (InstanceAnnotation& inst : out.record.instances) {
    inst.upright_box.reset();
    std::vector<Polygon> mapped;
    for (const Polygon& seg : inst.segments) {
      Polygon m = MapSegmentVertices(seg, params);
      if (!m.empty()) mapped.push_back(std::move(m));
    }
    inst.segments = std::move(mapped);
  }
  out.boxes = RegenerateBoxes(out.record);
  return out;
}

AugmentRng::AugmentRng(uint64_t seed, uint64_t stream) {
  std::seed_seq seq{SeedWord(seed, 0), SeedWord(seed, 1), SeedWord(stream, 0),
                    SeedWord(stream, 1)};
  engine_.seed(seq);
}

double AugmentRng::Uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double AugmentRng::Uniform(double lo, double hi) {
  return lo + (hi - lo) * Uniform();
}

void ValidateConfig(const AugmentConfig& config) {
  if (!(config.rotation_min <= config.rotation_max)) {
    throw InvalidInput("rotation range is empty");
  }
  if (!(config.fisheye_probability >= 0.0 && config.fisheye_probability <= 1.0)) {
    throw InvalidInput("fisheye probability must lie in [0, 1]");
  }
  if (!(config.f_min > 0.0 && config.f_min <= config.f_max)) {
    throw InvalidInput("focal range must be positive and non-empty");
  }
  if (!(config.qc_jitter >= 0.0 && config.qc_jitter <= 0.5)) {
    throw InvalidInput("optical-axis jitter must lie in [0, 0.5]");
  }
  if (config.out_w < 0 || config.out_h < 0 || config.copies < 1) {
    throw InvalidInput("output size must be >= 0 and copies >= 1");
  }
}

FisheyeParams SampleParams(const AugmentConfig& config, ImageSize source,
                           AugmentRng& rng) {
  const double half_diagonal = 0.5 * std::hypot(source.width, source.height);
  FisheyeParams params;
  params.f = rng.Uniform(config.f_min, config.f_max) * half_diagonal;
  const Point2 center = ImageCenter(source);
  const double jx = rng.Uniform(-config.qc_jitter, config.qc_jitter);
  const double jy = rng.Uniform(-config.qc_jitter, config.qc_jitter);
  params.qc = {std::clamp(center.x + jx * source.width, 0.0, source.width - 1.0),
               std::clamp(center.y + jy * source.height, 0.0, source.height - 1.0)};
  const int side = std::min(source.width, source.height);
  params.out_w = config.out_w > 0 ? config.out_w : side;
  params.out_h = config.out_h > 0 ? config.out_h : side;
  return params;
}

AugmentedSample AugmentOnce(const ImageRecord& record, const ImageBuffer& image,
                            const AugmentConfig& config, AugmentRng& rng,
                            int workers) {
  // Draw order is fixed so a stream always yields the same decisions.
  const double angle = rng.Uniform(config.rotation_min, config.rotation_max);
  const bool fisheye = rng.Uniform() < config.fisheye_probability;
  const FisheyeParams params =
      SampleParams(config, {image.width, image.height}, rng);

  AugmentedSample sample;
  if (config.rotate) {
    sample = RotateImageAndAnnotations(record, image, angle, workers);
  } else {
    sample.image = image;
    sample.record = record;
  }
  if (fisheye) sample = ApplyFisheye(sample.record, sample.image, params, workers);
  if (config.photometric) config.photometric(sample.image, rng);
  sample.boxes = RegenerateBoxes(sample.record);
  return sample;
}

std::vector<ImageRecord> RecordsFromBoxes(const std::vector<RotatedRecord>& records) {
  std::vector<ImageRecord> out;
  out.reserve(records.size());
  for (const RotatedRecord& r : records) {
    ImageRecord rec;
    rec.image_id = r.image_id;
    rec.file = r.file;
    rec.width = r.width;
    rec.height = r.height;
    int64_t next = 0;
    for (const RotatedEntry& e : r.boxes) {
      InstanceAnnotation inst;
      inst.id = next++;
      inst.image_id = r.image_id;
      inst.segments.push_back(BoxCorners(e.box));
      rec.instances.push_back(std::move(inst));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

AugmentRunReport AugmentDataset(const std::vector<ImageRecord>& records,
                                const std::filesystem::path& images_dir,
                                const std::filesystem::path& out_dir,
                                const AugmentConfig& config, int workers) {
  ValidateConfig(config);
  const std::filesystem::path image_out = out_dir / "images";
  std::error_code ec;
  std::filesystem::create_directories(image_out, ec);
  if (ec) {
    throw IoError("cannot create '" + image_out.string() + "': " + ec.message());
  }

  const size_t copies = static_cast<size_t>(config.copies);
  struct Task {
    std::optional<RotatedRecord> record;
    size_t degenerate = 0;
    size_t low_visibility = 0;
    std::string failure;
  };
  std::vector<Task> tasks(records.size() * copies);

  internal::ParallelFor(tasks.size(), workers, [&](size_t t) {
    const ImageRecord& src = records[t / copies];
    const size_t copy = t % copies;
    Task& task = tasks[t];
    try {
      const ImageBuffer image = ReadImage(images_dir / src.file);
      if (image.width != src.width || image.height != src.height) {
        throw FormatError("image size " + std::to_string(image.width) + "x" +
                          std::to_string(image.height) +
                          " differs from annotation");
      }
      AugmentRng rng(config.seed,
                     static_cast<uint64_t>(src.image_id) * copies + copy);
      const AugmentedSample sample = AugmentOnce(src, image, config, rng);

      const std::string name = std::filesystem::path(src.file).stem().string() +
                               "_" + std::to_string(copy) + ".png";
      WritePng(sample.image, image_out / name);

      RotatedRecord out;
      out.image_id = copies == 1 ? src.image_id
                                 : src.image_id * static_cast<int64_t>(copies) +
                                       static_cast<int64_t>(copy);
      out.file = "images/" + name;
      out.width = sample.image.width;
      out.height = sample.image.height;
      for (const GeneratedBox& g : sample.boxes) {
        if (g.degenerate) {
          ++task.degenerate;
        } else if (g.visibility < config.min_visibility) {
          ++task.low_visibility;
        } else {
          out.boxes.push_back({g.box, std::nullopt, std::nullopt});
        }
      }
      task.record = std::move(out);
    } catch (const Error& e) {
      task.failure = "image " + std::to_string(src.image_id) + " (" + src.file +
                     "): " + e.what();
    }
  });

  AugmentRunReport report;
  report.images_in = records.size();
  std::vector<RotatedRecord> written;
  for (Task& task : tasks) {
    report.degenerate += task.degenerate;
    report.low_visibility += task.low_visibility;
    if (!task.failure.empty()) report.failures.push_back(task.failure);
    if (!task.record) continue;
    report.boxes += task.record->boxes.size();
    written.push_back(std::move(*task.record));
  }
  std::stable_sort(written.begin(), written.end(),
                   [](const RotatedRecord& a, const RotatedRecord& b) {
                     return a.image_id < b.image_id;
                   });
  report.images_written = written.size();
  SaveRotatedDataset(written, out_dir / "annotations.json");
  return report;
}

}  // namespace omnibox
