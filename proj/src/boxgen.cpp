#include "omnibox/boxgen.hpp"

#include <algorithm>

#include "omnibox/error.hpp"
#include "parallel.hpp"

namespace omnibox {

GeneratedBox GenerateBoxFromPoints(std::span<const Point2> vertices,
                                   int image_w, int image_h) {
  if (vertices.empty()) throw InvalidInput("instance has no polygon vertices");
  if (image_w <= 0 || image_h <= 0) throw InvalidInput("image size must be positive");
  const Polygon hull = ConvexHull(vertices);
  GeneratedBox out;
  out.box = MinAreaRect(hull);
  out.degenerate = out.box.area() < kMinBoxArea;
  const double w = image_w;
  const double h = image_h;
  out.normalized = {out.box.cx / w, out.box.cy / h, out.box.w / w,
                    out.box.h / h, out.box.theta};
  out.visibility = Visibility(out.box, image_w, image_h);
  return out;
}

GeneratedBox GenerateBox(const InstanceAnnotation& instance, int image_w,
                         int image_h) {
  Polygon all;
  for (const Polygon& seg : instance.segments) {
    all.insert(all.end(), seg.begin(), seg.end());
  }
  if (all.empty()) {
    throw InvalidInput("instance " + std::to_string(instance.id) +
                       " has no polygon vertices");
  }
  GeneratedBox out = GenerateBoxFromPoints(all, image_w, image_h);
  out.source_instance = instance.id;
  return out;
}

double Visibility(const RotatedBox& box, int image_w, int image_h) {
  const double w = image_w;
  const double h = image_h;
  const double area = box.area();
  if (area <= 0.0) {
    const bool inside =
        box.cx >= 0.0 && box.cx <= w && box.cy >= 0.0 && box.cy <= h;
    return inside ? 1.0 : 0.0;
  }
  const Polygon frame = {{0.0, 0.0}, {w, 0.0}, {w, h}, {0.0, h}};
  const double inside = PolygonArea(ClipConvex(BoxCorners(box), frame));
  return std::min(1.0, inside / area);
}

BoxgenResult GenerateDataset(const std::vector<ImageRecord>& records,
                             const BoxgenOptions& options) {
  struct PerImage {
    RotatedRecord record;
    BoxgenReport report;
  };
  std::vector<PerImage> results(records.size());

  internal::ParallelFor(records.size(), options.workers, [&](size_t i) {
    const ImageRecord& src = records[i];
    PerImage& dst = results[i];
    dst.record.image_id = src.image_id;
    dst.record.file = src.file;
    dst.record.width = src.width;
    dst.record.height = src.height;
    for (const InstanceAnnotation& inst : src.instances) {
      ++dst.report.instances;
      if (inst.excluded()) {
        ++dst.report.excluded;
        continue;
      }
      GeneratedBox gen;
      try {
        gen = GenerateBox(inst, src.width, src.height);
      } catch (const Error& e) {
        ++dst.report.skipped;
        dst.report.messages.push_back("image " + std::to_string(src.image_id) +
                                      ": " + e.what());
        continue;
      }
      if (gen.degenerate) {
        ++dst.report.degenerate;
        continue;
      }
      if (gen.visibility < options.min_visibility) {
        ++dst.report.low_visibility;
        continue;
      }
      dst.record.boxes.push_back({gen.box, std::nullopt, std::nullopt});
      ++dst.report.boxes;
    }
  });

  BoxgenResult out;
  out.records.reserve(results.size());
  for (PerImage& r : results) {
    BoxgenReport& total = out.report;
    ++total.images;
    total.instances += r.report.instances;
    total.boxes += r.report.boxes;
    total.excluded += r.report.excluded;
    total.degenerate += r.report.degenerate;
    total.skipped += r.report.skipped;
    total.low_visibility += r.report.low_visibility;
    total.messages.insert(total.messages.end(), r.report.messages.begin(),
                          r.report.messages.end());
    out.records.push_back(std::move(r.record));
  }
  std::stable_sort(out.records.begin(), out.records.end(),
                   [](const RotatedRecord& a, const RotatedRecord& b) {
                     return a.image_id < b.image_id;
                   });
  return out;
}

}  // namespace omnibox
