#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "omnibox/annotations.hpp"
#include "omnibox/geometry.hpp"

namespace omnibox {

// Boxes below this area (px^2) are flagged degenerate and dropped on export.
inline constexpr double kMinBoxArea = 1.0;
inline constexpr double kDefaultMinVisibility = 0.25;

struct GeneratedBox {
  RotatedBox box;         // pixels
  RotatedBox normalized;  // cx, w by image width; cy, h by image height
  int64_t source_instance = 0;
  bool degenerate = false;
  double visibility = 1.0;  // fraction of box area inside the image
};

// Hull of all vertices of all segments of the instance (multi-polygon
// instances give one box), then the minimum-area rectangle.
// Throws InvalidInput when the instance has no vertices.
GeneratedBox GenerateBox(const InstanceAnnotation& instance, int image_w,
                         int image_h);
GeneratedBox GenerateBoxFromPoints(std::span<const Point2> vertices,
                                   int image_w, int image_h);

// Fraction of the box's area lying inside [0, W] x [0, H]. Zero-area boxes
// count as fully visible when their center is inside.
double Visibility(const RotatedBox& box, int image_w, int image_h);

struct BoxgenOptions {
  int workers = 1;
  double min_visibility = kDefaultMinVisibility;
};

struct BoxgenReport {
  size_t images = 0;
  size_t instances = 0;
  size_t boxes = 0;
  size_t excluded = 0;  // crowd / RLE
  size_t degenerate = 0;
  size_t skipped = 0;   // no usable vertices
  size_t low_visibility = 0;
  std::vector<std::string> messages;
};

struct BoxgenResult {
  std::vector<RotatedRecord> records;  // ascending image_id
  BoxgenReport report;
};

// One box per non-excluded, non-degenerate, sufficiently visible instance.
// Output is identical for any worker count.
BoxgenResult GenerateDataset(const std::vector<ImageRecord>& records,
                             const BoxgenOptions& options = {});

}  // namespace omnibox
