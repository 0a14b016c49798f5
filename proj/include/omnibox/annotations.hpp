#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "omnibox/geometry.hpp"

namespace omnibox {

struct InstanceAnnotation {
  int64_t id = 0;
  int64_t image_id = 0;
  int64_t category_id = 0;
  std::vector<Polygon> segments;  // pixel units, each with >= 3 vertices
  std::optional<AxisBox> upright_box;  // pixel units
  bool iscrowd = false;
  bool rle = false;  // segmentation was mask-encoded, not polygons

  // Crowd and RLE instances stay in the record but never produce boxes.
  bool excluded() const { return iscrowd || rle; }
};

struct ImageRecord {
  int64_t image_id = 0;
  std::string file;
  int width = 0;
  int height = 0;
  std::vector<InstanceAnnotation> instances;
};

struct IngestReport {
  int64_t category_id = 0;
  size_t images_in_file = 0;
  size_t images_selected = 0;
  size_t instances = 0;  // selected category, crowd included
  size_t crowd_instances = 0;
  size_t rle_instances = 0;
  size_t dropped_segments = 0;  // fewer than 3 vertices or odd coordinate count
  size_t clamped_vertices = 0;
  std::vector<std::string> record_errors;
  std::vector<std::string> warnings;
};

struct CocoDataset {
  std::vector<ImageRecord> records;  // ascending image_id
  IngestReport report;
};

// `category` is either a category name ("person") or a numeric id.
// Throws FormatError (with byte offset for JSON syntax errors), IoError.
// Annotations referencing unknown or dimensionless images are reported in
// `report.record_errors` and skipped.
CocoDataset ParseCoco(std::string_view json_text, std::string_view category);
CocoDataset LoadCoco(const std::filesystem::path& path,
                     std::string_view category);

struct RotatedEntry {
  RotatedBox box;  // pixel units, canonical
  std::optional<double> score;
  std::optional<double> a_hat;
};

struct RotatedRecord {
  int64_t image_id = 0;
  std::string file;
  int width = 0;  // 0 when the source format does not carry dimensions
  int height = 0;
  std::vector<RotatedEntry> boxes;
};

enum class RotatedFormat { kInternalJson, kCepdofJson };

// Accepts "internal-json" and "cepdof-json".
RotatedFormat ParseRotatedFormat(std::string_view id);

// Angles on disk are degrees; loaded boxes are converted to radians and
// canonicalized. Records come back sorted by image_id.
std::vector<RotatedRecord> ParseRotatedGt(std::string_view json_text,
                                          RotatedFormat format);
std::vector<RotatedRecord> LoadRotatedGt(const std::filesystem::path& path,
                                         RotatedFormat format);

// Internal-json with a fixed field order and a trailing newline.
std::string SerializeRotatedDataset(const std::vector<RotatedRecord>& records);
void SaveRotatedDataset(const std::vector<RotatedRecord>& records,
                        const std::filesystem::path& path);

std::string ReadTextFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, std::string_view text);

}  // namespace omnibox
