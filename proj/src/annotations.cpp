#include "omnibox/annotations.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "omnibox/error.hpp"

namespace omnibox {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr double kDegToRad = kPi / 180.0;
constexpr double kRadToDeg = 180.0 / kPi;

json ParseJson(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw FormatError("JSON syntax error at byte " + std::to_string(e.byte) +
                      ": " + e.what());
  }
}

bool IsBlank(std::string_view text) {
  return std::all_of(text.begin(), text.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

std::optional<int64_t> ParseInteger(std::string_view s) {
  int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

struct ImageInfo {
  std::string file;
  int width = 0;
  int height = 0;
};

std::optional<int64_t> ResolveCategory(const json& doc,
                                       std::string_view category) {
  if (auto id = ParseInteger(category)) return id;
  if (!doc.contains("categories")) return std::nullopt;
  for (const json& c : doc.at("categories")) {
    if (c.value("name", std::string()) == category) return c.at("id").get<int64_t>();
  }
  return std::nullopt;
}

// Returns false when the segment is unusable.
bool DecodePolygon(const json& flat, int width, int height, Polygon* out,
                   size_t* clamped) {
  if (!flat.is_array() || flat.size() % 2 != 0 || flat.size() < 6) return false;
  out->clear();
  out->reserve(flat.size() / 2);
  for (size_t i = 0; i < flat.size(); i += 2) {
    const double x = flat[i].get<double>();
    const double y = flat[i + 1].get<double>();
    if (!std::isfinite(x) || !std::isfinite(y)) return false;
    const double cx = std::clamp(x, 0.0, static_cast<double>(width));
    const double cy = std::clamp(y, 0.0, static_cast<double>(height));
    if (cx != x || cy != y) ++*clamped;
    out->push_back({cx, cy});
  }
  return true;
}

CocoDataset ParseCocoDocument(const json& doc, std::string_view category) {
  CocoDataset result;
  IngestReport& report = result.report;
  if (!doc.is_object()) throw FormatError("COCO annotation root must be an object");

  const auto category_id = ResolveCategory(doc, category);
  if (!category_id) {
    report.category_id = -1;
    report.warnings.push_back("category '" + std::string(category) +
                              "' not present; nothing selected");
    return result;
  }
  report.category_id = *category_id;

  std::map<int64_t, ImageInfo> images;
  if (doc.contains("images")) {
    for (const json& img : doc.at("images")) {
      ImageInfo info;
      info.file = img.value("file_name", std::string());
      info.width = img.value("width", 0);
      info.height = img.value("height", 0);
      images[img.at("id").get<int64_t>()] = std::move(info);
    }
  }
  report.images_in_file = images.size();

  std::map<int64_t, ImageRecord> selected;
  std::map<int64_t, bool> reported_bad_image;
  if (doc.contains("annotations")) {
    for (const json& ann : doc.at("annotations")) {
      if (ann.at("category_id").get<int64_t>() != *category_id) continue;
      ++report.instances;

      InstanceAnnotation inst;
      inst.id = ann.value("id", int64_t{0});
      inst.image_id = ann.at("image_id").get<int64_t>();
      inst.category_id = *category_id;
      inst.iscrowd = ann.value("iscrowd", 0) != 0;
      if (inst.iscrowd) ++report.crowd_instances;

      const auto img = images.find(inst.image_id);
      if (img == images.end()) {
        report.record_errors.push_back("annotation " + std::to_string(inst.id) +
                                       " references unknown image " +
                                       std::to_string(inst.image_id));
        continue;
      }
      const ImageInfo& info = img->second;
      if (info.width <= 0 || info.height <= 0) {
        if (!reported_bad_image[inst.image_id]) {
          reported_bad_image[inst.image_id] = true;
          report.record_errors.push_back("image " + std::to_string(inst.image_id) +
                                         " has no valid dimensions");
        }
        continue;
      }

      if (ann.contains("segmentation")) {
        const json& seg = ann.at("segmentation");
        if (seg.is_object()) {
          inst.rle = true;
          ++report.rle_instances;
        } else if (seg.is_array()) {
          for (const json& flat : seg) {
            Polygon poly;
            if (DecodePolygon(flat, info.width, info.height, &poly,
                              &report.clamped_vertices)) {
              inst.segments.push_back(std::move(poly));
            } else {
              ++report.dropped_segments;
            }
          }
        }
      }
      if (ann.contains("bbox") && ann.at("bbox").size() == 4) {
        const json& b = ann.at("bbox");
        const double x = b[0].get<double>(), y = b[1].get<double>();
        const double w = b[2].get<double>(), h = b[3].get<double>();
        inst.upright_box = AxisBox{x + 0.5 * w, y + 0.5 * h, w, h};
      }

      ImageRecord& record = selected[inst.image_id];
      if (record.instances.empty()) {
        record.image_id = inst.image_id;
        record.file = info.file;
        record.width = info.width;
        record.height = info.height;
      }
      record.instances.push_back(std::move(inst));
    }
  }

  result.records.reserve(selected.size());
  for (auto& [id, record] : selected) result.records.push_back(std::move(record));
  report.images_selected = result.records.size();
  return result;
}

RotatedRecord ParseInternalImage(const json& img) {
  RotatedRecord record;
  record.image_id = img.at("id").get<int64_t>();
  record.file = img.value("file", std::string());
  record.width = img.value("width", 0);
  record.height = img.value("height", 0);
  if (record.width < 0 || record.height < 0) {
    throw FormatError("image " + std::to_string(record.image_id) +
                      " has negative dimensions");
  }
  if (img.contains("boxes")) {
    for (const json& b : img.at("boxes")) {
      const double w = b.at("w").get<double>();
      const double h = b.at("h").get<double>();
      if (!(w >= 0.0) || !(h >= 0.0)) {
        throw FormatError("negative box size in image " +
                          std::to_string(record.image_id));
      }
      RotatedEntry entry;
      entry.box = Canonicalize(b.at("cx").get<double>(), b.at("cy").get<double>(),
                               w, h, b.at("angle_deg").get<double>() * kDegToRad);
      if (b.contains("score")) entry.score = b.at("score").get<double>();
      if (b.contains("a_hat")) entry.a_hat = b.at("a_hat").get<double>();
      record.boxes.push_back(entry);
    }
  }
  return record;
}

std::vector<RotatedRecord> ParseCepdof(const json& doc) {
  if (!doc.is_object()) throw FormatError("cepdof-json root must be an object");
  std::vector<RotatedRecord> records;
  int64_t next_id = 1;
  for (const auto& [name, entries] : doc.items()) {
    RotatedRecord record;
    record.image_id = next_id++;
    record.file = name;
    for (const json& e : entries) {
      if (!e.is_array() || e.size() < 5 || e.size() > 6) {
        throw FormatError("cepdof entry for '" + name +
                          "' must be [cx, cy, w, h, degrees(, score)]");
      }
      RotatedEntry entry;
      entry.box = Canonicalize(e[0].get<double>(), e[1].get<double>(),
                               e[2].get<double>(), e[3].get<double>(),
                               e[4].get<double>() * kDegToRad);
      if (e.size() == 6) entry.score = e[5].get<double>();
      record.boxes.push_back(entry);
    }
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return buffer.str();
}

void WriteTextFile(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

CocoDataset ParseCoco(std::string_view json_text, std::string_view category) {
  if (IsBlank(json_text)) {
    CocoDataset empty;
    empty.report.warnings.push_back("annotation file is empty");
    return empty;
  }
  const json doc = ParseJson(json_text);
  try {
    return ParseCocoDocument(doc, category);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed COCO annotation: ") + e.what());
  }
}

CocoDataset LoadCoco(const std::filesystem::path& path,
                     std::string_view category) {
  return ParseCoco(ReadTextFile(path), category);
}

RotatedFormat ParseRotatedFormat(std::string_view id) {
  if (id == "internal-json") return RotatedFormat::kInternalJson;
  if (id == "cepdof-json") return RotatedFormat::kCepdofJson;
  throw InvalidInput("unknown rotated-box format '" + std::string(id) + "'");
}

std::vector<RotatedRecord> ParseRotatedGt(std::string_view json_text,
                                          RotatedFormat format) {
  const json doc = ParseJson(json_text);
  std::vector<RotatedRecord> records;
  try {
    if (format == RotatedFormat::kCepdofJson) {
      records = ParseCepdof(doc);
    } else {
      if (!doc.is_object() || !doc.contains("images")) {
        throw FormatError("internal-json requires an 'images' array");
      }
      for (const json& img : doc.at("images")) {
        records.push_back(ParseInternalImage(img));
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed rotated-box file: ") + e.what());
  }
  std::stable_sort(records.begin(), records.end(),
                   [](const RotatedRecord& a, const RotatedRecord& b) {
                     return a.image_id < b.image_id;
                   });
  return records;
}

std::vector<RotatedRecord> LoadRotatedGt(const std::filesystem::path& path,
                                         RotatedFormat format) {
  return ParseRotatedGt(ReadTextFile(path), format);
}

std::string SerializeRotatedDataset(const std::vector<RotatedRecord>& records) {
  ordered_json doc;
  doc["meta"] = {
      {"format", "omnibox-rotated"},
      {"version", 1},
      {"units", "pixels"},
      {"angle_unit", "deg"},
      {"normalization", "cx,w divided by width; cy,h divided by height; "
                        "angle unchanged"},
  };
  ordered_json images = ordered_json::array();
  for (const RotatedRecord& r : records) {
    ordered_json img;
    img["id"] = r.image_id;
    img["file"] = r.file;
    img["width"] = r.width;
    img["height"] = r.height;
    ordered_json boxes = ordered_json::array();
    for (const RotatedEntry& e : r.boxes) {
      ordered_json b;
      b["cx"] = e.box.cx;
      b["cy"] = e.box.cy;
      b["w"] = e.box.w;
      b["h"] = e.box.h;
      b["angle_deg"] = e.box.theta * kRadToDeg;
      if (e.score) b["score"] = *e.score;
      if (e.a_hat) b["a_hat"] = *e.a_hat;
      boxes.push_back(std::move(b));
    }
    img["boxes"] = std::move(boxes);
    images.push_back(std::move(img));
  }
  doc["images"] = std::move(images);
  return doc.dump(1) + "\n";
}

void SaveRotatedDataset(const std::vector<RotatedRecord>& records,
                        const std::filesystem::path& path) {
  WriteTextFile(path, SerializeRotatedDataset(records));
}

}  // namespace omnibox
