#include "omnibox/annotations.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "doctest.h"
#include "omnibox/error.hpp"
#include "oracles.hpp"

using namespace omnibox;
namespace fs = std::filesystem;

namespace {

const char* kTwoImages = R"({
  "images": [{"id": 1, "file_name": "a.png", "width": 100, "height": 80},
             {"id": 2, "file_name": "b.png", "width": 100, "height": 80}],
  "categories": [{"id": 1, "name": "person"}, {"id": 3, "name": "car"}],
  "annotations": [
    {"id": 10, "image_id": 1, "category_id": 1, "iscrowd": 0,
     "segmentation": [[10, 10, 30, 10, 30, 50, 10, 50]], "bbox": [10, 10, 20, 40]},
    {"id": 11, "image_id": 2, "category_id": 3, "iscrowd": 0,
     "segmentation": [[1, 1, 5, 1, 5, 5]]}
  ]
})";

fs::path TempDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("omnibox_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int ErrorCodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return static_cast<int>(e.code());
  }
  return -1;
}

}  // namespace

TEST_CASE("COCO filter keeps only images with the category") {
  const CocoDataset ds = ParseCoco(kTwoImages, "person");
  REQUIRE(ds.records.size() == 1);
  const ImageRecord& r = ds.records[0];
  CHECK(r.image_id == 1);
  CHECK(r.file == "a.png");
  REQUIRE(r.instances.size() == 1);
  REQUIRE(r.instances[0].segments.size() == 1);
  CHECK(r.instances[0].segments[0].size() == 4);
  REQUIRE(r.instances[0].upright_box.has_value());
  CHECK(r.instances[0].upright_box->cx == doctest::Approx(20.0));
  CHECK(r.instances[0].upright_box->h == doctest::Approx(40.0));
  CHECK(ds.report.images_in_file == 2);
  CHECK(ds.report.images_selected == 1);

  // Numeric ids select the same way.
  CHECK(ParseCoco(kTwoImages, "3").records.at(0).image_id == 2);
}

TEST_CASE("crowd and RLE instances are kept but excluded") {
  const char* doc = R"({
    "images": [{"id": 5, "file_name": "c.png", "width": 50, "height": 50}],
    "categories": [{"id": 1, "name": "person"}],
    "annotations": [
      {"id": 1, "image_id": 5, "category_id": 1, "iscrowd": 1,
       "segmentation": {"counts": [1, 2, 3], "size": [50, 50]}},
      {"id": 2, "image_id": 5, "category_id": 1, "iscrowd": 1,
       "segmentation": [[1, 1, 9, 1, 9, 9]]}
    ]})";
  const CocoDataset ds = ParseCoco(doc, "person");
  REQUIRE(ds.records.size() == 1);
  REQUIRE(ds.records[0].instances.size() == 2);
  CHECK(ds.records[0].instances[0].rle);
  CHECK(ds.records[0].instances[0].excluded());
  CHECK(ds.records[0].instances[1].iscrowd);
  CHECK(ds.records[0].instances[1].excluded());
  CHECK(ds.report.crowd_instances == 2);
  CHECK(ds.report.rle_instances == 1);
}

TEST_CASE("vertices are clamped to the image and counted") {
  const char* doc = R"({
    "images": [{"id": 1, "file_name": "a.png", "width": 20, "height": 10}],
    "categories": [{"id": 1, "name": "person"}],
    "annotations": [{"id": 1, "image_id": 1, "category_id": 1,
      "segmentation": [[-5, 2, 25, 2, 10, 15], [1, 2, 3]]}]})";
  const CocoDataset ds = ParseCoco(doc, "person");
  const Polygon& seg = ds.records.at(0).instances.at(0).segments.at(0);
  CHECK(seg[0].x == 0.0);
  CHECK(seg[1].x == 20.0);
  CHECK(seg[2].y == 10.0);
  CHECK(ds.report.clamped_vertices == 3);
  CHECK(ds.report.dropped_segments == 1);
  for (const Point2& p : seg) {
    CHECK(p.x >= 0.0);
    CHECK(p.x <= 20.0);
    CHECK(p.y >= 0.0);
    CHECK(p.y <= 10.0);
  }
}

TEST_CASE("missing image dimensions become record errors") {
  const char* doc = R"({
    "images": [{"id": 1, "file_name": "a.png"}],
    "categories": [{"id": 1, "name": "person"}],
    "annotations": [
      {"id": 1, "image_id": 1, "category_id": 1, "segmentation": [[0, 0, 1, 0, 1, 1]]},
      {"id": 2, "image_id": 99, "category_id": 1, "segmentation": [[0, 0, 1, 0, 1, 1]]}]})";
  const CocoDataset ds = ParseCoco(doc, "person");
  CHECK(ds.records.empty());
  CHECK(ds.report.record_errors.size() == 2);
}

TEST_CASE("malformed COCO reports a byte offset") {
  try {
    ParseCoco("{\"images\": [1, 2,, 3]}", "person");
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kFormat);
    CHECK(std::string(e.what()).find("byte") != std::string::npos);
  }
}

TEST_CASE("empty file and unknown category warn instead of failing") {
  const CocoDataset empty = ParseCoco("  \n", "person");
  CHECK(empty.records.empty());
  CHECK(empty.report.warnings.size() == 1);
  const CocoDataset none = ParseCoco(kTwoImages, "giraffe");
  CHECK(none.records.empty());
  CHECK(none.report.warnings.size() == 1);
}

TEST_CASE("rotated ground truth converts degrees and canonicalizes") {
  const char* doc = R"({"images": [{"id": 3, "file": "x.png", "width": 200, "height": 200,
    "boxes": [{"cx": 100, "cy": 100, "w": 20, "h": 50, "angle_deg": 30},
              {"cx": 50, "cy": 60, "w": 20, "h": 50, "angle_deg": 120}]}]})";
  const auto records = ParseRotatedGt(doc, RotatedFormat::kInternalJson);
  REQUIRE(records.size() == 1);
  const RotatedBox& a = records[0].boxes.at(0).box;
  CHECK(a.theta == doctest::Approx(kPi / 6));
  CHECK(a.h == 50.0);
  const RotatedBox& b = records[0].boxes.at(1).box;
  CHECK(b.theta >= -kHalfPi);
  CHECK(b.theta < kHalfPi);
  const RotatedBox raw{50, 60, 20, 50, 120.0 * kPi / 180.0};
  CHECK(oracle::CornerSetDistance(BoxCorners(b), BoxCorners(raw)) < 1e-9);
}

TEST_CASE("cepdof-json entries keyed by image name") {
  const char* doc = R"({"b.jpg": [[10, 20, 4, 8, 90, 0.7]], "a.jpg": [[1, 2, 3, 4, 0]]})";
  const auto records = ParseRotatedGt(doc, RotatedFormat::kCepdofJson);
  REQUIRE(records.size() == 2);
  CHECK(records[0].file == "a.jpg");
  CHECK(records[0].image_id == 1);
  CHECK(records[1].file == "b.jpg");
  REQUIRE(records[1].boxes.at(0).score.has_value());
  CHECK(*records[1].boxes[0].score == doctest::Approx(0.7));
  CHECK_THROWS_AS(ParseRotatedGt(R"({"a": [[1, 2, 3]]})", RotatedFormat::kCepdofJson),
                  Error);
}

TEST_CASE("unknown rotated format is rejected") {
  CHECK(ErrorCodeOf([] { ParseRotatedFormat("yaml"); }) ==
        static_cast<int>(ErrorCode::kInvalidInput));
  CHECK(ParseRotatedFormat("cepdof-json") == RotatedFormat::kCepdofJson);
}

TEST_CASE("save and load round-trip, including an empty dataset and unicode path") {
  const fs::path dir = TempDir("annotations");
  SaveRotatedDataset({}, dir / "empty.json");
  CHECK(LoadRotatedGt(dir / "empty.json", RotatedFormat::kInternalJson).empty());

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 300.0), t(-kPi, kPi), s(0.0, 1.0);
  std::vector<RotatedRecord> records;
  for (int i = 0; i < 5; ++i) {
    RotatedRecord r;
    r.image_id = 100 - i;
    r.file = "img_" + std::to_string(i) + ".png";
    r.width = 320;
    r.height = 240;
    for (int k = 0; k < i + 1; ++k) {
      RotatedEntry e;
      e.box = Canonicalize(u(rng), u(rng), 1 + u(rng) / 10, 1 + u(rng) / 10, t(rng));
      if (k % 2) e.score = s(rng);
      if (k % 3 == 1) e.a_hat = s(rng);
      r.boxes.push_back(e);
    }
    records.push_back(r);
  }
  const fs::path path = dir / "d\xC3\xA9j\xC3\xA0_vu.json";
  SaveRotatedDataset(records, path);
  const auto loaded = LoadRotatedGt(path, RotatedFormat::kInternalJson);
  REQUIRE(loaded.size() == records.size());
  // Records come back sorted by id.
  for (size_t i = 0; i < loaded.size(); ++i) {
    const RotatedRecord& want = records[records.size() - 1 - i];
    const RotatedRecord& got = loaded[i];
    CHECK(got.image_id == want.image_id);
    CHECK(got.file == want.file);
    REQUIRE(got.boxes.size() == want.boxes.size());
    for (size_t k = 0; k < got.boxes.size(); ++k) {
      CHECK(std::abs(got.boxes[k].box.cx - want.boxes[k].box.cx) < 1e-6);
      CHECK(std::abs(got.boxes[k].box.h - want.boxes[k].box.h) < 1e-6);
      CHECK(std::abs(got.boxes[k].box.theta - want.boxes[k].box.theta) < 1e-6);
      CHECK(got.boxes[k].score.has_value() == want.boxes[k].score.has_value());
      CHECK(got.boxes[k].a_hat.has_value() == want.boxes[k].a_hat.has_value());
    }
  }
  // Save is deterministic and a second pass reproduces the same bytes.
  SaveRotatedDataset(loaded, dir / "again.json");
  CHECK(ReadTextFile(dir / "again.json") == SerializeRotatedDataset(loaded));
  fs::remove_all(dir);
}

TEST_CASE("I/O failures carry the path") {
  try {
    LoadCoco("/nonexistent/dir/coco.json", "person");
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIo);
    CHECK(std::string(e.what()).find("/nonexistent/dir/coco.json") != std::string::npos);
  }
  CHECK(ErrorCodeOf([] { SaveRotatedDataset({}, "/nonexistent/dir/out.json"); }) ==
        static_cast<int>(ErrorCode::kIo));
}
