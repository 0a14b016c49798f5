#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace omnibox {

// Interleaved 8-bit RGB, row-major, pixels.size() == width * height * 3.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;

  ImageBuffer() = default;
  ImageBuffer(int w, int h)
      : width(w), height(h), pixels(static_cast<size_t>(w) * h * 3, 0) {}

  uint8_t* at(int x, int y) {
    return pixels.data() + (static_cast<size_t>(y) * width + x) * 3;
  }
  const uint8_t* at(int x, int y) const {
    return pixels.data() + (static_cast<size_t>(y) * width + x) * 3;
  }
  bool empty() const { return width <= 0 || height <= 0; }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;
};

// PNG or JPEG, detected from the file signature. Throws IoError / FormatError.
ImageBuffer ReadImage(const std::filesystem::path& path);

void WritePng(const ImageBuffer& image, const std::filesystem::path& path);

}  // namespace omnibox
