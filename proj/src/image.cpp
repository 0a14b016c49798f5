#include "omnibox/image.hpp"

#include <png.h>
#include <stdio.h>
#include <jpeglib.h>

#include <array>
#include <csetjmp>
#include <cstring>
#include <memory>
#include <string>

#include "omnibox/annotations.hpp"
#include "omnibox/error.hpp"

namespace omnibox {
namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

ImageBuffer DecodePng(const std::string& bytes, const std::string& name) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw FormatError("cannot decode PNG '" + name + "': " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  ImageBuffer out(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw FormatError("cannot decode PNG '" + name + "': " + message);
  }
  return out;
}

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  std::array<char, JMSG_LENGTH_MAX> message;
};

void OnJpegError(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message.data());
  std::longjmp(err->jump, 1);
}

ImageBuffer DecodeJpeg(const std::string& bytes, const std::string& name) {
  jpeg_decompress_struct cinfo;
  JpegError err;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = OnJpegError;
  // No C++ objects with destructors may be created between setjmp and the
  // last libjpeg call below.
  ImageBuffer out;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw FormatError("cannot decode JPEG '" + name + "': " + err.message.data());
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char*>(bytes.data()),
               static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out.width = static_cast<int>(cinfo.output_width);
  out.height = static_cast<int>(cinfo.output_height);
  out.pixels.resize(static_cast<size_t>(out.width) * out.height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.pixels.data() +
                   static_cast<size_t>(cinfo.output_scanline) * out.width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

}  // namespace

ImageBuffer ReadImage(const std::filesystem::path& path) {
  const std::string bytes = ReadTextFile(path);
  static constexpr unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G',
                                               '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) {
    return DecodePng(bytes, path.string());
  }
  if (bytes.size() >= 3 && static_cast<unsigned char>(bytes[0]) == 0xFF &&
      static_cast<unsigned char>(bytes[1]) == 0xD8) {
    return DecodeJpeg(bytes, path.string());
  }
  throw FormatError("unsupported image format '" + path.string() + "'");
}

void WritePng(const ImageBuffer& image, const std::filesystem::path& path) {
  if (image.empty()) throw InvalidInput("cannot write an empty image");
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot open '" + path.string() + "' for writing");
  if (!png_image_write_to_stdio(&png, file.get(), 0, image.pixels.data(), 0,
                                nullptr)) {
    throw IoError("cannot encode PNG '" + path.string() + "': " + png.message);
  }
  if (std::fflush(file.get()) != 0) {
    throw IoError("write failure on '" + path.string() + "'");
  }
}

}  // namespace omnibox
