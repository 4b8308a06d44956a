#pragma once

#include <png.h>

#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "ffd/core/error.hpp"
#include "ffd/dataset/frame.hpp"

namespace ffd {

// Frames are stored as 8-bit greyscale PNG; all three channels of a
// synthetic frame carry the same value.
inline void write_gray_png(const RawImage& img, const std::filesystem::path& path) {
  if (img.channels != 3 && img.channels != 1)
    throw InvalidArgument("write_gray_png: expected 1 or 3 channels");
  std::vector<std::uint8_t> gray(img.height * img.width);
  for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = img.pixels[i * img.channels];

  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, gray.data(), 0, nullptr))
    throw DataError("cannot write " + path.string() + ": " + image.message);
}

// Loads any PNG as interleaved RGB.
inline RawImage read_png_rgb(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw DataError("cannot read " + path.string() + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  RawImage out(image.height, image.width, 3);
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw DataError("cannot decode " + path.string() + ": " + image.message);
  }
  return out;
}

}  // namespace ffd
