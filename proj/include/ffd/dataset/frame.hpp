#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ffd/core/error.hpp"

namespace ffd {

inline constexpr std::size_t kFrameHeight = 140;
inline constexpr std::size_t kFrameWidth = 210;
inline constexpr std::size_t kChannels = 3;
inline constexpr std::size_t kFrameBytes = kFrameHeight * kFrameWidth * kChannels;

// Interleaved 8-bit image, row-major H x W x C.
struct RawImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;

  RawImage() = default;
  RawImage(std::size_t h, std::size_t w, std::size_t c, std::uint8_t fill = 0)
      : height(h), width(w), channels(c), pixels(h * w * c, fill) {}

  std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c) {
    return pixels[(y * width + x) * channels + c];
  }
  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels[(y * width + x) * channels + c];
  }

  friend bool operator==(const RawImage&, const RawImage&) = default;
};

// One resized eye image (140 x 210 x 3) and its 1-based position in the
// subject's stream.
struct Frame {
  std::vector<std::uint8_t> pixels;
  std::size_t source_index = 1;

  friend bool operator==(const Frame&, const Frame&) = default;
};

// Bilinear resampling with half-pixel centres. Same-size input is copied
// through unchanged.
inline RawImage resize_bilinear(const RawImage& src, std::size_t out_h,
                                std::size_t out_w) {
  if (src.height == 0 || src.width == 0)
    throw InvalidArgument("resize: empty input image");
  if (src.pixels.size() != src.height * src.width * src.channels)
    throw InvalidArgument("resize: pixel buffer does not match dimensions");
  if (src.height == out_h && src.width == out_w) return src;

  RawImage dst(out_h, out_w, src.channels);
  const double sy = static_cast<double>(src.height) / static_cast<double>(out_h);
  const double sx = static_cast<double>(src.width) / static_cast<double>(out_w);

  struct Tap {
    std::size_t lo, hi;
    double frac;
  };
  auto taps = [](std::size_t n_out, std::size_t n_in, double scale) {
    std::vector<Tap> out(n_out);
    for (std::size_t i = 0; i < n_out; ++i) {
      double pos = (static_cast<double>(i) + 0.5) * scale - 0.5;
      pos = std::clamp(pos, 0.0, static_cast<double>(n_in - 1));
      auto lo = static_cast<std::size_t>(std::floor(pos));
      auto hi = std::min(lo + 1, n_in - 1);
      out[i] = {lo, hi, pos - static_cast<double>(lo)};
    }
    return out;
  };
  const auto ty = taps(out_h, src.height, sy);
  const auto tx = taps(out_w, src.width, sx);

  for (std::size_t y = 0; y < out_h; ++y) {
    const auto [y0, y1, fy] = ty[y];
    for (std::size_t x = 0; x < out_w; ++x) {
      const auto [x0, x1, fx] = tx[x];
      for (std::size_t c = 0; c < src.channels; ++c) {
        const double top = src.at(y0, x0, c) * (1.0 - fx) + src.at(y0, x1, c) * fx;
        const double bottom = src.at(y1, x0, c) * (1.0 - fx) + src.at(y1, x1, c) * fx;
        const double v = top * (1.0 - fy) + bottom * fy;
        dst.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return dst;
}

// Brings a cropped eye image to the model resolution (140 high, 210 wide).
inline Frame resize_frame(const RawImage& raw, std::size_t source_index = 1) {
  if (raw.channels != kChannels)
    throw InvalidArgument("resize_frame: expected 3 channels, got " +
                          std::to_string(raw.channels));
  auto resized = resize_bilinear(raw, kFrameHeight, kFrameWidth);
  return Frame{std::move(resized.pixels), source_index};
}

}  // namespace ffd
