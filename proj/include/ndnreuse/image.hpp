#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ndnreuse {

/// Row-major 8-bit grayscale image.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  GrayImage() = default;

  GrayImage(int w, int h, std::uint8_t fill = 0)
    : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill)
  {
    if (w < 0 || h < 0)
      throw std::invalid_argument("GrayImage: negative dimension");
  }

  GrayImage(int w, int h, std::vector<std::uint8_t> pixels)
    : width(w), height(h), data(std::move(pixels))
  {
    if (w < 0 || h < 0 || data.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(h))
      throw std::invalid_argument("GrayImage: width*height does not match pixel count");
  }

  bool empty() const noexcept { return width == 0 || height == 0; }

  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Bilinear resize with pixel-center alignment and replicated borders.
///
/// Output pixel (x, y) samples the source at ((x + 0.5) * in_w / out_w - 0.5,
/// (y + 0.5) * in_h / out_h - 0.5), clamped to the source extent, and rounds
/// to the nearest integer.
inline GrayImage
resize_bilinear(const GrayImage& img, int out_w, int out_h)
{
  if (img.empty())
    throw std::invalid_argument("resize_bilinear: zero-dimension input");
  if (out_w <= 0 || out_h <= 0)
    throw std::invalid_argument("resize_bilinear: zero-dimension output");

  GrayImage out(out_w, out_h);
  const double sx = static_cast<double>(img.width) / out_w;
  const double sy = static_cast<double>(img.height) / out_h;

  for (int y = 0; y < out_h; ++y) {
    double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(img.height - 1));
    int y0 = static_cast<int>(fy);
    int y1 = std::min(y0 + 1, img.height - 1);
    double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(img.width - 1));
      int x0 = static_cast<int>(fx);
      int x1 = std::min(x0 + 1, img.width - 1);
      double wx = fx - x0;
      double v = (1 - wx) * (1 - wy) * img.at(x0, y0) + wx * (1 - wy) * img.at(x1, y0) +
                 (1 - wx) * wy * img.at(x0, y1) + wx * wy * img.at(x1, y1);
      out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return out;
}

} // namespace ndnreuse
