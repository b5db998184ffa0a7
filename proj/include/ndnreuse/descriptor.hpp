#pragma once

#include "ndnreuse/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>

namespace ndnreuse {

inline constexpr int kDescriptorInput = 50;
inline constexpr std::size_t kDescriptorSize = 128;

/// 128 non-negative values; unit L2 norm, or all zero for an image without
/// gradient structure.
using Descriptor = std::array<float, kDescriptorSize>;

namespace detail {

inline void
normalize(std::span<double> v)
{
  double n2 = 0;
  for (double x : v)
    n2 += x * x;
  if (n2 <= 0)
    return;
  double inv = 1.0 / std::sqrt(n2);
  for (double& x : v)
    x *= inv;
}

} // namespace detail

/// Dense-grid SIFT-style descriptor of a 50x50 image.
///
/// Gradients by central differences (replicated border), 25 keypoint patches
/// of 16x16 pixels with corners on an 8-pixel grid, each a 4x4 grid of cells
/// with 8 hard-assigned orientation bins. Every patch vector is normalized,
/// clamped at 0.2 and renormalized; the 25 patch vectors are then reduced by
/// element-wise maximum and the result normalized once more.
inline Descriptor
compute_descriptor(const GrayImage& img)
{
  constexpr int N = kDescriptorInput;
  if (img.width != N || img.height != N)
    throw std::invalid_argument("compute_descriptor: input must be 50x50 (resize first)");

  std::array<double, N * N> mag{};
  std::array<int, N * N> bin{};
  constexpr double two_pi = 2 * std::numbers::pi;
  for (int y = 0; y < N; ++y) {
    for (int x = 0; x < N; ++x) {
      double gx = (static_cast<double>(img.at(std::min(x + 1, N - 1), y)) - img.at(std::max(x - 1, 0), y)) / 2;
      double gy = (static_cast<double>(img.at(x, std::min(y + 1, N - 1))) - img.at(x, std::max(y - 1, 0))) / 2;
      double m = std::sqrt(gx * gx + gy * gy);
      double theta = std::atan2(gy, gx);
      if (theta < 0)
        theta += two_pi;
      int b = static_cast<int>(theta / (two_pi / 8));
      mag[y * N + x] = m;
      bin[y * N + x] = std::clamp(b, 0, 7);
    }
  }

  std::array<double, kDescriptorSize> reduced{};
  std::array<double, kDescriptorSize> patch{};
  for (int py = 0; py <= 32; py += 8) {
    for (int px = 0; px <= 32; px += 8) {
      patch.fill(0);
      for (int dy = 0; dy < 16; ++dy) {
        for (int dx = 0; dx < 16; ++dx) {
          int x = px + dx;
          int y = py + dy;
          int cell = (dy / 4) * 4 + (dx / 4);
          patch[cell * 8 + bin[y * N + x]] += mag[y * N + x];
        }
      }
      detail::normalize(patch);
      for (double& v : patch)
        v = std::min(v, 0.2);
      detail::normalize(patch);
      for (std::size_t i = 0; i < kDescriptorSize; ++i)
        reduced[i] = std::max(reduced[i], patch[i]);
    }
  }
  detail::normalize(reduced);

  Descriptor out;
  for (std::size_t i = 0; i < kDescriptorSize; ++i)
    out[i] = static_cast<float>(reduced[i]);
  return out;
}

/// Resize to 50x50 and describe; the full per-image workflow.
inline Descriptor
describe_image(const GrayImage& img)
{
  if (img.width == kDescriptorInput && img.height == kDescriptorInput)
    return compute_descriptor(img);
  return compute_descriptor(resize_bilinear(img, kDescriptorInput, kDescriptorInput));
}

inline float
squared_distance(std::span<const float> a, std::span<const float> b) noexcept
{
  float s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    float d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// Euclidean distance.
inline double
distance(const Descriptor& a, const Descriptor& b) noexcept
{
  return std::sqrt(static_cast<double>(squared_distance(a, b)));
}

inline bool
is_degenerate(const Descriptor& d) noexcept
{
  return std::all_of(d.begin(), d.end(), [](float v) { return v == 0.0f; });
}

} // namespace ndnreuse
