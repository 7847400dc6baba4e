// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "rstg/syncmnist.hpp"

namespace rstg::syncmnist {

namespace {

struct Point {
  double x, y;
};
using Stroke = std::vector<Point>;

Stroke ellipse(double cx, double cy, double rx, double ry, int segments = 20) {
  Stroke s;
  for (int i = 0; i <= segments; ++i) {
    const double a = 2.0 * std::numbers::pi * i / segments;
    s.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
  }
  return s;
}

// Glyph outlines in a unit box, x to the right, y downwards.
std::vector<Stroke> glyph(int digit) {
  switch (digit) {
    case 0: return {ellipse(0.5, 0.5, 0.28, 0.4)};
    case 1: return {{{0.35, 0.25}, {0.52, 0.1}, {0.52, 0.9}}};
    case 2:
      return {{{0.25, 0.3}, {0.35, 0.14}, {0.52, 0.1}, {0.68, 0.16}, {0.72, 0.32}, {0.62, 0.5}, {0.25, 0.88},
               {0.78, 0.88}}};
    case 3:
      return {{{0.25, 0.14}, {0.72, 0.14}, {0.45, 0.44}, {0.68, 0.56}, {0.72, 0.74}, {0.56, 0.88}, {0.25, 0.84}}};
    case 4: return {{{0.64, 0.9}, {0.64, 0.1}, {0.2, 0.64}, {0.8, 0.64}}};
    case 5:
      return {{{0.72, 0.12}, {0.3, 0.12}, {0.27, 0.46}, {0.55, 0.42}, {0.72, 0.56}, {0.72, 0.76}, {0.55, 0.9},
               {0.25, 0.84}}};
    case 6:
      return {{{0.68, 0.12}, {0.42, 0.28}, {0.29, 0.58}, {0.32, 0.8}, {0.5, 0.9}, {0.68, 0.8}, {0.7, 0.62},
               {0.55, 0.5}, {0.3, 0.56}}};
    case 7: return {{{0.22, 0.12}, {0.78, 0.12}, {0.42, 0.9}}};
    case 8: return {ellipse(0.5, 0.3, 0.19, 0.18), ellipse(0.5, 0.68, 0.24, 0.21)};
    case 9: return {ellipse(0.5, 0.33, 0.22, 0.2), {{0.72, 0.33}, {0.6, 0.9}}};
    default: throw std::out_of_range("digit out of range");
  }
}

double segment_distance(Point p, Point a, Point b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = p.x - (a.x + t * vx), dy = p.y - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

struct Jitter {
  double shear = 0, scale = 1, half_width = 1.2, dx = 0, dy = 0;
};

Sprite render(int digit, const Jitter& j) {
  Sprite sprite;
  const double n = static_cast<double>(kSpriteSize);
  std::vector<Stroke> strokes = glyph(digit);
  for (Stroke& s : strokes) {
    for (Point& p : s) {
      const double x = (p.x - 0.5) * j.scale + 0.5 + j.shear * (0.5 - p.y) + j.dx;
      const double y = (p.y - 0.5) * j.scale + 0.5 + j.dy;
      p = {x * n, y * n};
    }
  }
  for (std::size_t r = 0; r < kSpriteSize; ++r) {
    for (std::size_t c = 0; c < kSpriteSize; ++c) {
      const Point center{static_cast<double>(c) + 0.5, static_cast<double>(r) + 0.5};
      double d = 1e9;
      for (const Stroke& s : strokes)
        for (std::size_t i = 0; i + 1 < s.size(); ++i) d = std::min(d, segment_distance(center, s[i], s[i + 1]));
      sprite.pixels[r * kSpriteSize + c] = static_cast<float>(std::clamp(j.half_width - d + 0.5, 0.0, 1.0));
    }
  }
  return sprite;
}

}  // namespace

void SpriteBank::validate() const {
  for (int d = 0; d < 10; ++d) {
    if (by_class[static_cast<std::size_t>(d)].empty()) {
      throw DatasetError("sprite bank has no sprite for digit " + std::to_string(d));
    }
  }
}

SpriteBank procedural_sprites(std::size_t variants, std::uint64_t seed) {
  SpriteBank bank;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> shear(-0.15, 0.15), scale(0.85, 1.0), width(1.0, 1.5), shift(-0.04, 0.04);
  for (int d = 0; d < 10; ++d) {
    auto& list = bank.by_class[static_cast<std::size_t>(d)];
    list.push_back(render(d, Jitter{}));
    while (list.size() < std::max<std::size_t>(variants, 1)) {
      list.push_back(render(d, Jitter{shear(rng), scale(rng), width(rng), shift(rng), shift(rng)}));
    }
  }
  bank.source = "procedural";
  return bank;
}

Sprite resize_to_sprite(std::span<const float> image, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0 || image.size() != rows * cols) {
    throw DatasetError("resize_to_sprite: image size does not match its dimensions");
  }
  Sprite out;
  const double sy = static_cast<double>(rows) / kSpriteSize;
  const double sx = static_cast<double>(cols) / kSpriteSize;
  for (std::size_t r = 0; r < kSpriteSize; ++r) {
    const double y0 = r * sy, y1 = (r + 1) * sy;
    for (std::size_t c = 0; c < kSpriteSize; ++c) {
      const double x0 = c * sx, x1 = (c + 1) * sx;
      double acc = 0, area = 0;
      for (auto y = static_cast<std::size_t>(y0); y < rows && static_cast<double>(y) < y1; ++y) {
        const double wy = std::min<double>(y + 1, y1) - std::max<double>(y, y0);
        if (wy <= 0) continue;
        for (auto x = static_cast<std::size_t>(x0); x < cols && static_cast<double>(x) < x1; ++x) {
          const double wx = std::min<double>(x + 1, x1) - std::max<double>(x, x0);
          if (wx <= 0) continue;
          acc += wy * wx * image[y * cols + x];
          area += wy * wx;
        }
      }
      out.pixels[r * kSpriteSize + c] = static_cast<float>(std::clamp(acc / area, 0.0, 1.0));
    }
  }
  return out;
}

}  // namespace rstg::syncmnist
