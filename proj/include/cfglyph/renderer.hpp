#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "cfglyph/errors.hpp"
#include "cfglyph/scm.hpp"

namespace cfglyph {

// ─── Glyph renderer ──────────────────────────────────────────────────────────
//
// Deterministic ground-truth image mechanism. A glyph is a per-label stroke
// skeleton whose control points are jittered by the latent code, sheared by
// the slant attribute, and stamped as an anti-aliased ribbon of the given
// thickness; intensity is a pure value scale on top. Because every attribute
// enters through a known closed-form path, measurement can invert the render
// and counterfactual image tests have an exact reference.

struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;  // row-major, values in [0, 1]

  Image() = default;
  Image(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, 0.0) {}

  double& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * width + col]; }
  double at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
  std::size_t size() const { return pixels.size(); }
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

using Stroke = std::vector<Point>;          // polyline control points, >= 2
using Skeleton = std::vector<Stroke>;        // one glyph, possibly multi-stroke

struct RenderParams {
  int width = 28;
  int height = 28;
  double thickness_lo = 1.0;   // stroke diameter range, px
  double thickness_hi = 5.0;
  double intensity_lo = 0.3;   // value scale range
  double intensity_hi = 1.0;
  double slant_lo = -1.0;
  double slant_hi = 1.0;
  double shear_gain = 0.5;     // px of horizontal shift per px of height per unit slant
  double jitter_amp = 0.5;     // px bound on control point displacement
  int latent_dim = 4;
  int supersample = 4;         // subsamples per axis for coverage

  // Mean foreground distance-to-background scales linearly with stroke
  // diameter; this converts that mean back to px. Calibrated once against the
  // renderer by tools/calibrate and frozen.
  double thickness_calibration = 2.4062391614392293;

  // Control points in normalized canvas coordinates, chosen so every stroke
  // stays inside the canvas across the full slant, thickness, and jitter
  // ranges.
  std::vector<Skeleton> skeletons = {
      {{{0.50, 0.15}, {0.50, 0.85}}},                               // vertical bar
      {{{0.28, 0.22}, {0.72, 0.78}}},                               // diagonal
      {{{0.50, 0.15}, {0.50, 0.85}}, {{0.15, 0.50}, {0.85, 0.50}}}, // plus cross
      {{{0.32, 0.18}, {0.32, 0.78}, {0.68, 0.78}}},                 // L shape
  };
};

struct Measurement {
  double thickness = 0.0;  // raw px
  double intensity = 0.0;  // raw value
  double slant = 0.0;      // raw shear units
};

// Error medians of measure(render(...)) on the seeded calibration corpus,
// frozen by tools/calibrate together with the calibration constant above.
// Measurement tests allow 1.5x these; codec sweeps are held to 2x.
inline constexpr double kRoundTripMedianThickness = 0.50487834658266362;
inline constexpr double kRoundTripMedianIntensity = 0.069623780243235733;
inline constexpr double kRoundTripMedianSlant = 0.05740167296048073;

namespace detail {

inline double dist_point_segment(double px, double py, const Point& a, const Point& b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((px - a.x) * dx + (py - a.y) * dy) / len2, 0.0, 1.0);
  const double cx = a.x + t * dx, cy = a.y + t * dy;
  return std::sqrt((px - cx) * (px - cx) + (py - cy) * (py - cy));
}

}  // namespace detail

/// Renders one glyph. Raw attribute units: thickness in px, intensity as the
/// peak pixel value, slant in shear units, label as a skeleton index. The
/// latent z perturbs control points through a bounded tanh, component 2k for
/// the x shift of point k and 2k+1 for its y shift, wrapping modulo the
/// latent dimension.
inline Image render(const AttributeVector& a_raw, const std::vector<double>& z,
                    const RenderParams& params) {
  const auto need = [&](const char* name) {
    auto it = a_raw.find(name);
    if (it == a_raw.end())
      throw UnknownAttributeError(std::string("render needs attribute '") + name + "'");
    return it->second;
  };
  const double t = need("t"), i = need("i"), s = need("s"), l = need("l");
  if (!(t >= params.thickness_lo && t <= params.thickness_hi))
    throw OutOfRangeError("thickness " + std::to_string(t) + " outside range");
  if (!(i >= params.intensity_lo && i <= params.intensity_hi))
    throw OutOfRangeError("intensity " + std::to_string(i) + " outside range");
  if (!(s >= params.slant_lo && s <= params.slant_hi))
    throw OutOfRangeError("slant " + std::to_string(s) + " outside range");
  if (l != std::floor(l) || l < 0.0 || l >= static_cast<double>(params.skeletons.size()))
    throw OutOfRangeError("label " + std::to_string(l) + " is not a skeleton index");
  if (static_cast<int>(z.size()) != params.latent_dim)
    throw DimensionError("latent has " + std::to_string(z.size()) + " components, expected " +
                         std::to_string(params.latent_dim));

  // Jitter then shear the control points, in pixel coordinates.
  const double cy = params.height / 2.0;
  Skeleton strokes = params.skeletons[static_cast<std::size_t>(l)];
  std::size_t point_id = 0;
  for (Stroke& stroke : strokes) {
    for (Point& p : stroke) {
      double x = p.x * params.width;
      double y = p.y * params.height;
      x += params.jitter_amp * std::tanh(z[(2 * point_id) % z.size()]);
      y += params.jitter_amp * std::tanh(z[(2 * point_id + 1) % z.size()]);
      x += s * params.shear_gain * (y - cy);
      p = {x, y};
      ++point_id;
    }
  }

  const double radius = t / 2.0;
  const int ss = params.supersample;
  const double inv_ss = 1.0 / ss;
  Image img(params.width, params.height);
  for (int row = 0; row < params.height; ++row) {
    for (int col = 0; col < params.width; ++col) {
      int covered = 0;
      for (int sy = 0; sy < ss; ++sy) {
        for (int sx = 0; sx < ss; ++sx) {
          const double px = col + (sx + 0.5) * inv_ss;
          const double py = row + (sy + 0.5) * inv_ss;
          bool inside = false;
          for (const Stroke& stroke : strokes) {
            for (std::size_t k = 0; k + 1 < stroke.size() && !inside; ++k)
              inside = detail::dist_point_segment(px, py, stroke[k], stroke[k + 1]) <= radius;
            if (inside) break;
          }
          if (inside) ++covered;
        }
      }
      img.at(row, col) = i * (static_cast<double>(covered) / (ss * ss));
    }
  }
  return img;
}

/// Recovers (thickness, intensity, slant) from pixels alone. Foreground is
/// everything at or above half the peak value; thickness comes from the mean
/// distance to background, intensity from the mean foreground value, slant
/// from the shear implied by the second-order central moments.
inline Measurement measure(const Image& img, const RenderParams& params) {
  double peak = 0.0;
  for (double v : img.pixels) peak = std::max(peak, v);
  if (peak <= 0.0) throw BlankImageError("image has no foreground");
  const double threshold = 0.5 * peak;

  std::vector<std::pair<int, int>> fg, bg;
  double value_sum = 0.0;
  for (int row = 0; row < img.height; ++row) {
    for (int col = 0; col < img.width; ++col) {
      if (img.at(row, col) >= threshold) {
        fg.emplace_back(row, col);
        value_sum += img.at(row, col);
      } else {
        bg.emplace_back(row, col);
      }
    }
  }

  Measurement m;
  m.intensity = value_sum / static_cast<double>(fg.size());

  // Exact distance transform by direct search; foregrounds are a few hundred
  // pixels so the quadratic cost is irrelevant here.
  double dist_sum = 0.0;
  for (const auto& [fr, fc] : fg) {
    double best = std::numeric_limits<double>::max();
    for (const auto& [br, bc] : bg) {
      const double d2 = static_cast<double>((fr - br) * (fr - br) + (fc - bc) * (fc - bc));
      best = std::min(best, d2);
    }
    dist_sum += std::sqrt(best);
  }
  m.thickness = bg.empty() ? 0.0
                           : params.thickness_calibration * dist_sum / static_cast<double>(fg.size());

  double xbar = 0.0, ybar = 0.0;
  for (const auto& [row, col] : fg) {
    xbar += col;
    ybar += row;
  }
  xbar /= static_cast<double>(fg.size());
  ybar /= static_cast<double>(fg.size());
  double mu11 = 0.0, mu02 = 0.0;
  for (const auto& [row, col] : fg) {
    mu11 += (col - xbar) * (row - ybar);
    mu02 += (row - ybar) * (row - ybar);
  }
  m.slant = mu02 > 1e-12 ? (mu11 / mu02) / params.shear_gain : 0.0;
  return m;
}

/// Mirror around the vertical axis; an exact involution.
inline Image flip_horizontal(const Image& img) {
  Image out(img.width, img.height);
  for (int row = 0; row < img.height; ++row)
    for (int col = 0; col < img.width; ++col)
      out.at(row, col) = img.at(row, img.width - 1 - col);
  return out;
}

/// Scales pixel values by a nonnegative factor, saturating at 1. A factor of
/// exactly 1 reproduces the input bit for bit.
inline Image adjust_brightness(const Image& img, double factor) {
  if (!(factor >= 0.0)) throw OutOfRangeError("brightness factor must be >= 0");
  Image out = img;
  for (double& v : out.pixels) v = std::min(1.0, v * factor);
  return out;
}

}  // namespace cfglyph
