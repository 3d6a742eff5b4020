#include "scope/synth.hpp"

#include "scope/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scope {

void validate(const SynthConfig& cfg) {
  if (cfg.height < 16 || cfg.width < 16) {
    throw std::invalid_argument("synth: height and width must be >= 16");
  }
  if (cfg.radius_min < 1.0 || cfg.radius_max < cfg.radius_min) {
    throw std::invalid_argument("synth: radius range must satisfy 1 <= min <= max");
  }
  if (cfg.noise_sigma < 0.0) {
    throw std::invalid_argument("synth: noise_sigma must be >= 0");
  }
  if (cfg.n_branches < 1) {
    throw std::invalid_argument("synth: n_branches must be >= 1");
  }
}

namespace {

struct Point {
  Scalar r, c;
};

// Stamps a filled disk; returns the number of newly painted pixels.
Index stamp_disk(Mask2D& mask, Scalar cr, Scalar cc, Scalar radius) {
  Index painted = 0;
  const auto r0 = static_cast<Index>(std::floor(cr - radius));
  const auto r1 = static_cast<Index>(std::ceil(cr + radius));
  const auto c0 = static_cast<Index>(std::floor(cc - radius));
  const auto c1 = static_cast<Index>(std::ceil(cc + radius));
  const Scalar rad2 = radius * radius;
  for (Index r = std::max<Index>(r0, 0); r <= std::min(r1, mask.rows() - 1); ++r) {
    for (Index c = std::max<Index>(c0, 0); c <= std::min(c1, mask.cols() - 1); ++c) {
      const Scalar dr = static_cast<Scalar>(r) - cr;
      const Scalar dc = static_cast<Scalar>(c) - cc;
      if (dr * dr + dc * dc <= rad2 && mask(r, c) == 0) {
        mask(r, c) = 1;
        ++painted;
      }
    }
  }
  return painted;
}

// Rasterizes one quadratic Bezier branch; regenerates internally if the
// curve misses the canvas entirely.
void paint_branch(Mask2D& mask, Rng& rng, const SynthConfig& cfg) {
  const auto h = static_cast<Scalar>(cfg.height);
  const auto w = static_cast<Scalar>(cfg.width);
  for (int attempt = 0; attempt < 64; ++attempt) {
    // All control points in-canvas: the curve stays inside its convex hull,
    // so each branch paints one 8-connected piece.
    const Point p0{rng.uniform(1.0, h - 2.0), rng.uniform(1.0, w - 2.0)};
    const Point p1{rng.uniform(1.0, h - 2.0), rng.uniform(1.0, w - 2.0)};
    const Point p2{rng.uniform(1.0, h - 2.0), rng.uniform(1.0, w - 2.0)};
    const Scalar radius = rng.uniform(cfg.radius_min, cfg.radius_max);

    const Scalar approx_len = std::hypot(p1.r - p0.r, p1.c - p0.c) +
                              std::hypot(p2.r - p1.r, p2.c - p1.c);
    const auto steps = static_cast<Index>(std::ceil(4.0 * approx_len)) + 2;

    Index painted = 0;
    for (Index i = 0; i <= steps; ++i) {
      const Scalar t = static_cast<Scalar>(i) / static_cast<Scalar>(steps);
      const Scalar u = 1.0 - t;
      const Scalar cr = u * u * p0.r + 2.0 * u * t * p1.r + t * t * p2.r;
      const Scalar cc = u * u * p0.c + 2.0 * u * t * p1.c + t * t * p2.c;
      painted += stamp_disk(mask, cr, cc, radius);
    }
    if (painted > 0) return;
  }
  // Unreachable with in-canvas endpoints; paint a fallback bar regardless.
  for (Index c = 1; c < mask.cols() - 1; ++c) mask(mask.rows() / 2, c) = 1;
}

}  // namespace

std::pair<GrayImage, BinaryImage> synth_vessels(const SynthConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);

  BinaryImage mask(cfg.height, cfg.width);
  for (int b = 0; b < cfg.n_branches; ++b) {
    paint_branch(mask.pix, rng, cfg);
  }

  GrayImage img(cfg.height, cfg.width);
  img.pix = mask.pix.cast<Scalar>() * 0.8;
  if (cfg.noise_sigma > 0.0) {
    Scalar* p = img.pix.data();
    const Index n = cfg.height * cfg.width;
    for (Index i = 0; i < n; ++i) {
      p[i] = std::clamp(p[i] + rng.normal(0.0, cfg.noise_sigma), 0.0, 1.0);
    }
  }
  return {std::move(img), std::move(mask)};
}

}  // namespace scope
