#pragma once

#include "scope/image.hpp"

#include <cstdint>
#include <utility>

namespace scope {

/// Parameters for the seeded synthetic tubular-structure generator.
struct SynthConfig {
  std::uint64_t seed = 7;
  Index height = 64;
  Index width = 64;
  int n_branches = 4;
  Scalar radius_min = 1.0;
  Scalar radius_max = 1.4;
  Scalar noise_sigma = 0.25;
};

void validate(const SynthConfig& cfg);

/// Deterministic per seed. The mask is the union of n_branches quadratic
/// Bezier curves dilated to radii in [radius_min, radius_max]; each branch
/// is 8-connected. The image is mask * 0.8 plus Gaussian noise clamped to
/// [0,1].
std::pair<GrayImage, BinaryImage> synth_vessels(const SynthConfig& cfg);

}  // namespace scope
