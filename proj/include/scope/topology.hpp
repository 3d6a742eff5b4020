#pragma once

#include "scope/image.hpp"

#include <utility>

namespace scope {

/// Component labels, 0 = background, foreground labels 1..count in
/// first-visited row-major order.
struct LabelMap {
  Array2I labels;

  Index height() const { return labels.rows(); }
  Index width() const { return labels.cols(); }
};

/// Topology and pixel agreement between one prediction and its ground truth.
/// beta0/beta1/euler are the prediction's values; err_* compare against the
/// ground truth. Connectivity convention throughout: foreground 8-connected,
/// background 4-connected.
struct TopologySummary {
  int beta0 = 0;
  int beta1 = 0;
  int euler = 0;
  int err_b0 = 0;
  int err_b1 = 0;
  int err_chi = 0;
  Scalar cldice = 0.0;
  Scalar precision = 0.0;
  Scalar recall = 0.0;
  Scalar dice = 0.0;
};

struct PixelMetrics {
  Scalar precision = 0.0;
  Scalar recall = 0.0;
  Scalar dice = 0.0;
};

/// Two-pass union-find labeling. connectivity must be 4 or 8.
std::pair<LabelMap, int> connected_components(const BinaryImage& mask,
                                              int connectivity);

/// beta0 = 8-connected foreground components; beta1 = bounded 4-connected
/// background holes.
std::pair<int, int> betti_numbers(const BinaryImage& mask);

/// Euler characteristic via the 2x2 quad-pattern counter (8-connectivity
/// convention). Validated against euler_characteristic_cubical in tests.
int euler_characteristic(const BinaryImage& mask);

/// Euler characteristic by explicit cubical counting: covered lattice
/// vertices - covered unit edges + foreground pixels.
int euler_characteristic_cubical(const BinaryImage& mask);

/// Morphological thinning to a 1-pixel-wide 8-connected skeleton.
/// Zhang-Suen subiteration conditions with sequential deletion so only
/// simple points are removed; idempotent and beta0-preserving.
BinaryImage skeletonize(const BinaryImage& mask);

/// Centerline Dice. Both skeletons empty -> 1; exactly one empty -> 0.
Scalar cldice_metric(const BinaryImage& pred, const BinaryImage& gt);

/// precision = TP/(TP+FP), recall = TP/(TP+FN), dice = 2TP/(2TP+FP+FN),
/// each 0/0 -> 1.
PixelMetrics pixel_metrics(const BinaryImage& pred, const BinaryImage& gt);

TopologySummary evaluate_pair(const BinaryImage& pred, const BinaryImage& gt);

}  // namespace scope
