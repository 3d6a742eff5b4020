#pragma once

#include "scope/graph.hpp"
#include "scope/image.hpp"

#include <memory>
#include <utility>

namespace scope {

/// Foreground-probability field on the node grid (or pixel grid for n=1).
using SoftMaskField = Array2D;

enum class LossKind { Ce, ClDice, CePlusClDice };

struct LossConfig {
  LossKind kind = LossKind::ClDice;
  int skeleton_iters = 10;
  Scalar epsilon = 1e-6;
  Scalar lambda = 0.5;  // ce weight in ce_plus_cldice
};

void validate(const LossConfig& cfg);

/// Step-by-step activations of one soft-skeleton evaluation, retained so the
/// backward pass can route min/max-filter gradients to their arg pixels.
struct SoftSkeletonCache;
using SoftSkeletonCachePtr = std::unique_ptr<SoftSkeletonCache>;
SoftSkeletonCachePtr make_soft_skeleton_cache();

/// Iterated soft morphology: erosion is the min over the 4-neighbor cross,
/// dilation the max over the 3x3 box, both with zero padding. Each iteration
/// erodes the field and accumulates the opening residual
/// skel += relu(delta * (1 - skel)); the result is clamped to [0,1].
/// iters = 0 yields the plain opening residual.
SoftMaskField soft_skeleton(const SoftMaskField& field, int iters,
                            SoftSkeletonCache* cache = nullptr);

/// d(loss)/d(field) given d(loss)/d(skeleton). Filter gradients follow the
/// row-major-first tie rule fixed at forward time.
Array2D soft_skeleton_backward(const SoftSkeletonCache& cache,
                               const Array2D& grad_skel);

struct FieldLoss {
  Scalar value = 0.0;
  Array2D grad;  // w.r.t. pred
};

/// Smoothed centerline-Dice loss between a soft prediction field and a
/// binary ground-truth field, with the analytic gradient w.r.t. pred.
FieldLoss soft_cldice_loss(const SoftMaskField& pred, const Array2D& gt,
                           const LossConfig& cfg);

struct LogitLoss {
  Scalar value = 0.0;
  Matrix grad_logits;  // N x 2
};

/// Mean over nodes of -log softmax(logits)[label], stabilized by
/// max-subtraction. labels are {0,1} per node.
LogitLoss cross_entropy_loss(const Matrix& logits, const VectorI& labels);

/// Dispatches on cfg.kind. The soft-clDice branch reshapes softmax channel 1
/// onto the node grid and compares against the block-max pooled ground
/// truth; gradients are composed back through reshape and softmax.
LogitLoss combined_loss(const Matrix& logits, const VectorI& labels,
                        const PatchGrid& grid, const BinaryImage& gt_mask,
                        const LossConfig& cfg);

/// Node labels from a pixel mask: 1 iff the patch contains foreground.
VectorI node_labels(const BinaryImage& mask, const PatchGrid& grid);

/// Softmax probability of class 1 per node.
Vector softmax_class1(const Matrix& logits);

}  // namespace scope
