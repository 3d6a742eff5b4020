#include "scope/losses.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace scope {

void validate(const LossConfig& cfg) {
  if (cfg.skeleton_iters < 1) {
    throw std::invalid_argument("loss: skeleton_iters must be >= 1");
  }
  if (cfg.epsilon <= 0.0) {
    throw std::invalid_argument("loss: epsilon must be > 0");
  }
  if (cfg.lambda < 0.0 || cfg.lambda > 1.0) {
    throw std::invalid_argument("loss: lambda must be in [0,1]");
  }
}

namespace {

struct FilterCache {
  Array2I arg;  // flat index of the winning input pixel
};

// Min over the 4-neighbor cross with zero padding, so a uniform field still
// erodes from the canvas border. A winning padding cell is recorded as -1
// and receives no gradient. Candidates are scanned in row-major order so
// ties pick the first.
Array2D min_cross(const Array2D& f, FilterCache* cache) {
  const Index h = f.rows(), w = f.cols();
  Array2D out(h, w);
  Array2I arg(h, w);
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) {
      Scalar best = std::numeric_limits<Scalar>::infinity();
      Index best_idx = -1;
      const auto consider = [&](Index rr, Index cc) {
        const bool inside = rr >= 0 && rr < h && cc >= 0 && cc < w;
        const Scalar v = inside ? f(rr, cc) : 0.0;
        if (v < best) {
          best = v;
          best_idx = inside ? rr * w + cc : -1;
        }
      };
      consider(r - 1, c);
      consider(r, c - 1);
      consider(r, c);
      consider(r, c + 1);
      consider(r + 1, c);
      out(r, c) = best;
      arg(r, c) = static_cast<std::int32_t>(best_idx);
    }
  }
  if (cache) cache->arg = std::move(arg);
  return out;
}

// Max over the 3x3 box with zero padding.
Array2D max_box(const Array2D& f, FilterCache* cache) {
  const Index h = f.rows(), w = f.cols();
  Array2D out(h, w);
  Array2I arg(h, w);
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) {
      Scalar best = -std::numeric_limits<Scalar>::infinity();
      Index best_idx = -1;
      for (Index rr = r - 1; rr <= r + 1; ++rr) {
        for (Index cc = c - 1; cc <= c + 1; ++cc) {
          const bool inside = rr >= 0 && rr < h && cc >= 0 && cc < w;
          const Scalar v = inside ? f(rr, cc) : 0.0;
          if (v > best) {
            best = v;
            best_idx = inside ? rr * w + cc : -1;
          }
        }
      }
      out(r, c) = best;
      arg(r, c) = static_cast<std::int32_t>(best_idx);
    }
  }
  if (cache) cache->arg = std::move(arg);
  return out;
}

Array2D filter_backward(const Array2D& grad_out, const FilterCache& cache,
                        Index h, Index w) {
  Array2D grad_in = Array2D::Zero(h, w);
  Scalar* g = grad_in.data();
  const Scalar* go = grad_out.data();
  const std::int32_t* arg = cache.arg.data();
  const Index n = h * w;
  for (Index i = 0; i < n; ++i) {
    if (arg[i] >= 0) g[arg[i]] += go[i];
  }
  return grad_in;
}

struct SkelStep {
  FilterCache erode_field;  // field erosion (steps >= 1 only)
  FilterCache open_erode;
  FilterCache open_dilate;
  Array2D delta_pre;   // f - open(f)
  Array2D delta;       // relu(delta_pre)
  Array2D skel_before;
  Array2D update_pre;  // delta * (1 - skel_before), steps >= 1 only
};

}  // namespace

struct SoftSkeletonCache {
  Index rows = 0, cols = 0;
  std::vector<SkelStep> steps;
  Array2D preclamp;
};

SoftSkeletonCachePtr make_soft_skeleton_cache() {
  return std::make_unique<SoftSkeletonCache>();
}

SoftMaskField soft_skeleton(const SoftMaskField& field, int iters,
                            SoftSkeletonCache* cache) {
  if (iters < 0) throw std::invalid_argument("soft_skeleton: iters must be >= 0");
  const Index h = field.rows(), w = field.cols();
  SoftSkeletonCache local;
  SoftSkeletonCache& cc = cache ? *cache : local;
  cc.rows = h;
  cc.cols = w;
  cc.steps.assign(static_cast<size_t>(iters) + 1, SkelStep{});

  Array2D f = field;
  SkelStep& s0 = cc.steps[0];
  {
    const Array2D eroded = min_cross(f, &s0.open_erode);
    const Array2D opened = max_box(eroded, &s0.open_dilate);
    s0.delta_pre = f - opened;
    s0.delta = s0.delta_pre.max(0.0);
  }
  Array2D skel = s0.delta;

  for (int t = 1; t <= iters; ++t) {
    SkelStep& s = cc.steps[static_cast<size_t>(t)];
    f = min_cross(f, &s.erode_field);
    const Array2D eroded = min_cross(f, &s.open_erode);
    const Array2D opened = max_box(eroded, &s.open_dilate);
    s.delta_pre = f - opened;
    s.delta = s.delta_pre.max(0.0);
    s.skel_before = skel;
    s.update_pre = s.delta * (1.0 - skel);
    skel += s.update_pre.max(0.0);
  }
  cc.preclamp = skel;
  return skel.min(1.0).max(0.0);
}

Array2D soft_skeleton_backward(const SoftSkeletonCache& cache,
                               const Array2D& grad_skel) {
  const Index h = cache.rows, w = cache.cols;
  if (grad_skel.rows() != h || grad_skel.cols() != w || cache.steps.empty()) {
    throw std::invalid_argument("soft_skeleton_backward: stale cache");
  }
  // Clamp passes gradient on [0,1]; the pre-clamp value never leaves it for
  // inputs in [0,1], but the mask keeps the backward exact regardless.
  Array2D g_skel =
      grad_skel * (cache.preclamp >= 0.0 && cache.preclamp <= 1.0).cast<Scalar>();
  Array2D g_f = Array2D::Zero(h, w);

  for (size_t t = cache.steps.size() - 1; t >= 1; --t) {
    const SkelStep& s = cache.steps[t];
    const Array2D g_update = g_skel * (s.update_pre > 0.0).cast<Scalar>();
    const Array2D g_delta = g_update * (1.0 - s.skel_before);
    g_skel -= g_update * s.delta;
    const Array2D g_dpre = g_delta * (s.delta_pre > 0.0).cast<Scalar>();
    g_f += g_dpre;
    const Array2D g_eroded = filter_backward(-g_dpre, s.open_dilate, h, w);
    g_f += filter_backward(g_eroded, s.open_erode, h, w);
    g_f = filter_backward(g_f, s.erode_field, h, w);
  }

  const SkelStep& s0 = cache.steps[0];
  const Array2D g_dpre0 = g_skel * (s0.delta_pre > 0.0).cast<Scalar>();
  g_f += g_dpre0;
  const Array2D g_eroded0 = filter_backward(-g_dpre0, s0.open_dilate, h, w);
  g_f += filter_backward(g_eroded0, s0.open_erode, h, w);
  return g_f;
}

FieldLoss soft_cldice_loss(const SoftMaskField& pred, const Array2D& gt,
                           const LossConfig& cfg) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols()) {
    throw std::invalid_argument("soft_cldice_loss: dimension mismatch");
  }
  const Scalar eps = cfg.epsilon;
  auto cache = make_soft_skeleton_cache();
  const Array2D skel_pred = soft_skeleton(pred, cfg.skeleton_iters, cache.get());
  const Array2D skel_gt = soft_skeleton(gt, cfg.skeleton_iters);

  const Scalar sum_sp = skel_pred.sum();
  const Scalar sum_sp_gt = (skel_pred * gt).sum();
  const Scalar sum_sg = skel_gt.sum();
  const Scalar sum_sg_pred = (skel_gt * pred).sum();

  // Smoothing sits in the denominators only: a prediction with an empty
  // soft skeleton scores tprec = 0 (the hard metric's one-empty convention),
  // not eps/eps = 1. Degenerate fields whose opening restores them exactly
  // (uniform foreground included) would otherwise minimize the loss.
  const Scalar tprec = sum_sp_gt / (sum_sp + eps);
  const Scalar tsens = sum_sg_pred / (sum_sg + eps);
  const Scalar denom = tprec + tsens;

  FieldLoss out;
  if (denom <= 0.0) {
    out.value = 1.0;
    out.grad = Array2D::Zero(pred.rows(), pred.cols());
    return out;
  }
  out.value = 1.0 - 2.0 * tprec * tsens / denom;

  const Scalar dl_dtprec = -2.0 * tsens * tsens / (denom * denom);
  const Scalar dl_dtsens = -2.0 * tprec * tprec / (denom * denom);

  const Array2D g_skel_pred = dl_dtprec * (gt - tprec) / (sum_sp + eps);
  out.grad = soft_skeleton_backward(*cache, g_skel_pred) +
             dl_dtsens * skel_gt / (sum_sg + eps);
  return out;
}

LogitLoss cross_entropy_loss(const Matrix& logits, const VectorI& labels) {
  const Index n = logits.rows();
  if (logits.cols() != 2 || labels.size() != n || n == 0) {
    throw std::invalid_argument("cross_entropy_loss: shape mismatch");
  }
  LogitLoss out;
  out.grad_logits.resize(n, 2);
  Scalar total = 0.0;
  const Scalar inv_n = 1.0 / static_cast<Scalar>(n);
  for (Index i = 0; i < n; ++i) {
    const Scalar z0 = logits(i, 0), z1 = logits(i, 1);
    const Scalar m = std::max(z0, z1);
    const Scalar e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
    const Scalar log_z = std::log(e0 + e1);
    const Scalar p0 = e0 / (e0 + e1), p1 = e1 / (e0 + e1);
    const int y = labels[i];
    total += log_z - ((y == 0 ? z0 : z1) - m);
    out.grad_logits(i, 0) = (p0 - (y == 0 ? 1.0 : 0.0)) * inv_n;
    out.grad_logits(i, 1) = (p1 - (y == 1 ? 1.0 : 0.0)) * inv_n;
  }
  out.value = total * inv_n;
  return out;
}

VectorI node_labels(const BinaryImage& mask, const PatchGrid& grid) {
  const Array2D field = pool_mask_to_grid(mask, grid);
  VectorI labels(grid.vertex_count());
  const Scalar* p = field.data();
  for (Index v = 0; v < labels.size(); ++v) labels[v] = p[v] > 0.0 ? 1 : 0;
  return labels;
}

Vector softmax_class1(const Matrix& logits) {
  const Index n = logits.rows();
  Vector p1(n);
  for (Index i = 0; i < n; ++i) {
    const Scalar m = std::max(logits(i, 0), logits(i, 1));
    const Scalar e0 = std::exp(logits(i, 0) - m);
    const Scalar e1 = std::exp(logits(i, 1) - m);
    p1[i] = e1 / (e0 + e1);
  }
  return p1;
}

LogitLoss combined_loss(const Matrix& logits, const VectorI& labels,
                        const PatchGrid& grid, const BinaryImage& gt_mask,
                        const LossConfig& cfg) {
  validate(cfg);
  if (logits.rows() != grid.vertex_count() || logits.cols() != 2) {
    throw std::invalid_argument("combined_loss: logits shape mismatch");
  }
  Scalar w_ce = 0.0, w_cl = 0.0;
  switch (cfg.kind) {
    case LossKind::Ce: w_ce = 1.0; break;
    case LossKind::ClDice: w_cl = 1.0; break;
    case LossKind::CePlusClDice: w_ce = cfg.lambda; w_cl = 1.0 - cfg.lambda; break;
  }

  LogitLoss out;
  out.value = 0.0;
  out.grad_logits = Matrix::Zero(logits.rows(), 2);

  if (w_ce != 0.0) {
    const LogitLoss ce = cross_entropy_loss(logits, labels);
    out.value += w_ce * ce.value;
    out.grad_logits += w_ce * ce.grad_logits;
  }
  if (w_cl != 0.0) {
    const Vector p1 = softmax_class1(logits);
    const Array2D field = reshape_nodes_to_grid(p1, grid);
    const Array2D gt_nodes = pool_mask_to_grid(gt_mask, grid);
    const FieldLoss cl = soft_cldice_loss(field, gt_nodes, cfg);
    out.value += w_cl * cl.value;
    const Scalar* g = cl.grad.data();
    for (Index v = 0; v < logits.rows(); ++v) {
      const Scalar jac = p1[v] * (1.0 - p1[v]);  // dp1/dz1 = -dp1/dz0
      out.grad_logits(v, 1) += w_cl * g[v] * jac;
      out.grad_logits(v, 0) -= w_cl * g[v] * jac;
    }
  }
  return out;
}

}  // namespace scope
