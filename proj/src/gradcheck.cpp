#include "scope/gradcheck.hpp"

#include "scope/losses.hpp"
#include "scope/nn.hpp"
#include "scope/rng.hpp"
#include "scope/synth.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace scope {

namespace {

constexpr Scalar kStep = 1e-5;

Scalar rel_err(Scalar analytic, Scalar numeric) {
  const Scalar denom = std::max({std::abs(analytic), std::abs(numeric), 1e-5});
  return std::abs(analytic - numeric) / denom;
}

/// Central differences over selected coordinates of an in-place buffer.
/// `loss` must re-evaluate the full forward pass from the buffer contents.
Scalar fd_over(Scalar* data, const Scalar* analytic,
               const std::vector<Index>& coords,
               const std::function<Scalar()>& loss) {
  Scalar worst = 0.0;
  for (const Index i : coords) {
    const Scalar saved = data[i];
    data[i] = saved + kStep;
    const Scalar up = loss();
    data[i] = saved - kStep;
    const Scalar down = loss();
    data[i] = saved;
    worst = std::max(worst, rel_err(analytic[i], (up - down) / (2.0 * kStep)));
  }
  return worst;
}

std::vector<Index> all_coords(Index n) {
  std::vector<Index> coords(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) coords[static_cast<size_t>(i)] = i;
  return coords;
}

Matrix random_matrix(Index rows, Index cols, Rng& rng, Scalar lo, Scalar hi) {
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(lo, hi);
  return m;
}

Array2D random_field(Index rows, Index cols, Rng& rng, Scalar lo, Scalar hi) {
  Array2D f(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) f(r, c) = rng.uniform(lo, hi);
  return f;
}

// Small tube-shaped mask for the loss checks.
BinaryImage tube_mask(Index h, Index w) {
  BinaryImage m(h, w);
  const Index mid = h / 2;
  for (Index c = 1; c + 1 < w; ++c) m.pix(mid, c) = 1;
  for (Index r = 2; r <= mid; ++r) m.pix(r, w / 3) = 1;
  return m;
}

Scalar check_conv(std::uint64_t seed, bool perturb) {
  Rng rng(seed);
  const Index h = 6, w = 5;
  ConvLayer layer;
  layer.in_channels = 2;
  layer.out_channels = 3;
  layer.weight = random_matrix(18, 3, rng, -0.5, 0.5);
  layer.bias = random_matrix(3, 1, rng, -0.5, 0.5).col(0);
  Matrix input = random_matrix(h * w, 2, rng, -1.0, 1.0);
  const Matrix probe = random_matrix(h * w, 3, rng, -1.0, 1.0);

  ConvCache cache;
  conv_forward(input, h, w, layer, &cache);
  Matrix gw;
  Vector gb;
  const Matrix gin = conv_backward(probe, h, w, layer, cache, gw, gb);
  if (perturb) gw(0, 0) += 0.05;

  const auto loss = [&]() {
    return conv_forward(input, h, w, layer).cwiseProduct(probe).sum();
  };
  Scalar worst = fd_over(layer.weight.data(), gw.data(),
                         all_coords(layer.weight.size()), loss);
  worst = std::max(worst, fd_over(layer.bias.data(), gb.data(),
                                  all_coords(layer.bias.size()), loss));
  worst = std::max(worst,
                   fd_over(input.data(), gin.data(), all_coords(input.size()), loss));
  return worst;
}

Scalar check_pool(std::uint64_t seed) {
  Rng rng(seed);
  const PatchGrid grid{8, 8, 2};
  Matrix field = random_matrix(64, 3, rng, 0.0, 1.0);
  const Matrix probe = random_matrix(grid.vertex_count(), 3, rng, -1.0, 1.0);

  PoolCache cache;
  pool_node_features(field, grid, &cache);
  const Matrix gin = backprop_pool(probe, cache);

  const auto loss = [&]() {
    return pool_node_features(field, grid).cwiseProduct(probe).sum();
  };
  return fd_over(field.data(), gin.data(), all_coords(field.size()), loss);
}

Scalar check_gcn(std::uint64_t seed) {
  Rng rng(seed);
  const GridGraph graph = build_grid_graph(3, 4, 1);
  const SparseOp a_norm = normalized_adjacency(graph);
  GcnLayer layer;
  layer.weight = random_matrix(5, 4, rng, -0.5, 0.5);
  layer.bias = random_matrix(4, 1, rng, -0.5, 0.5).col(0);
  Matrix h_in = random_matrix(12, 5, rng, -1.0, 1.0);
  const Matrix probe = random_matrix(12, 4, rng, -1.0, 1.0);

  GcnCache cache;
  gcn_forward(a_norm, h_in, layer, Activation::Relu, &cache);
  Matrix gw;
  Vector gb;
  const Matrix ghin = gcn_backward(a_norm, probe, layer, cache, gw, gb);

  const auto loss = [&]() {
    return gcn_forward(a_norm, h_in, layer, Activation::Relu)
        .cwiseProduct(probe)
        .sum();
  };
  Scalar worst = fd_over(layer.weight.data(), gw.data(),
                         all_coords(layer.weight.size()), loss);
  worst = std::max(worst, fd_over(layer.bias.data(), gb.data(),
                                  all_coords(layer.bias.size()), loss));
  worst = std::max(worst,
                   fd_over(h_in.data(), ghin.data(), all_coords(h_in.size()), loss));
  return worst;
}

Scalar check_softmax_ce(std::uint64_t seed) {
  Rng rng(seed);
  Matrix logits = random_matrix(10, 2, rng, -2.0, 2.0);
  VectorI labels(10);
  for (Index i = 0; i < 10; ++i) labels[i] = rng.bernoulli(0.5) ? 1 : 0;

  const LogitLoss ll = cross_entropy_loss(logits, labels);
  const auto loss = [&]() { return cross_entropy_loss(logits, labels).value; };
  return fd_over(logits.data(), ll.grad_logits.data(),
                 all_coords(logits.size()), loss);
}

Scalar check_soft_cldice(std::uint64_t seed) {
  Rng rng(seed);
  const Index h = 9, w = 9;
  Array2D pred = random_field(h, w, rng, 0.05, 0.95);
  const Array2D gt = tube_mask(h, w).pix.cast<Scalar>();
  LossConfig cfg;
  cfg.skeleton_iters = 3;

  const FieldLoss fl = soft_cldice_loss(pred, gt, cfg);
  const auto loss = [&]() { return soft_cldice_loss(pred, gt, cfg).value; };
  return fd_over(pred.data(), fl.grad.data(), all_coords(pred.size()), loss);
}

Scalar check_combined(std::uint64_t seed) {
  Rng rng(seed);
  const GridGraph graph = build_grid_graph(8, 8, 1);
  const PatchGrid& grid = graph.grid;
  Matrix logits = random_matrix(grid.vertex_count(), 2, rng, -1.0, 1.0);
  const BinaryImage gt = tube_mask(8, 8);
  const VectorI labels = node_labels(gt, grid);
  LossConfig cfg;
  cfg.kind = LossKind::CePlusClDice;
  cfg.skeleton_iters = 3;

  const LogitLoss ll = combined_loss(logits, labels, grid, gt, cfg);
  const auto loss = [&]() {
    return combined_loss(logits, labels, grid, gt, cfg).value;
  };
  return fd_over(logits.data(), ll.grad_logits.data(),
                 all_coords(logits.size()), loss);
}

Scalar check_end_to_end(std::uint64_t seed) {
  SynthConfig synth;
  synth.seed = seed;
  synth.height = 16;
  synth.width = 16;
  synth.n_branches = 2;
  synth.noise_sigma = 0.05;
  auto [image, gt] = synth_vessels(synth);

  ScopeNet net = init_params(1, seed + 1);
  // Freshly initialized biases are zero and background pixels are exactly
  // zero, which parks many ReLU pre-activations on the kink where central
  // differences straddle the subgradient. Jitter to a generic point.
  {
    Rng jitter(seed + 3);
    Vector theta = pack_params(net);
    for (Index i = 0; i < theta.size(); ++i) theta[i] += jitter.uniform(-0.08, 0.08);
    unpack_params(net, theta);
  }
  const GridGraph graph = build_grid_graph(16, 16, 1);
  const VectorI labels = node_labels(gt, graph.grid);
  LossConfig cfg;
  cfg.kind = LossKind::CePlusClDice;
  cfg.skeleton_iters = 3;

  ForwardCache cache;
  const Matrix logits = scope_forward(net, image, graph, &cache);
  const LogitLoss ll = combined_loss(logits, labels, graph.grid, gt, cfg);
  const ScopeGrads grads = scope_backward(net, cache, ll.grad_logits);

  Vector theta = pack_params(net);
  const Vector analytic = pack_grads(net, grads);

  const auto loss = [&]() {
    unpack_params(net, theta);
    const Matrix lg = scope_forward(net, image, graph);
    return combined_loss(lg, labels, graph.grid, gt, cfg).value;
  };
  const Scalar mid = loss();

  // The composed loss is piecewise smooth (ReLU, max-pool, min/max filters);
  // a coordinate whose +-h interval straddles a kink cannot be certified by
  // central differences, so such draws are rejected: at a kink the two
  // one-sided slopes disagree by the subgradient gap, far above the O(h)
  // curvature term of smooth coordinates.
  const auto check_coord = [&](Index i, Scalar& err_out) -> bool {
    const Scalar saved = theta[i];
    theta[i] = saved + kStep;
    const Scalar up = loss();
    theta[i] = saved - kStep;
    const Scalar down = loss();
    theta[i] = saved;
    const Scalar slope_r = (up - mid) / kStep;
    const Scalar slope_l = (mid - down) / kStep;
    // A jump below 1e-4 of the slope scale perturbs the relative error by
    // at most half that, within tolerance; anything larger is a kink (or
    // curvature so extreme central differences are meaningless anyway).
    const Scalar scale = std::max(std::abs(slope_r), std::abs(slope_l));
    if (std::abs(slope_r - slope_l) > 1e-4 * scale + 1e-9) {
      return false;
    }
    err_out = rel_err(analytic[i], (up - down) / (2.0 * kStep));
    return true;
  };

  // One coordinate inside every parameter group plus extras, so each conv
  // layer, each graph layer, and the head are all exercised.
  Rng rng(seed + 2);
  Scalar worst = 0.0;
  Index offset = 0;
  for (const NamedParam& p : named_params(net)) {
    const Index n = p.rows * p.cols;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Scalar err = 0.0;
      if (check_coord(offset + rng.uniform_int(0, n - 1), err)) {
        worst = std::max(worst, err);
        break;
      }
    }
    offset += n;
  }
  for (int i = 0; i < 20; ++i) {
    Scalar err = 0.0;
    if (check_coord(rng.uniform_int(0, theta.size() - 1), err)) {
      worst = std::max(worst, err);
    }
  }
  unpack_params(net, theta);
  return worst;
}

}  // namespace

GradcheckReport run_gradcheck(std::uint64_t seed, bool perturb_hook) {
  GradcheckReport report;
  report.rows.push_back({"conv", check_conv(seed, perturb_hook)});
  report.rows.push_back({"max_pool", check_pool(seed + 11)});
  report.rows.push_back({"gcn_layer", check_gcn(seed + 22)});
  report.rows.push_back({"softmax_ce", check_softmax_ce(seed + 33)});
  report.rows.push_back({"soft_cldice", check_soft_cldice(seed + 44)});
  report.rows.push_back({"combined_loss", check_combined(seed + 55)});
  report.rows.push_back({"end_to_end", check_end_to_end(seed + 66)});
  return report;
}

}  // namespace scope
