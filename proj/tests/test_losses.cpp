#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "scope/losses.hpp"
#include "scope/topology.hpp"
#include "test_util.hpp"

using namespace scope;
using namespace scope::test;

namespace {

Array2D random_field(Index h, Index w, Rng& rng, Scalar lo = 0.0, Scalar hi = 1.0) {
  Array2D f(h, w);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) f(r, c) = rng.uniform(lo, hi);
  return f;
}

}  // namespace

TEST_CASE("soft skeleton basics") {
  CHECK((soft_skeleton(Array2D::Zero(6, 6), 3) == 0.0).all());

  // Isolated bright pixel survives as skeleton value 1.
  Array2D dot = Array2D::Zero(7, 7);
  dot(3, 3) = 1.0;
  const Array2D skel = soft_skeleton(dot, 2);
  CHECK(skel(3, 3) == 1.0);
  CHECK(skel.sum() == 1.0);
}

TEST_CASE("soft skeleton bounded by input, within [0,1]") {
  Rng rng(909);
  for (int trial = 0; trial < 40; ++trial) {
    const Array2D f = random_field(10, 11, rng);
    const int k = static_cast<int>(rng.uniform_int(0, 6));
    const Array2D s = soft_skeleton(f, k);
    CHECK((s <= f + 1e-15).all());
    CHECK((s >= 0.0).all());
    CHECK((s <= 1.0).all());
  }
}

TEST_CASE("k=0 equals the opening residual") {
  Rng rng(11);
  const Array2D f = random_field(8, 8, rng);
  const Array2D s0 = soft_skeleton(f, 0);
  // Residual recomputed by definition: relu(f - dilate(erode(f))).
  // Erode: min over the zero-padded cross; dilate: max over the 3x3 box.
  Array2D eroded(8, 8), opened(8, 8);
  const auto at0 = [&](const Array2D& a, Index r, Index c) {
    return (r < 0 || r >= 8 || c < 0 || c >= 8) ? 0.0 : a(r, c);
  };
  for (Index r = 0; r < 8; ++r)
    for (Index c = 0; c < 8; ++c)
      eroded(r, c) = std::min({at0(f, r - 1, c), at0(f, r, c - 1), f(r, c),
                               at0(f, r, c + 1), at0(f, r + 1, c)});
  for (Index r = 0; r < 8; ++r)
    for (Index c = 0; c < 8; ++c) {
      Scalar best = -1.0;
      for (Index dr = -1; dr <= 1; ++dr)
        for (Index dc = -1; dc <= 1; ++dc)
          best = std::max(best, at0(eroded, r + dr, c + dc));
      opened(r, c) = best;
    }
  const Array2D residual = (f - opened).max(0.0);
  CHECK((s0 - residual).abs().maxCoeff() < 1e-15);
}

TEST_CASE("thresholded soft skeleton stays near the hard skeleton") {
  const BinaryImage bar = tube(13, 29, 2);  // 5 px wide, half-width 2
  const Array2D field = bar.pix.cast<Scalar>();
  const Array2D soft = soft_skeleton(field, 3);
  const BinaryImage hard = skeletonize(bar);

  // Dilate the hard skeleton by one pixel (8-neighborhood).
  BinaryImage fat(hard.height(), hard.width());
  for (Index r = 0; r < hard.height(); ++r)
    for (Index c = 0; c < hard.width(); ++c) {
      if (!hard.pix(r, c)) continue;
      for (Index dr = -1; dr <= 1; ++dr)
        for (Index dc = -1; dc <= 1; ++dc) {
          const Index rr = r + dr, cc = c + dc;
          if (rr >= 0 && rr < hard.height() && cc >= 0 && cc < hard.width())
            fat.pix(rr, cc) = 1;
        }
    }

  int soft_count = 0;
  for (Index r = 0; r < soft.rows(); ++r)
    for (Index c = 0; c < soft.cols(); ++c)
      if (soft(r, c) > 0.5) {
        ++soft_count;
        CHECK(fat.pix(r, c) == 1);  // containment in the 1-px dilation
      }
  CHECK(soft_count > 0);
}

TEST_CASE("soft cldice loss values") {
  const BinaryImage t = tube(12, 20, 1);
  const Array2D gt = t.pix.cast<Scalar>();
  LossConfig cfg;

  const FieldLoss exact = soft_cldice_loss(gt, gt, cfg);
  CHECK(exact.value >= 0.0);
  CHECK(exact.value < 1e-5);  // eps-scale deviation from zero

  const Array2D uniform = Array2D::Constant(12, 20, 0.5);
  const FieldLoss flat = soft_cldice_loss(uniform, gt, cfg);
  CHECK(flat.value > exact.value);

  Array2D bad(3, 3);
  CHECK_THROWS_AS(soft_cldice_loss(bad, gt, cfg), std::invalid_argument);
}

TEST_CASE("soft cldice loss stays in [0,1]") {
  Rng rng(5150);
  LossConfig cfg;
  cfg.skeleton_iters = 3;
  for (int trial = 0; trial < 30; ++trial) {
    const Array2D pred = random_field(9, 9, rng);
    BinaryImage g = random_mask(9, 9, rng, 0.3);
    const FieldLoss fl = soft_cldice_loss(pred, g.pix.cast<Scalar>(), cfg);
    CHECK(fl.value >= 0.0);
    CHECK(fl.value <= 1.0);
  }
}

TEST_CASE("soft cldice gradient matches finite differences") {
  Rng rng(31);
  LossConfig cfg;
  cfg.skeleton_iters = 3;
  Array2D pred = random_field(8, 8, rng, 0.05, 0.95);
  const Array2D gt = tube(8, 8, 1).pix.cast<Scalar>();

  const FieldLoss fl = soft_cldice_loss(pred, gt, cfg);
  const Scalar h = 1e-5;
  Scalar worst = 0.0;
  for (Index i = 0; i < pred.size(); ++i) {
    Scalar* p = pred.data() + i;
    const Scalar saved = *p;
    *p = saved + h;
    const Scalar up = soft_cldice_loss(pred, gt, cfg).value;
    *p = saved - h;
    const Scalar down = soft_cldice_loss(pred, gt, cfg).value;
    *p = saved;
    const Scalar fd = (up - down) / (2 * h);
    const Scalar a = fl.grad.data()[i];
    worst = std::max(worst,
                     std::abs(fd - a) / std::max({std::abs(fd), std::abs(a), 1e-5}));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("cross entropy values and gradient") {
  Matrix logits = Matrix::Zero(5, 2);
  VectorI labels = VectorI::Zero(5);
  const LogitLoss even = cross_entropy_loss(logits, labels);
  CHECK(even.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Matrix sure(4, 2);
  VectorI y(4);
  for (Index i = 0; i < 4; ++i) {
    y[i] = static_cast<int>(i % 2);
    sure(i, y[i]) = 20.0;
    sure(i, 1 - y[i]) = 0.0;
  }
  CHECK(cross_entropy_loss(sure, y).value < 1e-8);

  Rng rng(2);
  Matrix rl(10, 2);
  for (Index i = 0; i < rl.size(); ++i)
    rl(i / 2, i % 2) = rng.uniform(-3.0, 3.0);
  VectorI ry(10);
  for (Index i = 0; i < 10; ++i) ry[i] = rng.bernoulli(0.5) ? 1 : 0;
  const LogitLoss ll = cross_entropy_loss(rl, ry);
  const Scalar h = 1e-5;
  for (Index i = 0; i < rl.size(); ++i) {
    Scalar* p = rl.data() + i;
    const Scalar saved = *p;
    *p = saved + h;
    const Scalar up = cross_entropy_loss(rl, ry).value;
    *p = saved - h;
    const Scalar down = cross_entropy_loss(rl, ry).value;
    *p = saved;
    const Scalar fd = (up - down) / (2 * h);
    CHECK(std::abs(fd - ll.grad_logits.data()[i]) <
          1e-6 * std::max(1.0, std::abs(fd)));
  }

  CHECK_THROWS_AS(cross_entropy_loss(logits, VectorI::Zero(4)),
                  std::invalid_argument);
}

TEST_CASE("combined loss dispatch and mixing") {
  Rng rng(88);
  const GridGraph graph = build_grid_graph(8, 8, 1);
  const BinaryImage gt = tube(8, 8, 1);
  const VectorI labels = node_labels(gt, graph.grid);
  Matrix logits(64, 2);
  for (Index i = 0; i < logits.size(); ++i)
    logits(i / 2, i % 2) = rng.uniform(-1.0, 1.0);

  LossConfig ce_cfg;
  ce_cfg.kind = LossKind::Ce;
  const LogitLoss via_combined = combined_loss(logits, labels, graph.grid, gt, ce_cfg);
  const LogitLoss direct = cross_entropy_loss(logits, labels);
  CHECK(via_combined.value == direct.value);
  CHECK((via_combined.grad_logits - direct.grad_logits).cwiseAbs().maxCoeff() == 0.0);

  LossConfig mix;
  mix.kind = LossKind::CePlusClDice;
  mix.skeleton_iters = 3;
  mix.lambda = 1.0;
  const LogitLoss l1 = combined_loss(logits, labels, graph.grid, gt, mix);
  CHECK(l1.value == doctest::Approx(direct.value).epsilon(1e-12));

  mix.lambda = 0.0;
  LossConfig pure;
  pure.kind = LossKind::ClDice;
  pure.skeleton_iters = 3;
  const LogitLoss l0 = combined_loss(logits, labels, graph.grid, gt, mix);
  const LogitLoss cl = combined_loss(logits, labels, graph.grid, gt, pure);
  CHECK(l0.value == doctest::Approx(cl.value).epsilon(1e-12));

  // Continuity in lambda.
  mix.lambda = 0.37;
  const Scalar v1 = combined_loss(logits, labels, graph.grid, gt, mix).value;
  mix.lambda = 0.37 + 1e-9;
  const Scalar v2 = combined_loss(logits, labels, graph.grid, gt, mix).value;
  CHECK(std::abs(v1 - v2) < 1e-6);
}

TEST_CASE("gradients vanish at a saturated binary match") {
  const GridGraph graph = build_grid_graph(10, 10, 1);
  const BinaryImage gt = tube(10, 10, 1);
  const VectorI labels = node_labels(gt, graph.grid);
  Matrix logits(100, 2);
  for (Index v = 0; v < 100; ++v) {
    const int y = labels[v];
    logits(v, y) = 20.0;
    logits(v, 1 - y) = -20.0;
  }
  LossConfig cfg;  // cldice
  const LogitLoss ll = combined_loss(logits, labels, graph.grid, gt, cfg);
  CHECK(ll.grad_logits.cwiseAbs().maxCoeff() <= 10.0 * cfg.epsilon);
  CHECK(ll.value < 1e-4);
}

TEST_CASE("loss config validation") {
  LossConfig bad;
  bad.skeleton_iters = 0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = LossConfig{};
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = LossConfig{};
  bad.lambda = 1.5;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}
