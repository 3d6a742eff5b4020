#include "scope/topology.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace scope {

namespace {

class UnionFind {
 public:
  explicit UnionFind(Index n) : parent_(n) {
    for (Index i = 0; i < n; ++i) parent_[i] = static_cast<int>(i);
  }
  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) parent_[b] = a; else parent_[a] = b;
  }

 private:
  std::vector<int> parent_;
};

std::pair<LabelMap, int> label_components(const Mask2D& fg, int connectivity) {
  const Index h = fg.rows(), w = fg.cols();
  LabelMap out;
  out.labels = Array2I::Zero(h, w);
  if (h == 0 || w == 0) return {std::move(out), 0};

  UnionFind uf(h * w);
  // First pass: union with already-scanned neighbors.
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) {
      if (!fg(r, c)) continue;
      const int id = static_cast<int>(r * w + c);
      if (c > 0 && fg(r, c - 1)) uf.unite(id, id - 1);
      if (r > 0) {
        if (fg(r - 1, c)) uf.unite(id, static_cast<int>((r - 1) * w + c));
        if (connectivity == 8) {
          if (c > 0 && fg(r - 1, c - 1))
            uf.unite(id, static_cast<int>((r - 1) * w + c - 1));
          if (c + 1 < w && fg(r - 1, c + 1))
            uf.unite(id, static_cast<int>((r - 1) * w + c + 1));
        }
      }
    }
  }
  // Second pass: assign labels in first-visited row-major order of roots.
  std::vector<int> root_label(static_cast<size_t>(h * w), 0);
  int count = 0;
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) {
      if (!fg(r, c)) continue;
      const int root = uf.find(static_cast<int>(r * w + c));
      if (root_label[root] == 0) root_label[root] = ++count;
      out.labels(r, c) = root_label[root];
    }
  }
  return {std::move(out), count};
}

}  // namespace

std::pair<LabelMap, int> connected_components(const BinaryImage& mask,
                                              int connectivity) {
  if (connectivity != 4 && connectivity != 8) {
    throw std::invalid_argument("connected_components: connectivity must be 4 or 8");
  }
  return label_components(mask.pix, connectivity);
}

std::pair<int, int> betti_numbers(const BinaryImage& mask) {
  const int beta0 = connected_components(mask, 8).second;

  // Bounded holes: 4-connected background components on a mask padded with a
  // one-pixel background ring (joins everything reaching the border into one
  // exterior component), minus that exterior.
  const Index h = mask.height(), w = mask.width();
  Mask2D bg = Mask2D::Ones(h + 2, w + 2);
  bg.block(1, 1, h, w) = (mask.pix == 0).cast<std::uint8_t>();
  const int bg_components = label_components(bg, 4).second;
  return {beta0, bg_components - 1};
}

int euler_characteristic_cubical(const BinaryImage& mask) {
  const Index h = mask.height(), w = mask.width();
  const auto fg = [&](Index r, Index c) -> bool {
    return r >= 0 && r < h && c >= 0 && c < w && mask.pix(r, c) != 0;
  };

  long vertices = 0;
  for (Index r = 0; r <= h; ++r)
    for (Index c = 0; c <= w; ++c)
      if (fg(r - 1, c - 1) || fg(r - 1, c) || fg(r, c - 1) || fg(r, c))
        ++vertices;

  long edges = 0;
  // Horizontal unit edges, shared by the pixel above and below.
  for (Index r = 0; r <= h; ++r)
    for (Index c = 0; c < w; ++c)
      if (fg(r - 1, c) || fg(r, c)) ++edges;
  // Vertical unit edges, shared by the pixel left and right.
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c <= w; ++c)
      if (fg(r, c - 1) || fg(r, c)) ++edges;

  const long faces = mask.count();
  return static_cast<int>(vertices - edges + faces);
}

int euler_characteristic(const BinaryImage& mask) {
  // Quad-pattern counter: every 2x2 window (background outside the canvas)
  // contributes by its foreground count; diagonal pairs are subtracted under
  // the foreground-8 convention. chi = (Q1 - Q3 - 2*Qd) / 4.
  const Index h = mask.height(), w = mask.width();
  const auto fg = [&](Index r, Index c) -> int {
    return (r >= 0 && r < h && c >= 0 && c < w && mask.pix(r, c) != 0) ? 1 : 0;
  };
  long q1 = 0, q3 = 0, qd = 0;
  for (Index r = -1; r < h; ++r) {
    for (Index c = -1; c < w; ++c) {
      const int a = fg(r, c), b = fg(r, c + 1);
      const int d = fg(r + 1, c), e = fg(r + 1, c + 1);
      const int n = a + b + d + e;
      if (n == 1) ++q1;
      else if (n == 3) ++q3;
      else if (n == 2 && ((a && e) || (b && d))) ++qd;
    }
  }
  return static_cast<int>((q1 - q3 - 2 * qd) / 4);
}

namespace {

// Crossing number A (0->1 transitions around p2..p9 clockwise from north)
// and neighbor count B for the Zhang-Suen conditions.
struct ZsNeighborhood {
  int p[8];  // p2..p9

  int count() const {
    int b = 0;
    for (const int v : p) b += v;
    return b;
  }
  int crossings() const {
    int a = 0;
    for (int i = 0; i < 8; ++i) a += p[i] == 0 && p[(i + 1) % 8] == 1;
    return a;
  }
  // A(p)=1 with 2<=B<=6 marks an 8-simple, non-endpoint pixel: deleting it
  // changes neither beta0 nor beta1.
  bool simple() const {
    const int b = count();
    return b >= 2 && b <= 6 && crossings() == 1;
  }
  bool candidate(int sub) const {
    if (!simple()) return false;
    const int p2 = p[0], p4 = p[2], p6 = p[4], p8 = p[6];
    if (sub == 0) return (p2 * p4 * p6) == 0 && (p4 * p6 * p8) == 0;
    return (p2 * p4 * p8) == 0 && (p2 * p6 * p8) == 0;
  }
};

ZsNeighborhood neighborhood(const Mask2D& m, Index r, Index c) {
  const Index h = m.rows(), w = m.cols();
  const auto at = [&](Index rr, Index cc) -> int {
    return (rr >= 0 && rr < h && cc >= 0 && cc < w && m(rr, cc) != 0) ? 1 : 0;
  };
  return {{at(r - 1, c), at(r - 1, c + 1), at(r, c + 1), at(r + 1, c + 1),
           at(r + 1, c), at(r + 1, c - 1), at(r, c - 1), at(r - 1, c - 1)}};
}

}  // namespace

BinaryImage skeletonize(const BinaryImage& mask) {
  BinaryImage skel(Mask2D(mask.pix));
  Mask2D& m = skel.pix;
  const Index h = m.rows(), w = m.cols();

  // Candidates are marked on the frozen pre-subiteration state (one boundary
  // layer per sweep, keeping the skeleton centered), then deleted in
  // row-major order with a simple-point re-check on the current state.
  // Fully batched deletion erases isolated 2x2 blocks and breaks beta0.
  std::vector<std::pair<Index, Index>> candidates;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int sub = 0; sub < 2; ++sub) {
      candidates.clear();
      for (Index r = 0; r < h; ++r)
        for (Index c = 0; c < w; ++c)
          if (m(r, c) && neighborhood(m, r, c).candidate(sub))
            candidates.emplace_back(r, c);
      for (const auto& [r, c] : candidates) {
        if (neighborhood(m, r, c).simple()) {
          m(r, c) = 0;
          changed = true;
        }
      }
    }
  }
  return skel;
}

Scalar cldice_metric(const BinaryImage& pred, const BinaryImage& gt) {
  if (!pred.same_shape(gt)) {
    throw std::invalid_argument("cldice_metric: dimension mismatch");
  }
  const BinaryImage sp = skeletonize(pred);
  const BinaryImage sg = skeletonize(gt);
  const Index np = sp.count(), ng = sg.count();
  if (np == 0 && ng == 0) return 1.0;
  if (np == 0 || ng == 0) return 0.0;

  const Index sp_in_gt = ((sp.pix != 0) && (gt.pix != 0)).count();
  const Index sg_in_pred = ((sg.pix != 0) && (pred.pix != 0)).count();
  const Scalar tprec = static_cast<Scalar>(sp_in_gt) / static_cast<Scalar>(np);
  const Scalar tsens = static_cast<Scalar>(sg_in_pred) / static_cast<Scalar>(ng);
  if (tprec + tsens == 0.0) return 0.0;
  return 2.0 * tprec * tsens / (tprec + tsens);
}

PixelMetrics pixel_metrics(const BinaryImage& pred, const BinaryImage& gt) {
  if (!pred.same_shape(gt)) {
    throw std::invalid_argument("pixel_metrics: dimension mismatch");
  }
  const Index tp = ((pred.pix != 0) && (gt.pix != 0)).count();
  const Index fp = ((pred.pix != 0) && (gt.pix == 0)).count();
  const Index fn = ((pred.pix == 0) && (gt.pix != 0)).count();

  PixelMetrics m;
  m.precision = (tp + fp == 0) ? 1.0
                               : static_cast<Scalar>(tp) / static_cast<Scalar>(tp + fp);
  m.recall = (tp + fn == 0) ? 1.0
                            : static_cast<Scalar>(tp) / static_cast<Scalar>(tp + fn);
  m.dice = (2 * tp + fp + fn == 0)
               ? 1.0
               : 2.0 * static_cast<Scalar>(tp) / static_cast<Scalar>(2 * tp + fp + fn);
  return m;
}

TopologySummary evaluate_pair(const BinaryImage& pred, const BinaryImage& gt) {
  if (!pred.same_shape(gt)) {
    throw std::invalid_argument("evaluate_pair: dimension mismatch");
  }
  TopologySummary s;
  const auto [pb0, pb1] = betti_numbers(pred);
  const auto [gb0, gb1] = betti_numbers(gt);
  const int pchi = euler_characteristic(pred);
  const int gchi = euler_characteristic(gt);
  s.beta0 = pb0;
  s.beta1 = pb1;
  s.euler = pchi;
  s.err_b0 = std::abs(pb0 - gb0);
  s.err_b1 = std::abs(pb1 - gb1);
  s.err_chi = std::abs(pchi - gchi);
  s.cldice = cldice_metric(pred, gt);
  const PixelMetrics pm = pixel_metrics(pred, gt);
  s.precision = pm.precision;
  s.recall = pm.recall;
  s.dice = pm.dice;
  return s;
}

}  // namespace scope
