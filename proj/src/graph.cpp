#include "scope/graph.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace scope {

GridGraph build_grid_graph(Index image_height, Index image_width, Index patch) {
  if (patch < 1 || image_height % patch != 0 || image_width % patch != 0) {
    throw std::invalid_argument("build_grid_graph: patch size must divide both dimensions");
  }
  GridGraph g;
  g.grid = PatchGrid{image_height, image_width, patch};
  const Index rows = g.grid.rows(), cols = g.grid.cols();
  g.edges.reserve(static_cast<size_t>(4 * rows * cols));
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      const int v = static_cast<int>(r * cols + c);
      // Neighbors with a larger id: E, SW, S, SE.
      if (c + 1 < cols) g.edges.emplace_back(v, v + 1);
      if (r + 1 < rows) {
        if (c > 0) g.edges.emplace_back(v, v + static_cast<int>(cols) - 1);
        g.edges.emplace_back(v, v + static_cast<int>(cols));
        if (c + 1 < cols) g.edges.emplace_back(v, v + static_cast<int>(cols) + 1);
      }
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

Matrix pool_node_features(const Matrix& pixel_features, const PatchGrid& grid,
                          PoolCache* cache) {
  const Index h = grid.image_height, w = grid.image_width, n = grid.patch;
  const Index channels = pixel_features.cols();
  if (pixel_features.rows() != h * w) {
    throw std::invalid_argument("pool_node_features: field does not match grid");
  }
  const Index rows = grid.rows(), cols = grid.cols();
  Matrix out(rows * cols, channels);
  Array2I argmax(rows * cols, channels);

  for (Index vr = 0; vr < rows; ++vr) {
    for (Index vc = 0; vc < cols; ++vc) {
      const Index v = vr * cols + vc;
      for (Index ch = 0; ch < channels; ++ch) {
        Scalar best = -std::numeric_limits<Scalar>::infinity();
        Index best_pix = 0;
        for (Index dr = 0; dr < n; ++dr) {
          for (Index dc = 0; dc < n; ++dc) {
            const Index p = (vr * n + dr) * w + (vc * n + dc);
            const Scalar val = pixel_features(p, ch);
            if (val > best) {  // strict: first maximal pixel wins ties
              best = val;
              best_pix = p;
            }
          }
        }
        out(v, ch) = best;
        argmax(v, ch) = static_cast<std::int32_t>(best_pix);
      }
    }
  }
  if (cache) {
    cache->argmax = std::move(argmax);
    cache->image_height = h;
    cache->image_width = w;
  }
  return out;
}

Matrix backprop_pool(const Matrix& grad_nodes, const PoolCache& cache) {
  if (grad_nodes.rows() != cache.argmax.rows() ||
      grad_nodes.cols() != cache.argmax.cols()) {
    throw std::invalid_argument("backprop_pool: stale cache dimensions");
  }
  Matrix grad_field =
      Matrix::Zero(cache.image_height * cache.image_width, grad_nodes.cols());
  for (Index v = 0; v < grad_nodes.rows(); ++v) {
    for (Index ch = 0; ch < grad_nodes.cols(); ++ch) {
      grad_field(cache.argmax(v, ch), ch) += grad_nodes(v, ch);
    }
  }
  return grad_field;
}

GrayImage nodes_to_pixels(const Vector& preds, const PatchGrid& grid) {
  if (preds.size() != grid.vertex_count()) {
    throw std::invalid_argument("nodes_to_pixels: length mismatch");
  }
  const Index n = grid.patch, cols = grid.cols();
  GrayImage out(grid.image_height, grid.image_width);
  for (Index r = 0; r < grid.image_height; ++r) {
    for (Index c = 0; c < grid.image_width; ++c) {
      out.pix(r, c) = preds[(r / n) * cols + (c / n)];
    }
  }
  return out;
}

Array2D reshape_nodes_to_grid(const Vector& preds, const PatchGrid& grid) {
  if (preds.size() != grid.vertex_count()) {
    throw std::invalid_argument("reshape_nodes_to_grid: length mismatch");
  }
  return Eigen::Map<const Array2D>(preds.data(), grid.rows(), grid.cols());
}

Array2D pool_mask_to_grid(const BinaryImage& mask, const PatchGrid& grid) {
  if (mask.height() != grid.image_height || mask.width() != grid.image_width) {
    throw std::invalid_argument("pool_mask_to_grid: mask does not match grid");
  }
  const Index n = grid.patch;
  Array2D out = Array2D::Zero(grid.rows(), grid.cols());
  for (Index r = 0; r < mask.height(); ++r) {
    for (Index c = 0; c < mask.width(); ++c) {
      if (mask.pix(r, c)) out(r / n, c / n) = 1.0;
    }
  }
  return out;
}

}  // namespace scope
