#pragma once

#include "scope/image.hpp"

#include <utility>
#include <vector>

namespace scope {

/// Non-overlapping n x n patch grid over an H x W image. Vertex ids are
/// row-major over the patch grid.
struct PatchGrid {
  Index image_height = 0;
  Index image_width = 0;
  Index patch = 1;

  Index rows() const { return image_height / patch; }
  Index cols() const { return image_width / patch; }
  Index vertex_count() const { return rows() * cols(); }
};

/// Patch vertices plus the 8-neighbor edge list, stored as (i, j) with
/// i < j, sorted lexicographically.
struct GridGraph {
  PatchGrid grid;
  std::vector<std::pair<int, int>> edges;
};

/// Throws std::invalid_argument unless n divides both H and W.
GridGraph build_grid_graph(Index image_height, Index image_width, Index patch);

/// Winning pixel index (flat, row-major over the image) per vertex and
/// channel, produced by the forward max-pool.
struct PoolCache {
  Array2I argmax;  // N x C
  Index image_height = 0;
  Index image_width = 0;
};

/// Per-channel max over each vertex's n x n patch. pixel_features is
/// (H*W) x C with row p = features of pixel p. Ties go to the first
/// maximal pixel in row-major order.
Matrix pool_node_features(const Matrix& pixel_features, const PatchGrid& grid,
                          PoolCache* cache = nullptr);

/// Routes each vertex/channel gradient entirely to the argmax pixel.
Matrix backprop_pool(const Matrix& grad_nodes, const PoolCache& cache);

/// Replicates each vertex value over its n x n pixel block.
GrayImage nodes_to_pixels(const Vector& preds, const PatchGrid& grid);

/// Row-major reshape of per-vertex scalars to the rows x cols patch grid.
Array2D reshape_nodes_to_grid(const Vector& preds, const PatchGrid& grid);

/// Block-max of a pixel mask down to the patch grid: a patch containing any
/// foreground pixel maps to 1.
Array2D pool_mask_to_grid(const BinaryImage& mask, const PatchGrid& grid);

}  // namespace scope
