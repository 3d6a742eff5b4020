#pragma once

#include <Eigen/Core>
#include <Eigen/Sparse>

#include <cstdint>

namespace scope {

using Scalar = double;
using Index = Eigen::Index;

template <class S>
using MatrixT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using Array2T = Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Node-feature matrices, layer weights: one row per vertex / input unit.
using Matrix = MatrixT<Scalar>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using VectorI = Eigen::Matrix<int, Eigen::Dynamic, 1>;

// 2D pixel fields, row-major so .data() matches file order.
using Array2D = Array2T<Scalar>;
using Mask2D = Array2T<std::uint8_t>;
using Array2I = Array2T<std::int32_t>;

// Row-compressed sparse operator (normalized adjacency).
using SparseOp = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

}  // namespace scope
