#pragma once

#include "scope/types.hpp"

namespace scope {

/// Grayscale raster with intensities in [0,1], stored row-major.
struct GrayImage {
  Array2D pix;

  GrayImage() = default;
  GrayImage(Index h, Index w) : pix(Array2D::Zero(h, w)) {}
  explicit GrayImage(Array2D p) : pix(std::move(p)) {}

  Index height() const { return pix.rows(); }
  Index width() const { return pix.cols(); }

  bool same_shape(const GrayImage& o) const {
    return height() == o.height() && width() == o.width();
  }
};

/// Binary raster with values {0,1}, stored row-major.
struct BinaryImage {
  Mask2D pix;

  BinaryImage() = default;
  BinaryImage(Index h, Index w) : pix(Mask2D::Zero(h, w)) {}
  explicit BinaryImage(Mask2D p) : pix(std::move(p)) {}

  Index height() const { return pix.rows(); }
  Index width() const { return pix.cols(); }

  bool same_shape(const BinaryImage& o) const {
    return height() == o.height() && width() == o.width();
  }
  Index count() const { return (pix != 0).count(); }

  friend bool operator==(const BinaryImage& a, const BinaryImage& b) {
    return a.same_shape(b) && (a.pix == b.pix).all();
  }
};

/// Pixel is foreground iff intensity > t. t must lie in [0,1].
BinaryImage threshold(const GrayImage& img, Scalar t);

}  // namespace scope
