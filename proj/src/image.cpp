#include "scope/image.hpp"

#include <stdexcept>

namespace scope {

BinaryImage threshold(const GrayImage& img, Scalar t) {
  if (t < 0.0 || t > 1.0) {
    throw std::invalid_argument("threshold: t must be in [0,1]");
  }
  BinaryImage out(img.height(), img.width());
  out.pix = (img.pix > t).cast<std::uint8_t>();
  return out;
}

}  // namespace scope
