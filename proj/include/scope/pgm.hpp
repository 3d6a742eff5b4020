#pragma once

#include "scope/image.hpp"

#include <stdexcept>
#include <string>

namespace scope {

enum class PgmError {
  UnsupportedMagic,
  MalformedHeader,
  TruncatedPayload,
  InvalidPixel,
  IoFailure,
};

class PgmIoError : public std::runtime_error {
 public:
  PgmIoError(PgmError code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  PgmError code() const { return code_; }

 private:
  PgmError code_;
};

/// Reads a P2 (ASCII) or P5 (binary) PGM file. Intensities are scaled to
/// [0,1] by division by the header maxval (16-bit P5 payloads are big-endian).
GrayImage read_pgm(const std::string& path);

/// Writes canonical P5: "P5\n<W> <H>\n<maxval>\n" followed by the payload.
/// Pixel v is encoded as round(v * maxval), round half up. maxval must be
/// 255 or 65535.
void write_pgm(const GrayImage& img, const std::string& path, int maxval = 255);

/// Mask convention: maxval 255 with values {0,255}. Reading thresholds at 0.5.
BinaryImage read_mask_pgm(const std::string& path);
void write_mask_pgm(const BinaryImage& mask, const std::string& path);

}  // namespace scope
