#include "scope/pgm.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace scope {

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  return tok;
}

long parse_header_int(std::istream& in, const char* field) {
  const std::string tok = next_token(in);
  if (tok.empty()) {
    throw PgmIoError(PgmError::MalformedHeader,
                     std::string("pgm: missing header field ") + field);
  }
  long value = 0;
  for (char ch : tok) {
    if (ch < '0' || ch > '9') {
      throw PgmIoError(PgmError::MalformedHeader,
                       std::string("pgm: non-numeric header field ") + field);
    }
    value = value * 10 + (ch - '0');
    if (value > 1000000) {
      throw PgmIoError(PgmError::MalformedHeader,
                       std::string("pgm: header field out of range ") + field);
    }
  }
  return value;
}

}  // namespace

GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw PgmIoError(PgmError::IoFailure, "pgm: cannot open " + path);
  }

  const std::string magic = next_token(in);
  if (magic != "P2" && magic != "P5") {
    throw PgmIoError(PgmError::UnsupportedMagic,
                     "pgm: unsupported magic '" + magic + "' in " + path);
  }
  const long width = parse_header_int(in, "width");
  const long height = parse_header_int(in, "height");
  const long maxval = parse_header_int(in, "maxval");
  if (width <= 0 || height <= 0) {
    throw PgmIoError(PgmError::MalformedHeader, "pgm: bad dimensions in " + path);
  }
  if (maxval <= 0 || maxval > 65535) {
    throw PgmIoError(PgmError::MalformedHeader, "pgm: bad maxval in " + path);
  }

  GrayImage img(height, width);
  const Scalar scale = 1.0 / static_cast<Scalar>(maxval);
  const Index n = static_cast<Index>(width) * height;
  Scalar* dst = img.pix.data();

  if (magic == "P2") {
    for (Index i = 0; i < n; ++i) {
      long v = 0;
      if (!(in >> v)) {
        throw PgmIoError(PgmError::TruncatedPayload,
                         "pgm: truncated ASCII payload in " + path);
      }
      if (v < 0 || v > maxval) {
        throw PgmIoError(PgmError::InvalidPixel,
                         "pgm: pixel value out of range in " + path);
      }
      dst[i] = static_cast<Scalar>(v) * scale;
    }
  } else {
    // Exactly one whitespace byte separates maxval from the payload; the
    // token reader has already consumed it.
    const int bytes_per = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(static_cast<size_t>(n) * bytes_per);
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
      throw PgmIoError(PgmError::TruncatedPayload,
                       "pgm: truncated binary payload in " + path);
    }
    if (bytes_per == 1) {
      for (Index i = 0; i < n; ++i) {
        if (raw[i] > maxval) {
          throw PgmIoError(PgmError::InvalidPixel,
                           "pgm: pixel value exceeds maxval in " + path);
        }
        dst[i] = static_cast<Scalar>(raw[i]) * scale;
      }
    } else {
      for (Index i = 0; i < n; ++i) {
        const unsigned v = (static_cast<unsigned>(raw[2 * i]) << 8) |
                           static_cast<unsigned>(raw[2 * i + 1]);
        if (v > static_cast<unsigned>(maxval)) {
          throw PgmIoError(PgmError::InvalidPixel,
                           "pgm: pixel value exceeds maxval in " + path);
        }
        dst[i] = static_cast<Scalar>(v) * scale;
      }
    }
  }
  return img;
}

void write_pgm(const GrayImage& img, const std::string& path, int maxval) {
  if (maxval != 255 && maxval != 65535) {
    throw std::invalid_argument("write_pgm: maxval must be 255 or 65535");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw PgmIoError(PgmError::IoFailure, "pgm: cannot open for write " + path);
  }
  out << "P5\n" << img.width() << " " << img.height() << "\n" << maxval << "\n";

  const Index n = img.height() * img.width();
  const Scalar* src = img.pix.data();
  std::vector<unsigned char> raw;
  if (maxval == 255) {
    raw.resize(static_cast<size_t>(n));
    for (Index i = 0; i < n; ++i) {
      raw[i] = static_cast<unsigned char>(
          std::floor(src[i] * 255.0 + 0.5));  // round half up
    }
  } else {
    raw.resize(static_cast<size_t>(n) * 2);
    for (Index i = 0; i < n; ++i) {
      const auto v =
          static_cast<std::uint16_t>(std::floor(src[i] * 65535.0 + 0.5));
      raw[2 * i] = static_cast<unsigned char>(v >> 8);  // big-endian
      raw[2 * i + 1] = static_cast<unsigned char>(v & 0xff);
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) {
    throw PgmIoError(PgmError::IoFailure, "pgm: write failed for " + path);
  }
}

BinaryImage read_mask_pgm(const std::string& path) {
  return threshold(read_pgm(path), 0.5);
}

void write_mask_pgm(const BinaryImage& mask, const std::string& path) {
  GrayImage g(mask.height(), mask.width());
  g.pix = mask.pix.cast<Scalar>();
  write_pgm(g, path, 255);
}

}  // namespace scope
