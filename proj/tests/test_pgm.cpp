#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "scope/pgm.hpp"
#include "test_util.hpp"

using namespace scope;
using namespace scope::test;

TEST_CASE("ascii P2 parsing") {
  const std::string dir = temp_dir("pgm_p2");
  spit(dir + "/a.pgm", "P2 2 2 255\n0 255 255 0\n");
  const GrayImage img = read_pgm(dir + "/a.pgm");
  REQUIRE(img.height() == 2);
  REQUIRE(img.width() == 2);
  CHECK(img.pix(0, 0) == 0.0);
  CHECK(img.pix(0, 1) == 1.0);
  CHECK(img.pix(1, 0) == 1.0);
  CHECK(img.pix(1, 1) == 0.0);
}

TEST_CASE("P2 with comments and odd whitespace") {
  const std::string dir = temp_dir("pgm_comments");
  spit(dir + "/a.pgm", "P2 # magic\n# a comment line\n 2\t1 \n255\n10 20\n");
  const GrayImage img = read_pgm(dir + "/a.pgm");
  REQUIRE(img.height() == 1);
  REQUIRE(img.width() == 2);
  CHECK(img.pix(0, 0) == doctest::Approx(10.0 / 255.0));
}

TEST_CASE("binary P5 saturated") {
  const std::string dir = temp_dir("pgm_p5");
  spit(dir + "/a.pgm", std::string("P5\n3 2\n255\n") + std::string(6, '\xff'));
  const GrayImage img = read_pgm(dir + "/a.pgm");
  CHECK((img.pix == 1.0).all());
}

TEST_CASE("write encoding rules") {
  const std::string dir = temp_dir("pgm_write");

  GrayImage zeros(4, 4);
  write_pgm(zeros, dir + "/z.pgm", 255);
  const std::string bytes = slurp(dir + "/z.pgm");
  const std::string header = "P5\n4 4\n255\n";
  REQUIRE(bytes.size() == header.size() + 16);
  CHECK(bytes.substr(0, header.size()) == header);
  for (size_t i = header.size(); i < bytes.size(); ++i) CHECK(bytes[i] == '\0');

  GrayImage half(1, 1);
  half.pix(0, 0) = 0.5;
  write_pgm(half, dir + "/h.pgm", 255);
  const std::string hb = slurp(dir + "/h.pgm");
  CHECK(static_cast<unsigned char>(hb.back()) == 128);  // round half up

  CHECK_THROWS_AS(write_pgm(zeros, dir + "/bad.pgm", 100), std::invalid_argument);
}

TEST_CASE("round-trip is the identity on canonical files") {
  const std::string dir = temp_dir("pgm_roundtrip");
  Rng rng(2024);
  for (const int maxval : {255, 65535}) {
    for (int trial = 0; trial < 100; ++trial) {
      const Index h = 1 + static_cast<Index>(rng.uniform_int(1, 12));
      const Index w = 1 + static_cast<Index>(rng.uniform_int(1, 12));
      const GrayImage img = random_gray(h, w, rng);

      const std::string p1 = dir + "/r1.pgm";
      const std::string p2 = dir + "/r2.pgm";
      write_pgm(img, p1, maxval);
      const GrayImage back = read_pgm(p1);
      write_pgm(back, p2, maxval);
      REQUIRE(slurp(p1) == slurp(p2));  // write(read(f)) byte-identical

      REQUIRE(back.height() == h);
      REQUIRE(back.width() == w);
      CHECK((img.pix - back.pix).abs().maxCoeff() <= 0.5 / maxval + 1e-12);
    }
  }
}

TEST_CASE("distinct error values") {
  const std::string dir = temp_dir("pgm_errors");

  spit(dir + "/magic.pgm", "P3 2 2 255\n0 0 0 0\n");
  try {
    read_pgm(dir + "/magic.pgm");
    FAIL("expected throw");
  } catch (const PgmIoError& e) {
    CHECK(e.code() == PgmError::UnsupportedMagic);
  }

  spit(dir + "/header.pgm", "P5 two 2 255\n");
  try {
    read_pgm(dir + "/header.pgm");
    FAIL("expected throw");
  } catch (const PgmIoError& e) {
    CHECK(e.code() == PgmError::MalformedHeader);
  }

  spit(dir + "/trunc.pgm", "P5\n4 4\n255\nabc");
  try {
    read_pgm(dir + "/trunc.pgm");
    FAIL("expected throw");
  } catch (const PgmIoError& e) {
    CHECK(e.code() == PgmError::TruncatedPayload);
  }

  spit(dir + "/pix.pgm", "P2 2 1 100\n5 101\n");
  try {
    read_pgm(dir + "/pix.pgm");
    FAIL("expected throw");
  } catch (const PgmIoError& e) {
    CHECK(e.code() == PgmError::InvalidPixel);
  }

  try {
    read_pgm(dir + "/does_not_exist.pgm");
    FAIL("expected throw");
  } catch (const PgmIoError& e) {
    CHECK(e.code() == PgmError::IoFailure);
  }
}

TEST_CASE("mask files use maxval 255 with values 0 and 255") {
  const std::string dir = temp_dir("pgm_mask");
  BinaryImage m(2, 3);
  m.pix(0, 1) = 1;
  m.pix(1, 2) = 1;
  write_mask_pgm(m, dir + "/m.pgm");
  const std::string bytes = slurp(dir + "/m.pgm");
  for (size_t i = bytes.size() - 6; i < bytes.size(); ++i) {
    const auto v = static_cast<unsigned char>(bytes[i]);
    CHECK((v == 0 || v == 255));
  }
  CHECK(read_mask_pgm(dir + "/m.pgm") == m);
}
