#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "sparsink/errors.hpp"
#include "sparsink/measures.hpp"

using namespace sparsink;

namespace {

PointList grid1d(std::size_t n) {
  PointList p;
  p.dim = 1;
  for (std::size_t i = 0; i < n; ++i)
    p.coords.push_back(static_cast<double>(i));
  return p;
}

}  // namespace

TEST_CASE("new_measure validates and records total mass") {
  auto m = new_measure({0.5, 1.5, 2.0}, grid1d(3));
  CHECK(m.size() == 3);
  CHECK(m.total_mass == doctest::Approx(4.0));

  CHECK_THROWS_AS(new_measure({0.5, -0.1}, grid1d(2)), NegativeWeight);
  CHECK_THROWS_AS(new_measure({0.0, 0.0}, grid1d(2)), NegativeWeight);
  CHECK_THROWS_AS(new_measure({0.5, 0.5, 0.5}, grid1d(2)), LengthMismatch);
  CHECK_THROWS_AS(new_measure({}, grid1d(0)), LengthMismatch);
  CHECK_THROWS_AS(new_measure({0.5, 0.6}, grid1d(2), true), NotNormalized);
  CHECK_NOTHROW(new_measure({0.5, 0.5}, grid1d(2), true));
}

TEST_CASE("measure_from_image puts atoms at (row, col) and normalizes") {
  FrameImage img;
  img.height = 2;
  img.width = 2;
  img.pixels = {0.0, 0.2, 0.3, 0.5};
  auto m = measure_from_image(img);
  CHECK(m.size() == 4);
  CHECK(m.total_mass == doctest::Approx(1.0));
  CHECK(m.weights[3] == doctest::Approx(0.5));
  CHECK(m.weights[0] == 0.0);
  // atom 2 is pixel (1, 0)
  CHECK(m.support.point(2)[0] == 1.0);
  CHECK(m.support.point(2)[1] == 0.0);

  img.pixels = {0.0, 0.0, 0.0, 0.0};
  CHECK_THROWS_AS(measure_from_image(img), AllBlack);
  img.pixels = {0.0, 0.0, 0.0, 1.5};
  CHECK_THROWS_AS(measure_from_image(img), NegativeWeight);
}

TEST_CASE("mean_pool averages non-overlapping windows") {
  FrameImage img;
  img.height = 4;
  img.width = 4;
  img.pixels.resize(16);
  for (std::size_t k = 0; k < 16; ++k) img.pixels[k] = static_cast<double>(k) / 16.0;
  auto out = mean_pool(img, 2, 2);
  CHECK(out.height == 2);
  CHECK(out.width == 2);
  // top-left window is pixels {0,1,4,5}/16
  CHECK(out.pixels[0] == doctest::Approx(10.0 / 64.0));

  CHECK_THROWS_AS(mean_pool(img, 5, 5), EmptyOutput);
  CHECK_THROWS_AS(mean_pool(img, 0, 1), LengthMismatch);
}

TEST_CASE("measure csv round trip") {
  PointList p;
  p.dim = 2;
  p.coords = {0.25, 0.5, 0.125, 1.0 / 3.0};
  auto m = new_measure({0.4, 0.6}, p, true);
  const std::string path = "tmp_measure_rt.csv";
  write_measure_csv(m, path);
  auto back = read_measure_csv(path, true);
  REQUIRE(back.size() == 2);
  CHECK(back.weights == m.weights);
  CHECK(back.support.coords == m.support.coords);
  std::remove(path.c_str());

  CHECK_THROWS_AS(read_measure_csv("does_not_exist.csv"), IoError);
}

TEST_CASE("pgm reader handles ascii and binary with comments") {
  const std::string path = "tmp_frame.pgm";
  {
    std::ofstream f(path);
    f << "P2\n# a comment\n3 2\n10\n0 5 10\n10 5 0\n";
  }
  auto img = read_pgm(path);
  CHECK(img.width == 3);
  CHECK(img.height == 2);
  CHECK(img.pixels[1] == doctest::Approx(0.5));
  CHECK(img.pixels[2] == doctest::Approx(1.0));

  {
    std::ofstream f(path, std::ios::binary);
    f << "P5\n2 2\n255\n";
    const unsigned char raw[4] = {0, 51, 102, 255};
    f.write(reinterpret_cast<const char*>(raw), 4);
  }
  img = read_pgm(path);
  CHECK(img.pixels[1] == doctest::Approx(0.2));
  CHECK(img.pixels[3] == doctest::Approx(1.0));

  {
    std::ofstream f(path);
    f << "P3\n1 1\n255\n0\n";
  }
  CHECK_THROWS_AS(read_pgm(path), IoError);
  std::remove(path.c_str());
}
