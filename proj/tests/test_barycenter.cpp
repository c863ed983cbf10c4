#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sparsink/barycenter.hpp"
#include "sparsink/errors.hpp"

using namespace sparsink;

namespace {

PointList grid1d(std::size_t n) {
  PointList p;
  p.dim = 1;
  for (std::size_t i = 0; i < n; ++i)
    p.coords.push_back(static_cast<double>(i + 1) / static_cast<double>(n + 1));
  return p;
}

std::vector<double> bump(std::size_t n, double mu, double sigma) {
  std::vector<double> w(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i + 1) / static_cast<double>(n + 1);
    total += (w[i] = std::exp(-0.5 * (x - mu) * (x - mu) / (sigma * sigma)));
  }
  for (double& v : w) v /= total;
  return w;
}

}  // namespace

TEST_CASE("barycenter of identical measures reproduces the measure") {
  const std::size_t n = 25;
  auto sup = grid1d(n);
  auto b = new_measure(bump(n, 0.5, 0.15), sup, true);
  // small eps relative to the bump width keeps the entropic blur mild while
  // the kernel still mixes fast enough to converge
  auto K = kernel_from_cost(sq_euclidean_cost(sup, sup), 2e-3);

  std::vector<const KernelMatrix*> ks{&K, &K, &K};
  std::vector<const DiscreteMeasure*> ms{&b, &b, &b};
  BarycenterConfig cfg;
  cfg.delta = 1e-10;
  cfg.max_iter = 100000;
  auto res = ibp(ks, ms, {1.0 / 3, 1.0 / 3, 1.0 / 3}, cfg);
  REQUIRE(res.converged);
  double l1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) l1 += std::abs(res.weights[i] - b.weights[i]);
  CHECK(l1 < 0.2);
}

TEST_CASE("mirror-symmetric inputs give a symmetric barycenter") {
  const std::size_t n = 24;
  auto sup = grid1d(n);
  auto b1 = new_measure(bump(n, 0.3, 0.1), sup, true);
  auto b2 = new_measure(bump(n, 0.7, 0.1), sup, true);
  auto K = kernel_from_cost(sq_euclidean_cost(sup, sup), 0.01);

  std::vector<const KernelMatrix*> ks{&K, &K};
  std::vector<const DiscreteMeasure*> ms{&b1, &b2};
  BarycenterConfig cfg;
  cfg.delta = 1e-10;
  cfg.max_iter = 100000;
  auto res = ibp(ks, ms, {0.5, 0.5}, cfg);
  REQUIRE(res.converged);
  for (std::size_t i = 0; i < n / 2; ++i)
    CHECK(res.weights[i] == doctest::Approx(res.weights[n - 1 - i]).epsilon(1e-6));
  double total = 0.0;
  for (double q : res.weights) {
    CHECK(q >= 0.0);
    total += q;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("zero-weight components are ignored entirely") {
  const std::size_t n = 20;
  auto sup = grid1d(n);
  auto b1 = new_measure(bump(n, 0.4, 0.12), sup, true);
  auto b2 = new_measure(bump(n, 0.8, 0.12), sup, true);
  auto K = kernel_from_cost(sq_euclidean_cost(sup, sup), 0.01);

  std::vector<const KernelMatrix*> ks{&K, &K};
  std::vector<const DiscreteMeasure*> ms{&b1, &b2};
  BarycenterConfig cfg;
  cfg.delta = 1e-10;
  cfg.max_iter = 100000;
  auto full = ibp(ks, ms, {1.0, 0.0}, cfg);

  std::vector<const KernelMatrix*> k1{&K};
  std::vector<const DiscreteMeasure*> m1{&b1};
  auto solo = ibp(k1, m1, {1.0}, cfg);
  for (std::size_t i = 0; i < n; ++i)
    CHECK(full.weights[i] == doctest::Approx(solo.weights[i]).epsilon(1e-10));
}

TEST_CASE("weight and size validation") {
  const std::size_t n = 10;
  auto sup = grid1d(n);
  auto b = new_measure(bump(n, 0.5, 0.2), sup, true);
  auto K = kernel_from_cost(sq_euclidean_cost(sup, sup), 0.05);
  std::vector<const KernelMatrix*> ks{&K, &K};
  std::vector<const DiscreteMeasure*> ms{&b, &b};
  BarycenterConfig cfg;

  CHECK_THROWS_AS(ibp(ks, ms, {0.6, 0.6}, cfg), NotNormalized);
  CHECK_THROWS_AS(ibp(ks, ms, {1.5, -0.5}, cfg), NegativeWeight);
  CHECK_THROWS_AS(ibp(ks, ms, {1.0}, cfg), LengthMismatch);
  std::vector<const KernelMatrix*> none;
  std::vector<const DiscreteMeasure*> nomeas;
  CHECK_THROWS_AS(ibp(none, nomeas, {}, cfg), LengthMismatch);
}

TEST_CASE("spar_ibp at a tiny budget masks atoms but still runs") {
  const std::size_t n = 60;
  auto sup = grid1d(n);
  auto b1 = new_measure(bump(n, 0.35, 0.1), sup, true);
  auto b2 = new_measure(bump(n, 0.65, 0.1), sup, true);
  auto K = kernel_from_cost(sq_euclidean_cost(sup, sup), 0.05);
  std::vector<const KernelMatrix*> ks{&K, &K};
  std::vector<const DiscreteMeasure*> ms{&b1, &b2};
  BarycenterConfig cfg;
  cfg.delta = 1e-9;
  cfg.max_iter = 20000;

  auto res = spar_ibp(ks, ms, {0.5, 0.5}, cfg, 180.0, 11);
  CHECK(res.masked_atoms > 0);
  double total = 0.0;
  for (double q : res.weights) total += q;
  CHECK(std::isfinite(total));

  CHECK_THROWS_AS(spar_ibp(ks, ms, {0.5, 0.5}, cfg, 180.0, 11, /*strict=*/true),
                  DegenerateSketchError);
}

TEST_CASE("spar_ibp is seed-deterministic") {
  const std::size_t n = 40;
  auto sup = grid1d(n);
  auto b1 = new_measure(bump(n, 0.4, 0.12), sup, true);
  auto b2 = new_measure(bump(n, 0.6, 0.12), sup, true);
  auto K = kernel_from_cost(sq_euclidean_cost(sup, sup), 0.05);
  std::vector<const KernelMatrix*> ks{&K, &K};
  std::vector<const DiscreteMeasure*> ms{&b1, &b2};
  BarycenterConfig cfg;
  cfg.delta = 1e-9;
  cfg.max_iter = 20000;

  auto r1 = spar_ibp(ks, ms, {0.5, 0.5}, cfg, 500.0, 21);
  auto r2 = spar_ibp(ks, ms, {0.5, 0.5}, cfg, 500.0, 21);
  CHECK(r1.weights == r2.weights);
  auto r3 = spar_ibp(ks, ms, {0.5, 0.5}, cfg, 500.0, 22);
  CHECK(r1.weights != r3.weights);
}
