#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sparsink/errors.hpp"
#include "sparsink/rng.hpp"
#include "sparsink/sparsify.hpp"

using namespace sparsink;

namespace {

PointList pts1d(std::initializer_list<double> xs) {
  PointList p;
  p.dim = 1;
  p.coords = xs;
  return p;
}

KernelMatrix dense_kernel(std::size_t n, double eps, std::uint64_t seed) {
  PointList p;
  p.dim = 2;
  CounterRng rng(seed, 0);
  for (std::size_t k = 0; k < 2 * n; ++k) p.coords.push_back(rng.next_double());
  return kernel_from_cost(sq_euclidean_cost(p, p), eps);
}

DiscreteMeasure random_simplex(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed, 1);
  std::vector<double> w(n);
  double total = 0.0;
  for (double& x : w) total += (x = 0.1 + rng.next_double());
  for (double& x : w) x /= total;
  PointList p;
  p.dim = 1;
  for (std::size_t i = 0; i < n; ++i) p.coords.push_back(static_cast<double>(i));
  return new_measure(std::move(w), std::move(p), true);
}

double plan_sum(const SamplingPlan& plan, const KernelMatrix& K) {
  double s = 0.0;
  for (std::size_t i = 0; i < plan.size(); ++i)
    for (std::size_t j = 0; j < plan.size(); ++j)
      if (K.entries(i, j) > 0.0) s += plan.prob(i, j);
  return s;
}

}  // namespace

TEST_CASE("ot probabilities are sqrt(a_i b_j), normalized") {
  auto sup = pts1d({0.0, 1.0});
  auto a = new_measure({0.25, 0.75}, sup, true);
  auto b = new_measure({0.5, 0.5}, sup, true);
  auto K = dense_kernel(2, 1.0, 3);
  auto plan = ot_probabilities(a, b, K);
  CHECK(plan.factorized_storage());
  CHECK(plan.prob(0, 0) == doctest::Approx(0.18301270189221933).epsilon(1e-14));
  CHECK(plan.prob(1, 1) == doctest::Approx(0.31698729810778065).epsilon(1e-14));
  CHECK(plan_sum(plan, K) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("uot probabilities blend marginals and kernel with 1/3 exponents") {
  auto sup = pts1d({0.0, 1.0});
  auto a = new_measure({0.3, 0.7}, sup);
  auto b = new_measure({0.4, 0.6}, sup);
  KernelMatrix K;
  K.epsilon = 1.0;
  K.entries = Matrix(2, 2);
  K.entries(0, 0) = 1.0;
  K.entries(0, 1) = 0.5;
  K.entries(1, 0) = 0.25;
  K.entries(1, 1) = 1.0;
  K.nnz_ratio = 1.0;
  // lambda = eps = 1 puts exponent 1/3 on both factors
  auto plan = uot_probabilities(a, b, K, 1.0, 1.0);
  CHECK(plan.prob(0, 0) == doctest::Approx(0.2346093653249565).epsilon(1e-13));
  CHECK(plan.prob(0, 1) == doctest::Approx(0.2131567545016285).epsilon(1e-13));
  CHECK(plan.prob(1, 0) == doctest::Approx(0.19602777445115938).epsilon(1e-13));
  CHECK(plan.prob(1, 1) == doctest::Approx(0.35620610572225564).epsilon(1e-13));
}

TEST_CASE("barycenter probabilities are column-constant") {
  auto sup = pts1d({0.0, 1.0, 2.0});
  auto b = new_measure({0.25, 0.25, 0.5}, sup, true);
  auto K = dense_kernel(3, 1.0, 5);
  auto plan = barycenter_probabilities(b, K);
  CHECK(plan.prob(0, 2) == plan.prob(1, 2));
  CHECK(plan.prob(0, 2) == plan.prob(2, 2));
  CHECK(plan_sum(plan, K) == doctest::Approx(1.0).epsilon(1e-12));
  // heavier column gets more probability
  CHECK(plan.prob(0, 2) > plan.prob(0, 0));
}

TEST_CASE("uniform shrinkage mixes towards 1/nnz") {
  auto sup = pts1d({0.0, 1.0});
  auto a = new_measure({0.25, 0.75}, sup, true);
  auto b = new_measure({0.5, 0.5}, sup, true);
  auto K = dense_kernel(2, 1.0, 9);
  auto plan = ot_probabilities(a, b, K);
  auto mixed = shrink_with_uniform(plan, 0.4);
  CHECK(mixed.prob(0, 0) ==
        doctest::Approx(0.6 * plan.prob(0, 0) + 0.4 / 4.0).epsilon(1e-14));
  CHECK(plan_sum(mixed, K) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(shrink_with_uniform(plan, 1.0), ThetaOutOfRange);
  CHECK_THROWS_AS(shrink_with_uniform(plan, -0.1), ThetaOutOfRange);
}

TEST_CASE("saturated budget reproduces the kernel exactly") {
  // A dense kernel cannot saturate below the s < n^2 cap (min p <= 1/n^2),
  // so truncate it first: with uniform weights the masked plan is exactly
  // 1/nnz on the support and s slightly above nnz saturates every entry.
  const std::size_t n = 20;
  PointList p;
  p.dim = 2;
  CounterRng rng(31, 0);
  for (std::size_t k = 0; k < 2 * n; ++k) p.coords.push_back(rng.next_double());
  const double eta = eta_for_sparsity(p, 0.5);
  auto K = kernel_from_cost(wfr_cost(p, p, eta), 0.5);
  REQUIRE(K.nnz_ratio < 0.6);

  auto u = new_measure(std::vector<double>(n, 1.0 / n), p, true);
  auto plan = ot_probabilities(u, u, K);
  const double nnz = K.nnz_ratio * static_cast<double>(n * n);
  const double s = nnz * 1.01;
  REQUIRE(s < static_cast<double>(n * n));

  auto sk = poisson_sparsify(K, plan, s, 77);
  CHECK(static_cast<double>(sk.realized_nnz) == nnz);
  auto D = sk.to_dense();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      CHECK(D(i, j) == K.entries(i, j));  // bit-identical, no rescaling
}

TEST_CASE("sketch is reproducible per seed and respects the budget") {
  const std::size_t n = 40;
  auto K = dense_kernel(n, 0.5, 13);
  auto a = random_simplex(n, 3);
  auto b = random_simplex(n, 4);
  auto plan = ot_probabilities(a, b, K);

  auto s1 = poisson_sparsify(K, plan, 200.0, 42);
  auto s2 = poisson_sparsify(K, plan, 200.0, 42);
  CHECK(s1.col_idx == s2.col_idx);
  CHECK(s1.values == s2.values);
  auto s3 = poisson_sparsify(K, plan, 200.0, 43);
  CHECK(s1.col_idx != s3.col_idx);

  // E[nnz] <= s; allow 5 sigma of Poisson-ish slack
  CHECK(static_cast<double>(s1.realized_nnz) < 200.0 + 5.0 * std::sqrt(200.0));

  CHECK_THROWS_AS(poisson_sparsify(K, plan, 0.0, 1), BudgetTooLarge);
  CHECK_THROWS_AS(
      poisson_sparsify(K, plan, static_cast<double>(n) * n, 1), BudgetTooLarge);
}

TEST_CASE("sketch mean is unbiased for the kernel (light Monte Carlo)") {
  const std::size_t n = 8;
  auto K = dense_kernel(n, 0.5, 17);
  auto plan = uniform_probabilities(K);
  const double s = 20.0;
  const std::size_t reps = 4000;
  Matrix mean(n, n);
  for (std::size_t r = 0; r < reps; ++r) {
    auto sk = poisson_sparsify(K, plan, s, 1000 + r);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = sk.row_ptr[i]; p < sk.row_ptr[i + 1]; ++p)
        mean(i, sk.col_idx[p]) += sk.values[p];
  }
  std::size_t within = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double m = mean(i, j) / static_cast<double>(reps);
      const double k = K.entries(i, j);
      const double pstar = std::min(1.0, s * plan.prob(i, j));
      const double se =
          k * std::sqrt((1.0 - pstar) / pstar / static_cast<double>(reps));
      if (std::abs(m - k) <= 3.0 * se + 1e-15) ++within;
    }
  // ~99.7% expected inside 3 sigma; demand 95% on 64 entries
  CHECK(within >= 61);
}

TEST_CASE("spmv and transpose agree with the dense sketch") {
  const std::size_t n = 30;
  auto K = dense_kernel(n, 0.5, 19);
  auto plan = uniform_probabilities(K);
  auto sk = poisson_sparsify(K, plan, 300.0, 5);
  auto D = sk.to_dense();

  CounterRng rng(99, 0);
  std::vector<double> v(n);
  for (double& x : v) x = rng.next_double();

  auto y = spmv(sk, v);
  auto yt = spmv_t(sk, v);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0, acct = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      acc += D(i, j) * v[j];
      acct += D(j, i) * v[j];
    }
    CHECK(y[i] == doctest::Approx(acc).epsilon(1e-12));
    CHECK(yt[i] == doctest::Approx(acct).epsilon(1e-12));
  }

  std::vector<double> bad(n + 1, 0.0);
  CHECK_THROWS_AS(spmv(sk, bad), LengthMismatch);
}

TEST_CASE("plans reject mismatched or empty kernels") {
  auto K = dense_kernel(4, 0.5, 23);
  auto a = random_simplex(4, 5);
  auto b = random_simplex(5, 6);
  CHECK_THROWS_AS(ot_probabilities(a, b, K), LengthMismatch);

  KernelMatrix zero;
  zero.entries = Matrix(2, 2, 0.0);
  zero.nnz_ratio = 0.0;
  auto a2 = random_simplex(2, 7);
  CHECK_THROWS_AS(ot_probabilities(a2, a2, zero), AllZeroKernel);
}
