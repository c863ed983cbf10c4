#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sparsink/errors.hpp"
#include "sparsink/harness.hpp"

using namespace sparsink;

TEST_CASE("scenario weights live on the simplex and are deterministic") {
  ScenarioSpec spec;
  spec.n = 200;
  spec.d = 3;
  spec.seed = 5;
  for (Scenario sc : {Scenario::C1, Scenario::C2, Scenario::C3}) {
    spec.scenario = sc;
    auto data = generate_scenario(spec);
    CHECK(data.a.total_mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(data.b.total_mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(data.support.size() == 200);
    CHECK(data.support.dim == 3);
    auto again = generate_scenario(spec);
    CHECK(again.support.coords == data.support.coords);
    CHECK(again.a.weights == data.a.weights);
  }

  // C1/C3 supports stay in the unit cube; C2 is Gaussian and escapes it
  spec.scenario = Scenario::C1;
  auto c1 = generate_scenario(spec);
  for (double x : c1.support.coords) CHECK((x >= 0.0 && x <= 1.0));
  spec.scenario = Scenario::C2;
  auto c2 = generate_scenario(spec);
  bool outside = false;
  for (double x : c2.support.coords) outside = outside || x < 0.0 || x > 1.0;
  CHECK(outside);

  spec.masses = {5.0, 3.0};
  auto unb = generate_scenario(spec);
  CHECK(unb.a.total_mass == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(unb.b.total_mass == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("budget schedule: s0 value and the n^2 clamp") {
  CHECK(s0_budget(1000) == doctest::Approx(2276.920009485447).epsilon(1e-12));
  CHECK(s0_budget(100) == doctest::Approx(44.97619771823107).epsilon(1e-12));

  auto sched = s_schedule(1000, {2.0, 4.0, 8.0, 16.0});
  CHECK_FALSE(sched.clamped);
  CHECK(sched.budgets.size() == 4);
  CHECK(sched.budgets[0] == doctest::Approx(2.0 * s0_budget(1000)));

  auto tiny = s_schedule(5, {20000.0});  // multiple pushes past n^2
  CHECK(tiny.clamped);
  CHECK(tiny.budgets[0] < 25.0);
}

TEST_CASE("loglog_slope recovers exact power laws") {
  std::vector<std::size_t> x{100, 200, 400, 800};
  std::vector<double> y;
  for (auto n : x) y.push_back(3.0 * std::pow(static_cast<double>(n), 2.0));
  CHECK(loglog_slope(x, y) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(loglog_slope({1}, {1.0}), LengthMismatch);
}

TEST_CASE("rmae_experiment produces finite per-replication errors") {
  ScenarioSpec spec;
  spec.n = 60;
  spec.d = 2;
  spec.seed = 3;
  SolverConfig cfg;
  cfg.epsilon = 0.5;
  cfg.delta = 1e-8;
  const std::vector<double> budgets{8.0 * s0_budget(60)};
  auto rep = rmae_experiment(spec, ApproxMethod::SparSink, budgets, 3, cfg);
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.rows[0].errors.size() == 3);
  for (double e : rep.rows[0].errors) {
    CHECK(std::isfinite(e));
    CHECK(e >= 0.0);
  }
  CHECK(std::isfinite(rep.exact_objective));
  CHECK(rep.scale_note.find("variance") != std::string::npos);
}

TEST_CASE("rmae_experiment handles the unbalanced WFR path") {
  ScenarioSpec spec;
  spec.n = 50;
  spec.d = 2;
  spec.seed = 9;
  spec.sparsity_target = 0.5;
  spec.masses = {2.0, 1.0};
  SolverConfig cfg;
  cfg.epsilon = 0.3;
  cfg.lambda = 0.5;
  cfg.delta = 1e-8;
  auto rep = rmae_experiment(spec, ApproxMethod::RandSink,
                             {10.0 * s0_budget(50)}, 2, cfg);
  CHECK(rep.rows[0].errors.size() == 2);
  for (double e : rep.rows[0].errors) CHECK(std::isfinite(e));
}

TEST_CASE("timing_sweep reports both methods per size") {
  SolverConfig cfg;
  cfg.epsilon = 0.5;
  auto rows = timing_sweep({100, 200}, 2, cfg, 4.0, 1, 2);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].method == "sinkhorn");
  CHECK(rows[1].method == "spar-sink");
  for (const auto& r : rows) CHECK(r.per_iter_s > 0.0);
  // dense per-iteration work grows ~4x from n=100 to n=200
  CHECK(rows[2].per_iter_s > rows[0].per_iter_s);
}

TEST_CASE("gaussian blobs and ED prediction") {
  auto img = gaussian_blob_frame(9, 9, 4.0, 4.0, 1.5);
  CHECK(img.pixels[4 * 9 + 4] == doctest::Approx(1.0));
  CHECK(img.pixels[0] < 0.01);

  Matrix d(5, 5, 0.0);
  // row 0 = distances from the ES frame
  d(0, 1) = 0.1;
  d(0, 2) = 0.9;
  d(0, 3) = 0.9;  // tie -> earliest index
  d(0, 4) = 0.3;
  auto pred = predict_ed(d, 0, 1, 4, 2);
  CHECK(pred.t_ed_hat == 2);
  CHECK(pred.error == doctest::Approx(0.0));
  auto off = predict_ed(d, 0, 1, 4, 4);
  CHECK(off.t_ed_hat == 2);
  CHECK(off.error == doctest::Approx(0.5));

  CHECK_THROWS_AS(predict_ed(d, 0, 3, 7, 4), EmptyWindow);
  d(0, 1) = d(0, 2) = d(0, 3) = d(0, 4) =
      std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(predict_ed(d, 0, 1, 4, 4), EmptyWindow);
}

TEST_CASE("pairwise_wfr yields a symmetric matrix ordered by separation") {
  std::vector<FrameImage> frames;
  for (double shift : {0.0, 1.5, 3.0})
    frames.push_back(gaussian_blob_frame(10, 10, 4.5, 3.0 + shift, 1.2));
  // small eta makes displacements expensive enough to dominate the entropy
  // term, small eps keeps the value near the unregularized one
  auto res = pairwise_wfr(frames, 2.0, 1.0, 0.01, 0.0, 1, 1, /*exact=*/true);
  REQUIRE(res.frame_indices.size() == 3);
  CHECK(res.failed_pairs == 0);
  CHECK(res.distances(0, 0) == 0.0);
  CHECK(res.distances(0, 1) == res.distances(1, 0));
  CHECK(res.distances(0, 1) > 0.0);
  CHECK(res.distances(0, 2) > res.distances(0, 1));

  auto strided = pairwise_wfr(frames, 2.0, 1.0, 0.01, 0.0, 1, 2, /*exact=*/true);
  CHECK(strided.frame_indices == std::vector<std::size_t>{0, 2});
}

TEST_CASE("barycenter mixture weights are smoothed simplex vectors") {
  auto ws = barycenter_mixture_weights(100);
  REQUIRE(ws.size() == 3);
  for (const auto& w : ws) {
    double total = 0.0;
    double mn = 1.0;
    for (double v : w) {
      total += v;
      mn = std::min(mn, v);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mn > 0.0);  // the floor bump keeps every atom reachable
  }
  // the t measure has heavier tails than the first Gaussian
  CHECK(ws[2].front() > ws[0].back());
}

TEST_CASE("barycenter_benchmark runs end to end at desk scale") {
  BarycenterConfig cfg;
  cfg.delta = 1e-7;
  cfg.max_iter = 5000;
  auto rows = barycenter_benchmark(80, 1, 0.05, {30.0 * s0_budget(80)}, 2, 17,
                                   cfg);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].errors.size() == 2);
  for (double e : rows[0].errors) CHECK(std::isfinite(e));
}
