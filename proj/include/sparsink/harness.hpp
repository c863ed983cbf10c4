#ifndef SPARSINK_HARNESS_HPP_
#define SPARSINK_HARNESS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sparsink/barycenter.hpp"
#include "sparsink/solvers.hpp"

namespace sparsink {

enum class Scenario { C1, C2, C3 };

// Synthetic-instance description. Weights come from evaluating the scenario's
// 1-D density on the grid i/(n+1) and normalizing; supports are random per
// seed. `scale_param` is the distributions' second parameter (1/20 in the
// standard setups); it is treated as a variance unless `scale_is_sd` is set.
struct ScenarioSpec {
  Scenario scenario = Scenario::C1;
  std::size_t n = 1000;
  std::size_t d = 5;
  std::uint64_t seed = 1;
  std::optional<std::pair<double, double>> masses;  // unbalanced total masses
  std::optional<double> sparsity_target;  // R1=0.7, R2=0.5, R3=0.3
  double scale_param = 0.05;
  bool scale_is_sd = false;
};

struct ScenarioData {
  DiscreteMeasure a, b;
  PointList support;
};

ScenarioData generate_scenario(const ScenarioSpec& spec);

struct BudgetSchedule {
  std::vector<double> budgets;
  bool clamped = false;  // some multiple hit the s < n^2 cap
};

// s0(n) = 1e-3 * n * ln^4(n).
double s0_budget(std::size_t n);
BudgetSchedule s_schedule(std::size_t n, const std::vector<double>& multipliers);

enum class ApproxMethod { SparSink, RandSink };

struct RmaeRow {
  double budget = 0.0;
  std::vector<double> errors;  // |approx - exact| / exact per replication
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t retried = 0;  // replications rerun with a derived fresh seed
};

struct RmaeReport {
  ApproxMethod method = ApproxMethod::SparSink;
  double exact_objective = 0.0;
  std::vector<RmaeRow> rows;
  std::size_t replications = 0;
  std::string scale_note;  // records the variance-vs-sd reading
};

// Dense Sinkhorn(UOT) is the exact reference; per-replication seeds are
// derived from spec.seed by counter. Instances with a sparsity target use the
// WFR cost and the UOT solver (cfg.lambda finite); plain instances use the
// squared Euclidean cost and balanced OT.
RmaeReport rmae_experiment(const ScenarioSpec& spec, ApproxMethod method,
                           const std::vector<double>& budgets,
                           std::size_t replications, const SolverConfig& cfg);

struct TimingRow {
  std::string method;
  std::size_t n = 0;
  double setup_s = 0.0;     // kernel / sketch construction
  double per_iter_s = 0.0;  // one scaling iteration
  std::size_t iters_timed = 0;
};

std::vector<TimingRow> timing_sweep(const std::vector<std::size_t>& sizes,
                                    std::size_t d, const SolverConfig& cfg,
                                    double s_multiplier, std::uint64_t seed,
                                    std::size_t iters_per_point = 5);

// Least-squares slope of log(y) vs log(x).
double loglog_slope(const std::vector<std::size_t>& x,
                    const std::vector<double>& y);

struct PairwiseWfrResult {
  Matrix distances;  // symmetric, zero diagonal; NaN marks a failed pair
  std::vector<std::size_t> frame_indices;  // after stride subsampling
  std::size_t failed_pairs = 0;
};

PairwiseWfrResult pairwise_wfr(const std::vector<FrameImage>& frames,
                               double eta, double lambda, double epsilon,
                               double s_multiplier, std::uint64_t seed,
                               std::size_t stride = 1, bool exact = false);

struct EdPrediction {
  std::size_t t_ed_hat = 0;
  double error = 0.0;  // |1 - (t_hat - t_es)/(t_true - t_es)|
};

// Argmax of distance-to-ES over [window_lo, window_hi]; earliest index wins
// ties. `t_ed_true` feeds the error formula only.
EdPrediction predict_ed(const Matrix& distances, std::size_t t_es,
                        std::size_t window_lo, std::size_t window_hi,
                        std::size_t t_ed_true);

// Gaussian blob frames for CI-scale echo-style sequences.
FrameImage gaussian_blob_frame(std::size_t height, std::size_t width,
                               double center_row, double center_col,
                               double sigma);

// Barycenter benchmark (Gaussian / Gaussian-mixture / t5 measure triple,
// smoothed and renormalized): mean l1 error of spar_ibp vs ibp per budget.
struct BarycenterBenchRow {
  double budget = 0.0;
  double mean_l1_error = 0.0;
  std::vector<double> errors;
};

std::vector<BarycenterBenchRow> barycenter_benchmark(
    std::size_t n, std::size_t d, double epsilon,
    const std::vector<double>& budgets, std::size_t replications,
    std::uint64_t seed, const BarycenterConfig& cfg);

// Smoothed mixture measures from the barycenter benchmark scenario.
std::vector<std::vector<double>> barycenter_mixture_weights(std::size_t n);

}  // namespace sparsink

#endif  // SPARSINK_HARNESS_HPP_
