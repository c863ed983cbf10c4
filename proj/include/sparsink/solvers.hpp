#ifndef SPARSINK_SOLVERS_HPP_
#define SPARSINK_SOLVERS_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sparsink/errors.hpp"
#include "sparsink/geometry.hpp"
#include "sparsink/measures.hpp"
#include "sparsink/sparsify.hpp"

namespace sparsink {

struct SolverConfig {
  double epsilon = 1.0;
  double lambda = std::numeric_limits<double>::infinity();  // inf = balanced
  double delta = 1e-6;
  std::size_t max_iter = 1000;
  bool stabilize = false;  // log-domain iterations
};

// What to do with atoms whose kernel row/column has no entries at all.
// A dense kernel is expected to cover everything (Error); sketches routinely
// orphan rows at small budgets, so the sparsified solvers mask those atoms
// (zero transport) and report how many were dropped.
enum class EmptyPolicy { Error, Mask };

struct TransportPlan {
  std::vector<double> u, v;          // scaling vectors (linear domain)
  std::vector<double> log_u, log_v;  // populated when log_domain
  bool log_domain = false;
  const KernelMatrix* dense_kernel = nullptr;
  const SparseKernel* sparse_kernel = nullptr;
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t masked_rows = 0;
  std::size_t masked_cols = 0;

  std::size_t size() const { return u.size(); }
  double scaling_u(std::size_t i) const {
    return log_domain ? std::exp(log_u[i]) : u[i];
  }
  double scaling_v(std::size_t j) const {
    return log_domain ? std::exp(log_v[j]) : v[j];
  }
  double entry(std::size_t i, std::size_t j) const;
  std::vector<double> row_marginal() const;
  std::vector<double> col_marginal() const;

  // Visits every (i, j, T_ij) on the kernel support with T_ij > 0.
  template <class F>
  void for_each_entry(F&& f) const;
};

struct SolveReport {
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::size_t iterations = 0;
  double marginal_residual_row = 0.0;
  double marginal_residual_col = 0.0;
  double wall_time_s = 0.0;
  std::optional<std::size_t> sketch_nnz;
  bool converged = false;
  // Scalings blew up on a disconnected sketch; the plan is the last finite
  // iterate. Only possible under EmptyPolicy::Mask.
  bool diverged = false;
  std::uint64_t seed = 0;
  double kernel_mean = 0.0;  // 1'K1 / n^2, diagnostic only

  std::string to_json() const;
};

struct SolveResult {
  TransportPlan plan;
  SolveReport report;
};

// ---- kernel access shims (dense KernelMatrix / SparseKernel sketch) -------

inline std::size_t kernel_size(const KernelMatrix& K) { return K.size(); }
inline std::size_t kernel_size(const SparseKernel& K) { return K.n; }

void kernel_apply(const KernelMatrix& K, const std::vector<double>& v,
                  std::vector<double>& out);
void kernel_apply_t(const KernelMatrix& K, const std::vector<double>& u,
                    std::vector<double>& out);
void kernel_apply(const SparseKernel& K, const std::vector<double>& v,
                  std::vector<double>& out);
void kernel_apply_t(const SparseKernel& K, const std::vector<double>& u,
                    std::vector<double>& out);

// log((K exp(lv))_i) via per-row log-sum-exp; -inf for empty rows.
void kernel_log_apply(const KernelMatrix& K, const std::vector<double>& lv,
                      std::vector<double>& out);
void kernel_log_apply_t(const KernelMatrix& K, const std::vector<double>& lu,
                        std::vector<double>& out);
void kernel_log_apply(const SparseKernel& K, const std::vector<double>& lv,
                      std::vector<double>& out);
void kernel_log_apply_t(const SparseKernel& K, const std::vector<double>& lu,
                        std::vector<double>& out);

void kernel_coverage(const KernelMatrix& K, std::vector<char>& row_nonempty,
                     std::vector<char>& col_nonempty);
void kernel_coverage(const SparseKernel& K, std::vector<char>& row_nonempty,
                     std::vector<char>& col_nonempty);

double kernel_mean(const KernelMatrix& K);
double kernel_mean(const SparseKernel& K);

template <class F>
void kernel_for_each(const KernelMatrix& K, F&& f) {
  const std::size_t n = K.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = K.entries.row(i);
    for (std::size_t j = 0; j < n; ++j)
      if (row[j] > 0.0) f(i, j, row[j]);
  }
}

template <class F>
void kernel_for_each(const SparseKernel& K, F&& f) {
  for (std::size_t i = 0; i < K.n; ++i)
    for (std::size_t p = K.row_ptr[i]; p < K.row_ptr[i + 1]; ++p)
      f(i, static_cast<std::size_t>(K.col_idx[p]), K.values[p]);
}

// ---- solvers ---------------------------------------------------------------

// Alternating scaling u <- a / Kv, v <- b / K'u with the l1 stopping rule
// ||u_t - u_{t-1}||_1 + ||v_t - v_{t-1}||_1 <= delta, applied from the second
// iteration onward (the first iteration has no previous u).
template <class Kernel>
SolveResult sinkhorn_ot(const Kernel& K, const DiscreteMeasure& a,
                        const DiscreteMeasure& b, const SolverConfig& cfg,
                        EmptyPolicy empty_policy = EmptyPolicy::Error);

// Unbalanced variant: exponent lambda/(lambda+epsilon) on both updates,
// u and v initialized to 1.
template <class Kernel>
SolveResult sinkhorn_uot(const Kernel& K, const DiscreteMeasure& a,
                         const DiscreteMeasure& b, const SolverConfig& cfg,
                         EmptyPolicy empty_policy = EmptyPolicy::Error);

enum class SketchProbs { Importance, Uniform };

struct SparSinkOptions {
  double theta = 0.0;
  SketchProbs probs = SketchProbs::Importance;  // Uniform = Rand-Sink
  // Strict mode raises DegenerateSketchError instead of masking orphaned
  // rows/columns.
  bool strict = false;
};

SolveResult spar_sink_ot(const KernelMatrix& K, const CostMatrix& C,
                         const DiscreteMeasure& a, const DiscreteMeasure& b,
                         const SolverConfig& cfg, double s, std::uint64_t seed,
                         const SparSinkOptions& opts = {});

SolveResult spar_sink_uot(const KernelMatrix& K, const CostMatrix& C,
                          const DiscreteMeasure& a, const DiscreteMeasure& b,
                          const SolverConfig& cfg, double s, std::uint64_t seed,
                          const SparSinkOptions& opts = {});

// <T, C> - eps * H(T), summed over the plan's kernel support.
double ot_objective(const TransportPlan& T, const CostMatrix& C,
                    double epsilon);

// Adds lambda * KL(T1 || a) + lambda * KL(T'1 || b) to the transport and
// entropy terms.
double uot_objective(const TransportPlan& T, const CostMatrix& C,
                     const DiscreteMeasure& a, const DiscreteMeasure& b,
                     double lambda, double epsilon);

std::pair<double, double> marginal_residuals(const TransportPlan& T,
                                             const DiscreteMeasure& a,
                                             const DiscreteMeasure& b);

double kl_divergence(const std::vector<double>& x, const std::vector<double>& y);

// WFR_lambda = sqrt(max(UOT value, 0)).
inline double wfr_from_uot(double uot_value) {
  return std::sqrt(std::max(uot_value, 0.0));
}

// ---- template implementation ----------------------------------------------

namespace detail {

template <class Kernel>
SolveResult scaling_loop(const Kernel& K, const DiscreteMeasure& a,
                         const DiscreteMeasure& b, const SolverConfig& cfg,
                         EmptyPolicy empty_policy, double exponent);

template <class Kernel>
SolveResult log_scaling_loop(const Kernel& K, const DiscreteMeasure& a,
                             const DiscreteMeasure& b, const SolverConfig& cfg,
                             EmptyPolicy empty_policy, double exponent);

void bind_kernel(TransportPlan& plan, const KernelMatrix& K);
void bind_kernel(TransportPlan& plan, const SparseKernel& K);

}  // namespace detail

template <class Kernel>
SolveResult sinkhorn_ot(const Kernel& K, const DiscreteMeasure& a,
                        const DiscreteMeasure& b, const SolverConfig& cfg,
                        EmptyPolicy empty_policy) {
  constexpr double kSimplexTol = 1e-8;
  if (std::abs(a.total_mass - 1.0) > kSimplexTol ||
      std::abs(b.total_mass - 1.0) > kSimplexTol)
    throw NotNormalized("sinkhorn_ot requires simplex inputs");
  return cfg.stabilize
             ? detail::log_scaling_loop(K, a, b, cfg, empty_policy, 1.0)
             : detail::scaling_loop(K, a, b, cfg, empty_policy, 1.0);
}

template <class Kernel>
SolveResult sinkhorn_uot(const Kernel& K, const DiscreteMeasure& a,
                         const DiscreteMeasure& b, const SolverConfig& cfg,
                         EmptyPolicy empty_policy) {
  if (!(cfg.lambda > 0) || !std::isfinite(cfg.lambda))
    throw Error(ErrorCategory::Input, "sinkhorn_uot needs finite lambda > 0");
  const double f = cfg.lambda / (cfg.lambda + cfg.epsilon);
  return cfg.stabilize
             ? detail::log_scaling_loop(K, a, b, cfg, empty_policy, f)
             : detail::scaling_loop(K, a, b, cfg, empty_policy, f);
}

template <class F>
void TransportPlan::for_each_entry(F&& f) const {
  auto visit = [&](std::size_t i, std::size_t j, double kij) {
    double t;
    if (log_domain) {
      if (log_u[i] == -std::numeric_limits<double>::infinity() ||
          log_v[j] == -std::numeric_limits<double>::infinity())
        return;
      t = std::exp(log_u[i] + std::log(kij) + log_v[j]);
    } else {
      t = u[i] * kij * v[j];
    }
    if (t > 0.0) f(i, j, t);
  };
  if (dense_kernel)
    kernel_for_each(*dense_kernel, visit);
  else if (sparse_kernel)
    kernel_for_each(*sparse_kernel, visit);
}

namespace detail {

template <class Kernel>
SolveResult scaling_loop(const Kernel& K, const DiscreteMeasure& a,
                         const DiscreteMeasure& b, const SolverConfig& cfg,
                         EmptyPolicy empty_policy, double exponent) {
  const std::size_t n = kernel_size(K);
  if (a.size() != n || b.size() != n)
    throw LengthMismatch("measure size does not match kernel dimension");

  std::vector<char> row_ne, col_ne;
  kernel_coverage(K, row_ne, col_ne);
  std::size_t masked_rows = 0, masked_cols = 0;
  for (std::size_t i = 0; i < n; ++i) masked_rows += row_ne[i] ? 0 : 1;
  for (std::size_t j = 0; j < n; ++j) masked_cols += col_ne[j] ? 0 : 1;
  if ((masked_rows || masked_cols) && empty_policy == EmptyPolicy::Error)
    throw ZeroDenominator("kernel has " + std::to_string(masked_rows) +
                          " empty rows and " + std::to_string(masked_cols) +
                          " empty columns");
  if (masked_rows == n || masked_cols == n)
    throw DegenerateSketchError("kernel has no entries at all");

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> u(n, 1.0), v(n, 1.0), u_prev(n), v_prev(n), tmp(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!row_ne[i]) u[i] = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    if (!col_ne[j]) v[j] = 0.0;

  bool converged = false;
  bool diverged = false;
  std::size_t t = 0;
  while (t < cfg.max_iter) {
    ++t;
    u_prev = u;
    v_prev = v;

    kernel_apply(K, v, tmp);
    for (std::size_t i = 0; i < n; ++i) {
      if (!row_ne[i]) continue;
      if (tmp[i] <= 0.0 || !std::isfinite(tmp[i])) {
        // A covered row can still lose all its columns to earlier masking.
        if (empty_policy == EmptyPolicy::Mask && tmp[i] == 0.0) {
          row_ne[i] = 0;
          u[i] = 0.0;
          ++masked_rows;
          continue;
        }
        // Disconnected sketch components with mismatched masses make the
        // scalings diverge while the plan stays bounded: keep the previous
        // iterate instead of blowing up.
        if (empty_policy == EmptyPolicy::Mask) {
          diverged = true;
          break;
        }
        throw ZeroDenominator("Kv underflowed at row " + std::to_string(i) +
                              "; consider SolverConfig::stabilize");
      }
      double q = a.weights[i] / tmp[i];
      u[i] = (exponent == 1.0) ? q : std::pow(q, exponent);
      // Scalings this size mean a disconnected component is blowing up
      // geometrically; genuine solves stay far below the sentinel.
      if (!(u[i] <= 1e150) && empty_policy == EmptyPolicy::Mask) {
        diverged = true;
        break;
      }
    }
    if (diverged) {
      u = u_prev;
      v = v_prev;
      break;
    }

    kernel_apply_t(K, u, tmp);
    for (std::size_t j = 0; j < n; ++j) {
      if (!col_ne[j]) continue;
      if (tmp[j] <= 0.0 || !std::isfinite(tmp[j])) {
        if (empty_policy == EmptyPolicy::Mask && tmp[j] == 0.0) {
          col_ne[j] = 0;
          v[j] = 0.0;
          ++masked_cols;
          continue;
        }
        if (empty_policy == EmptyPolicy::Mask) {
          diverged = true;
          break;
        }
        throw ZeroDenominator("K'u underflowed at column " +
                              std::to_string(j) +
                              "; consider SolverConfig::stabilize");
      }
      double q = b.weights[j] / tmp[j];
      v[j] = (exponent == 1.0) ? q : std::pow(q, exponent);
      if (!(v[j] <= 1e150) && empty_policy == EmptyPolicy::Mask) {
        diverged = true;
        break;
      }
    }
    if (diverged) {
      u = u_prev;
      v = v_prev;
      break;
    }
    if (masked_rows == n || masked_cols == n)
      throw DegenerateSketchError("masking removed every atom");

    if (t >= 2) {
      double err = 0.0;
      for (std::size_t i = 0; i < n; ++i) err += std::abs(u[i] - u_prev[i]);
      for (std::size_t j = 0; j < n; ++j) err += std::abs(v[j] - v_prev[j]);
      if (err <= cfg.delta) {
        converged = true;
        break;
      }
    }
  }

  SolveResult res;
  res.plan.u = std::move(u);
  res.plan.v = std::move(v);
  res.plan.converged = converged;
  res.plan.iterations = t;
  res.plan.masked_rows = masked_rows;
  res.plan.masked_cols = masked_cols;
  bind_kernel(res.plan, K);

  auto row_m = res.plan.row_marginal();
  auto col_m = res.plan.col_marginal();
  double rr = 0.0, rc = 0.0;
  for (std::size_t i = 0; i < n; ++i) rr += std::abs(row_m[i] - a.weights[i]);
  for (std::size_t j = 0; j < n; ++j) rc += std::abs(col_m[j] - b.weights[j]);
  res.report.iterations = t;
  res.report.converged = converged;
  res.report.diverged = diverged;
  res.report.marginal_residual_row = rr;
  res.report.marginal_residual_col = rc;
  res.report.kernel_mean = kernel_mean(K);
  res.report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return res;
}

template <class Kernel>
SolveResult log_scaling_loop(const Kernel& K, const DiscreteMeasure& a,
                             const DiscreteMeasure& b, const SolverConfig& cfg,
                             EmptyPolicy empty_policy, double exponent) {
  const std::size_t n = kernel_size(K);
  if (a.size() != n || b.size() != n)
    throw LengthMismatch("measure size does not match kernel dimension");
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  std::vector<char> row_ne, col_ne;
  kernel_coverage(K, row_ne, col_ne);
  std::size_t masked_rows = 0, masked_cols = 0;
  for (std::size_t i = 0; i < n; ++i) masked_rows += row_ne[i] ? 0 : 1;
  for (std::size_t j = 0; j < n; ++j) masked_cols += col_ne[j] ? 0 : 1;
  if ((masked_rows || masked_cols) && empty_policy == EmptyPolicy::Error)
    throw ZeroDenominator("kernel has empty rows or columns");
  if (masked_rows == n || masked_cols == n)
    throw DegenerateSketchError("kernel has no entries at all");

  // Atoms with zero weight behave like masked ones (log a_i = -inf).
  std::vector<double> log_a(n), log_b(n);
  for (std::size_t i = 0; i < n; ++i)
    log_a[i] = a.weights[i] > 0.0 ? std::log(a.weights[i]) : kNegInf;
  for (std::size_t j = 0; j < n; ++j)
    log_b[j] = b.weights[j] > 0.0 ? std::log(b.weights[j]) : kNegInf;

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> lu(n, 0.0), lv(n, 0.0), lu_prev(n), lv_prev(n), tmp(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!row_ne[i]) lu[i] = kNegInf;
  for (std::size_t j = 0; j < n; ++j)
    if (!col_ne[j]) lv[j] = kNegInf;

  bool converged = false;
  std::size_t t = 0;
  while (t < cfg.max_iter) {
    ++t;
    lu_prev = lu;
    lv_prev = lv;

    kernel_log_apply(K, lv, tmp);
    for (std::size_t i = 0; i < n; ++i) {
      if (!row_ne[i]) continue;
      if (tmp[i] == kNegInf) {
        if (empty_policy == EmptyPolicy::Mask) {
          row_ne[i] = 0;
          lu[i] = kNegInf;
          ++masked_rows;
          continue;
        }
        throw ZeroDenominator("Kv vanished at row " + std::to_string(i));
      }
      lu[i] = exponent * (log_a[i] - tmp[i]);
    }
    kernel_log_apply_t(K, lu, tmp);
    for (std::size_t j = 0; j < n; ++j) {
      if (!col_ne[j]) continue;
      if (tmp[j] == kNegInf) {
        if (empty_policy == EmptyPolicy::Mask) {
          col_ne[j] = 0;
          lv[j] = kNegInf;
          ++masked_cols;
          continue;
        }
        throw ZeroDenominator("K'u vanished at column " + std::to_string(j));
      }
      lv[j] = exponent * (log_b[j] - tmp[j]);
    }
    if (masked_rows == n || masked_cols == n)
      throw DegenerateSketchError("masking removed every atom");

    if (t >= 2) {
      // Potentials can be far outside the representable linear range, so the
      // stopping rule is applied to the log scalings instead.
      double err = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (row_ne[i]) err += std::abs(lu[i] - lu_prev[i]);
      for (std::size_t j = 0; j < n; ++j)
        if (col_ne[j]) err += std::abs(lv[j] - lv_prev[j]);
      if (err <= cfg.delta) {
        converged = true;
        break;
      }
    }
  }

  SolveResult res;
  res.plan.log_domain = true;
  res.plan.log_u = std::move(lu);
  res.plan.log_v = std::move(lv);
  res.plan.u.assign(n, 0.0);
  res.plan.v.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    res.plan.u[i] = std::exp(res.plan.log_u[i]);
  for (std::size_t j = 0; j < n; ++j)
    res.plan.v[j] = std::exp(res.plan.log_v[j]);
  res.plan.converged = converged;
  res.plan.iterations = t;
  res.plan.masked_rows = masked_rows;
  res.plan.masked_cols = masked_cols;
  bind_kernel(res.plan, K);

  auto row_m = res.plan.row_marginal();
  auto col_m = res.plan.col_marginal();
  double rr = 0.0, rc = 0.0;
  for (std::size_t i = 0; i < n; ++i) rr += std::abs(row_m[i] - a.weights[i]);
  for (std::size_t j = 0; j < n; ++j) rc += std::abs(col_m[j] - b.weights[j]);
  res.report.iterations = t;
  res.report.converged = converged;
  res.report.marginal_residual_row = rr;
  res.report.marginal_residual_col = rc;
  res.report.kernel_mean = kernel_mean(K);
  res.report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return res;
}

}  // namespace detail

}  // namespace sparsink

#endif  // SPARSINK_SOLVERS_HPP_
