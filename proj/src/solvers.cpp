#include "sparsink/solvers.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"

namespace sparsink {

// ---- kernel shims -----------------------------------------------------------

void kernel_apply(const KernelMatrix& K, const std::vector<double>& v,
                  std::vector<double>& out) {
  const std::size_t n = K.size();
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = K.entries.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * v[j];
    out[i] = acc;
  }
}

void kernel_apply_t(const KernelMatrix& K, const std::vector<double>& u,
                    std::vector<double>& out) {
  const std::size_t n = K.size();
  out.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double ui = u[i];
    if (ui == 0.0) continue;
    const double* row = K.entries.row(i);
    for (std::size_t j = 0; j < n; ++j) out[j] += row[j] * ui;
  }
}

void kernel_apply(const SparseKernel& K, const std::vector<double>& v,
                  std::vector<double>& out) {
  out = spmv(K, v);
}

void kernel_apply_t(const SparseKernel& K, const std::vector<double>& u,
                    std::vector<double>& out) {
  out = spmv_t(K, u);
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

void kernel_log_apply(const KernelMatrix& K, const std::vector<double>& lv,
                      std::vector<double>& out) {
  const std::size_t n = K.size();
  out.assign(n, kNegInf);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = K.entries.row(i);
    double mx = kNegInf;
    for (std::size_t j = 0; j < n; ++j) {
      if (row[j] == 0.0 || lv[j] == kNegInf) continue;
      mx = std::max(mx, std::log(row[j]) + lv[j]);
    }
    if (mx == kNegInf) continue;
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (row[j] == 0.0 || lv[j] == kNegInf) continue;
      acc += std::exp(std::log(row[j]) + lv[j] - mx);
    }
    out[i] = mx + std::log(acc);
  }
}

void kernel_log_apply_t(const KernelMatrix& K, const std::vector<double>& lu,
                        std::vector<double>& out) {
  const std::size_t n = K.size();
  // Two passes: column maxima, then the shifted sums.
  std::vector<double> mx(n, kNegInf);
  for (std::size_t i = 0; i < n; ++i) {
    if (lu[i] == kNegInf) continue;
    const double* row = K.entries.row(i);
    for (std::size_t j = 0; j < n; ++j)
      if (row[j] > 0.0) mx[j] = std::max(mx[j], std::log(row[j]) + lu[i]);
  }
  std::vector<double> acc(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (lu[i] == kNegInf) continue;
    const double* row = K.entries.row(i);
    for (std::size_t j = 0; j < n; ++j)
      if (row[j] > 0.0) acc[j] += std::exp(std::log(row[j]) + lu[i] - mx[j]);
  }
  out.assign(n, kNegInf);
  for (std::size_t j = 0; j < n; ++j)
    if (mx[j] != kNegInf) out[j] = mx[j] + std::log(acc[j]);
}

void kernel_log_apply(const SparseKernel& K, const std::vector<double>& lv,
                      std::vector<double>& out) {
  out.assign(K.n, kNegInf);
  for (std::size_t i = 0; i < K.n; ++i) {
    double mx = kNegInf;
    for (std::size_t p = K.row_ptr[i]; p < K.row_ptr[i + 1]; ++p) {
      if (lv[K.col_idx[p]] == kNegInf) continue;
      mx = std::max(mx, std::log(K.values[p]) + lv[K.col_idx[p]]);
    }
    if (mx == kNegInf) continue;
    double acc = 0.0;
    for (std::size_t p = K.row_ptr[i]; p < K.row_ptr[i + 1]; ++p) {
      if (lv[K.col_idx[p]] == kNegInf) continue;
      acc += std::exp(std::log(K.values[p]) + lv[K.col_idx[p]] - mx);
    }
    out[i] = mx + std::log(acc);
  }
}

void kernel_log_apply_t(const SparseKernel& K, const std::vector<double>& lu,
                        std::vector<double>& out) {
  std::vector<double> mx(K.n, kNegInf);
  for (std::size_t i = 0; i < K.n; ++i) {
    if (lu[i] == kNegInf) continue;
    for (std::size_t p = K.row_ptr[i]; p < K.row_ptr[i + 1]; ++p) {
      const std::size_t j = K.col_idx[p];
      mx[j] = std::max(mx[j], std::log(K.values[p]) + lu[i]);
    }
  }
  std::vector<double> acc(K.n, 0.0);
  for (std::size_t i = 0; i < K.n; ++i) {
    if (lu[i] == kNegInf) continue;
    for (std::size_t p = K.row_ptr[i]; p < K.row_ptr[i + 1]; ++p) {
      const std::size_t j = K.col_idx[p];
      acc[j] += std::exp(std::log(K.values[p]) + lu[i] - mx[j]);
    }
  }
  out.assign(K.n, kNegInf);
  for (std::size_t j = 0; j < K.n; ++j)
    if (mx[j] != kNegInf) out[j] = mx[j] + std::log(acc[j]);
}

void kernel_coverage(const KernelMatrix& K, std::vector<char>& row_nonempty,
                     std::vector<char>& col_nonempty) {
  const std::size_t n = K.size();
  row_nonempty.assign(n, 0);
  col_nonempty.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = K.entries.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (row[j] > 0.0) {
        row_nonempty[i] = 1;
        col_nonempty[j] = 1;
      }
    }
  }
}

void kernel_coverage(const SparseKernel& K, std::vector<char>& row_nonempty,
                     std::vector<char>& col_nonempty) {
  row_nonempty.assign(K.n, 0);
  col_nonempty.assign(K.n, 0);
  for (std::size_t i = 0; i < K.n; ++i) {
    if (K.row_ptr[i + 1] > K.row_ptr[i]) row_nonempty[i] = 1;
    for (std::size_t p = K.row_ptr[i]; p < K.row_ptr[i + 1]; ++p)
      col_nonempty[K.col_idx[p]] = 1;
  }
}

double kernel_mean(const KernelMatrix& K) {
  double acc = 0.0;
  for (double v : K.entries.data()) acc += v;
  const double n = static_cast<double>(K.size());
  return acc / (n * n);
}

double kernel_mean(const SparseKernel& K) {
  double acc = 0.0;
  for (double v : K.values) acc += v;
  const double n = static_cast<double>(K.n);
  return acc / (n * n);
}

namespace detail {

void bind_kernel(TransportPlan& plan, const KernelMatrix& K) {
  plan.dense_kernel = &K;
  plan.sparse_kernel = nullptr;
}

void bind_kernel(TransportPlan& plan, const SparseKernel& K) {
  plan.sparse_kernel = &K;
  plan.dense_kernel = nullptr;
}

}  // namespace detail

// ---- transport plan ---------------------------------------------------------

double TransportPlan::entry(std::size_t i, std::size_t j) const {
  double kij = 0.0;
  if (dense_kernel) {
    kij = dense_kernel->entries(i, j);
  } else if (sparse_kernel) {
    for (std::size_t p = sparse_kernel->row_ptr[i];
         p < sparse_kernel->row_ptr[i + 1]; ++p)
      if (sparse_kernel->col_idx[p] == j) {
        kij = sparse_kernel->values[p];
        break;
      }
  }
  if (kij == 0.0) return 0.0;
  if (log_domain) {
    if (log_u[i] == kNegInf || log_v[j] == kNegInf) return 0.0;
    return std::exp(log_u[i] + std::log(kij) + log_v[j]);
  }
  return u[i] * kij * v[j];
}

std::vector<double> TransportPlan::row_marginal() const {
  std::vector<double> out(size(), 0.0);
  for_each_entry([&](std::size_t i, std::size_t, double t) { out[i] += t; });
  return out;
}

std::vector<double> TransportPlan::col_marginal() const {
  std::vector<double> out(size(), 0.0);
  for_each_entry([&](std::size_t, std::size_t j, double t) { out[j] += t; });
  return out;
}

std::string SolveReport::to_json() const {
  nlohmann::json j;
  j["objective"] = objective;
  j["iterations"] = iterations;
  j["residual_row"] = marginal_residual_row;
  j["residual_col"] = marginal_residual_col;
  j["wall_time_s"] = wall_time_s;
  if (sketch_nnz.has_value())
    j["sketch_nnz"] = *sketch_nnz;
  else
    j["sketch_nnz"] = nullptr;
  j["converged"] = converged;
  j["diverged"] = diverged;
  j["seed"] = seed;
  return j.dump(2);
}

// ---- objectives -------------------------------------------------------------

double kl_divergence(const std::vector<double>& x,
                     const std::vector<double>& y) {
  if (x.size() != y.size()) throw LengthMismatch("kl_divergence");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0) {
      if (y[i] <= 0.0)
        throw Error(ErrorCategory::Input, "KL undefined: mass off support");
      acc += x[i] * std::log(x[i] / y[i]) - x[i] + y[i];
    } else {
      acc += y[i];  // 0 log 0 = 0
    }
  }
  return acc;
}

namespace {

// <T, C> and H(T) over the plan's support in one pass.
std::pair<double, double> transport_and_entropy(const TransportPlan& T,
                                                const CostMatrix& C) {
  double cost = 0.0, entropy = 0.0;
  T.for_each_entry([&](std::size_t i, std::size_t j, double t) {
    const double cij = C.entries(i, j);
    if (std::isinf(cij))
      throw InfiniteCostOnSupport("plan mass on a blocked entry");
    cost += t * cij;
    entropy -= t * (std::log(t) - 1.0);
  });
  return {cost, entropy};
}

}  // namespace

double ot_objective(const TransportPlan& T, const CostMatrix& C,
                    double epsilon) {
  auto [cost, entropy] = transport_and_entropy(T, C);
  return cost - epsilon * entropy;
}

double uot_objective(const TransportPlan& T, const CostMatrix& C,
                     const DiscreteMeasure& a, const DiscreteMeasure& b,
                     double lambda, double epsilon) {
  auto [cost, entropy] = transport_and_entropy(T, C);
  return cost + lambda * kl_divergence(T.row_marginal(), a.weights) +
         lambda * kl_divergence(T.col_marginal(), b.weights) -
         epsilon * entropy;
}

std::pair<double, double> marginal_residuals(const TransportPlan& T,
                                             const DiscreteMeasure& a,
                                             const DiscreteMeasure& b) {
  if (T.size() != a.size() || T.size() != b.size())
    throw LengthMismatch("marginal_residuals");
  auto rm = T.row_marginal();
  auto cm = T.col_marginal();
  double rr = 0.0, rc = 0.0;
  for (std::size_t i = 0; i < T.size(); ++i) {
    rr += std::abs(rm[i] - a.weights[i]);
    rc += std::abs(cm[i] - b.weights[i]);
  }
  return {rr, rc};
}

// ---- Spar-Sink wrappers -------------------------------------------------------

namespace {

SparseKernel build_sketch(const KernelMatrix& K, const DiscreteMeasure& a,
                          const DiscreteMeasure& b, const SolverConfig& cfg,
                          double s, std::uint64_t seed,
                          const SparSinkOptions& opts, bool uot) {
  SamplingPlan plan =
      opts.probs == SketchProbs::Uniform
          ? uniform_probabilities(K)
          : (uot ? uot_probabilities(a, b, K, cfg.lambda, cfg.epsilon)
                 : ot_probabilities(a, b, K));
  if (opts.theta > 0.0) plan = shrink_with_uniform(plan, opts.theta);
  SparseKernel sk = poisson_sparsify(K, plan, s, seed);
  if (opts.strict) {
    std::vector<char> rne, cne;
    kernel_coverage(sk, rne, cne);
    for (std::size_t i = 0; i < sk.n; ++i)
      if (!rne[i] || !cne[i])
        throw DegenerateSketchError(
            "sketch orphaned atom " + std::to_string(i) +
            "; raise s or theta, or use a different seed");
  }
  return sk;
}

}  // namespace

SolveResult spar_sink_ot(const KernelMatrix& K, const CostMatrix& C,
                         const DiscreteMeasure& a, const DiscreteMeasure& b,
                         const SolverConfig& cfg, double s, std::uint64_t seed,
                         const SparSinkOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  SparseKernel sk = build_sketch(K, a, b, cfg, s, seed, opts, /*uot=*/false);
  SolveResult res = sinkhorn_ot(sk, a, b, cfg,
                                opts.strict ? EmptyPolicy::Error
                                            : EmptyPolicy::Mask);
  // The sketch must outlive the plan for lazy evaluation, so the objective is
  // evaluated here while it is alive.
  res.report.objective = ot_objective(res.plan, C, cfg.epsilon);
  res.report.sketch_nnz = sk.realized_nnz;
  res.report.seed = seed;
  res.report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  res.plan.sparse_kernel = nullptr;  // sketch dies with this frame
  return res;
}

SolveResult spar_sink_uot(const KernelMatrix& K, const CostMatrix& C,
                          const DiscreteMeasure& a, const DiscreteMeasure& b,
                          const SolverConfig& cfg, double s, std::uint64_t seed,
                          const SparSinkOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  SparseKernel sk = build_sketch(K, a, b, cfg, s, seed, opts, /*uot=*/true);
  SolveResult res = sinkhorn_uot(sk, a, b, cfg,
                                 opts.strict ? EmptyPolicy::Error
                                             : EmptyPolicy::Mask);
  res.report.objective =
      uot_objective(res.plan, C, a, b, cfg.lambda, cfg.epsilon);
  res.report.sketch_nnz = sk.realized_nnz;
  res.report.seed = seed;
  res.report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  res.plan.sparse_kernel = nullptr;
  return res;
}

}  // namespace sparsink
