#include "sparsink/sparsify.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "sparsink/errors.hpp"
#include "sparsink/rng.hpp"

namespace sparsink {

SamplingPlan SamplingPlan::factorized(PlanKind kind, std::vector<double> row_w,
                                      std::vector<double> col_w,
                                      std::size_t kernel_nnz) {
  SamplingPlan p;
  p.kind_ = kind;
  p.n_ = row_w.size();
  p.kernel_nnz_ = kernel_nnz;
  p.row_w_ = std::move(row_w);
  p.col_w_ = std::move(col_w);
  return p;
}

SamplingPlan SamplingPlan::from_grid(PlanKind kind, Matrix grid,
                                     std::size_t kernel_nnz) {
  SamplingPlan p;
  p.kind_ = kind;
  p.n_ = grid.rows();
  p.kernel_nnz_ = kernel_nnz;
  p.grid_ = std::move(grid);
  return p;
}

namespace {

std::size_t kernel_nnz_count(const KernelMatrix& K) {
  return static_cast<std::size_t>(std::llround(
      K.nnz_ratio * static_cast<double>(K.size()) * static_cast<double>(K.size())));
}

void check_sizes(const DiscreteMeasure& a, const DiscreteMeasure& b,
                 const KernelMatrix& K) {
  if (a.size() != K.size() || b.size() != K.size())
    throw LengthMismatch("measures must match kernel dimension");
  if (kernel_nnz_count(K) == 0) throw AllZeroKernel("kernel has no support");
}

// Zero the grid off the kernel support and renormalize to sum 1.
SamplingPlan masked_grid_plan(PlanKind kind, Matrix grid,
                              const KernelMatrix& K) {
  const std::size_t n = grid.rows();
  double total = 0.0;
  std::size_t nnz = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double* prow = grid.row(i);
    const double* krow = K.entries.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (krow[j] == 0.0) prow[j] = 0.0;
      total += prow[j];
      nnz += krow[j] > 0.0 ? 1 : 0;
    }
  }
  if (total <= 0.0) throw AllZeroKernel("no probability mass on support");
  const double inv = 1.0 / total;
  for (double& p : grid.data()) p *= inv;
  return SamplingPlan::from_grid(kind, std::move(grid), nnz);
}

}  // namespace

SamplingPlan ot_probabilities(const DiscreteMeasure& a,
                              const DiscreteMeasure& b,
                              const KernelMatrix& K) {
  check_sizes(a, b, K);
  const std::size_t n = K.size();
  std::vector<double> ra(n), cb(n);
  double sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < n; ++i) sa += (ra[i] = std::sqrt(a.weights[i]));
  for (std::size_t j = 0; j < n; ++j) sb += (cb[j] = std::sqrt(b.weights[j]));
  if (sa == 0.0 || sb == 0.0) throw AllZeroKernel("zero-mass measure");
  for (double& x : ra) x /= sa;
  for (double& x : cb) x /= sb;

  if (K.nnz_ratio == 1.0)
    return SamplingPlan::factorized(PlanKind::OT, std::move(ra), std::move(cb),
                                    n * n);
  Matrix grid(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) grid(i, j) = ra[i] * cb[j];
  return masked_grid_plan(PlanKind::OT, std::move(grid), K);
}

SamplingPlan uot_probabilities(const DiscreteMeasure& a,
                               const DiscreteMeasure& b, const KernelMatrix& K,
                               double lambda, double epsilon) {
  if (!(lambda > 0.0)) throw Error(ErrorCategory::Input, "lambda must be > 0");
  if (!(epsilon > 0.0)) throw NonPositiveEpsilon("uot_probabilities");
  check_sizes(a, b, K);
  const std::size_t n = K.size();
  const double g_ab = lambda / (2.0 * lambda + epsilon);
  const double g_k = epsilon / (2.0 * lambda + epsilon);

  std::vector<double> pa(n), pb(n);
  for (std::size_t i = 0; i < n; ++i) pa[i] = std::pow(a.weights[i], g_ab);
  for (std::size_t j = 0; j < n; ++j) pb[j] = std::pow(b.weights[j], g_ab);

  Matrix grid(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* krow = K.entries.row(i);
    double* prow = grid.row(i);
    for (std::size_t j = 0; j < n; ++j)
      prow[j] = krow[j] > 0.0 ? pa[i] * pb[j] * std::pow(krow[j], g_k) : 0.0;
  }
  return masked_grid_plan(PlanKind::UOT, std::move(grid), K);
}

SamplingPlan barycenter_probabilities(const DiscreteMeasure& b_k,
                                      const KernelMatrix& K_k) {
  check_sizes(b_k, b_k, K_k);
  const std::size_t n = K_k.size();
  std::vector<double> cb(n);
  double sb = 0.0;
  for (std::size_t j = 0; j < n; ++j) sb += (cb[j] = std::sqrt(b_k.weights[j]));
  if (sb == 0.0) throw AllZeroKernel("zero-mass measure");
  for (double& x : cb) x /= sb;
  std::vector<double> rows(n, 1.0 / static_cast<double>(n));

  if (K_k.nnz_ratio == 1.0)
    return SamplingPlan::factorized(PlanKind::Barycenter, std::move(rows),
                                    std::move(cb), n * n);
  Matrix grid(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) grid(i, j) = rows[i] * cb[j];
  return masked_grid_plan(PlanKind::Barycenter, std::move(grid), K_k);
}

SamplingPlan uniform_probabilities(const KernelMatrix& K) {
  const std::size_t n = K.size();
  const std::size_t nnz = kernel_nnz_count(K);
  if (nnz == 0) throw AllZeroKernel("kernel has no support");
  if (K.nnz_ratio == 1.0) {
    std::vector<double> rw(n, 1.0 / static_cast<double>(n));
    return SamplingPlan::factorized(PlanKind::Uniform, rw, rw, n * n);
  }
  Matrix grid(n, n, 1.0);
  return masked_grid_plan(PlanKind::Uniform, std::move(grid), K);
}

SamplingPlan shrink_with_uniform(const SamplingPlan& plan, double theta) {
  if (!(theta >= 0.0 && theta < 1.0))
    throw ThetaOutOfRange("theta = " + std::to_string(theta));
  SamplingPlan out = plan;
  if (theta == 0.0) {
    out.theta_ = 0.0;
    return out;
  }
  if (out.grid_.has_value()) {
    // Fold directly into the grid; support entries only.
    const double unif = theta / static_cast<double>(out.kernel_nnz_);
    for (double& p : out.grid_->data())
      if (p > 0.0) p = (1.0 - theta) * p + unif;
    out.theta_ = 0.0;
  } else {
    out.theta_ = theta;  // mixed lazily in prob()
  }
  return out;
}

SparseKernel poisson_sparsify(const KernelMatrix& K, const SamplingPlan& plan,
                              double s, std::uint64_t seed) {
  const std::size_t n = K.size();
  if (plan.size() != n) throw LengthMismatch("plan dimension != kernel");
  if (!(s > 0.0) || s >= static_cast<double>(n) * static_cast<double>(n))
    throw BudgetTooLarge("budget s must satisfy 0 < s < n^2");

  SparseKernel sk;
  sk.n = n;
  sk.seed = seed;
  sk.epsilon = K.epsilon;
  sk.row_ptr.assign(n + 1, 0);
  sk.col_idx.reserve(static_cast<std::size_t>(s * 1.1) + 16);
  sk.values.reserve(static_cast<std::size_t>(s * 1.1) + 16);

  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(seed, i);  // one substream per row
    const double* krow = K.entries.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (krow[j] == 0.0) continue;
      const double p_star = std::min(1.0, s * plan.prob(i, j));
      const double draw = rng.next_double();
      if (p_star <= 0.0) continue;
      if (draw < p_star) {
        sk.col_idx.push_back(static_cast<std::uint32_t>(j));
        sk.values.push_back(p_star >= 1.0 ? krow[j] : krow[j] / p_star);
      }
    }
    sk.row_ptr[i + 1] = sk.col_idx.size();
  }
  sk.realized_nnz = sk.values.size();
  return sk;
}

std::vector<double> spmv(const SparseKernel& M, const std::vector<double>& v) {
  if (v.size() != M.n) throw LengthMismatch("spmv vector length");
  std::vector<double> out(M.n, 0.0);
  for (std::size_t i = 0; i < M.n; ++i) {
    double acc = 0.0;
    for (std::size_t p = M.row_ptr[i]; p < M.row_ptr[i + 1]; ++p)
      acc += M.values[p] * v[M.col_idx[p]];
    out[i] = acc;
  }
  return out;
}

std::vector<double> spmv_t(const SparseKernel& M,
                           const std::vector<double>& u) {
  if (u.size() != M.n) throw LengthMismatch("spmv_t vector length");
  std::vector<double> out(M.n, 0.0);
  for (std::size_t i = 0; i < M.n; ++i) {
    const double ui = u[i];
    if (ui == 0.0) continue;
    for (std::size_t p = M.row_ptr[i]; p < M.row_ptr[i + 1]; ++p)
      out[M.col_idx[p]] += M.values[p] * ui;
  }
  return out;
}

Matrix SparseKernel::to_dense() const {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
      m(i, col_idx[p]) = values[p];
  return m;
}

void SparseKernel::save_triplet_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.precision(17);
  out << "row,col,value\n";
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
      out << i << ',' << col_idx[p] << ',' << values[p] << '\n';
}

void SparseKernel::save_metadata_json(const std::string& path, double s,
                                      double theta, PlanKind kind) const {
  nlohmann::json j;
  j["seed"] = seed;
  j["s"] = s;
  j["theta"] = theta;
  switch (kind) {
    case PlanKind::OT: j["kind"] = "ot"; break;
    case PlanKind::UOT: j["kind"] = "uot"; break;
    case PlanKind::Barycenter: j["kind"] = "barycenter"; break;
    case PlanKind::Uniform: j["kind"] = "uniform"; break;
  }
  j["realized_nnz"] = realized_nnz;
  j["n"] = n;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

}  // namespace sparsink
