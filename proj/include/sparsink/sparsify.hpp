#ifndef SPARSINK_SPARSIFY_HPP_
#define SPARSINK_SPARSIFY_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sparsink/geometry.hpp"
#include "sparsink/measures.hpp"

namespace sparsink {

enum class PlanKind { OT, UOT, Barycenter, Uniform };

// Element selection probabilities p_ij summing to 1 over the kernel support.
// Rank-one plans (OT / barycenter / uniform on a fully dense kernel) factor
// as p_ij = row_w[i] * col_w[j] and skip the n x n grid; plans on truncated
// kernels and UOT plans store the grid explicitly.
class SamplingPlan {
 public:
  static SamplingPlan factorized(PlanKind kind, std::vector<double> row_w,
                                 std::vector<double> col_w,
                                 std::size_t kernel_nnz);
  static SamplingPlan from_grid(PlanKind kind, Matrix grid,
                                std::size_t kernel_nnz);

  double prob(std::size_t i, std::size_t j) const {
    double base = grid_.has_value() ? (*grid_)(i, j) : row_w_[i] * col_w_[j];
    if (theta_ == 0.0) return base;
    return base == 0.0 ? 0.0
                       : (1.0 - theta_) * base +
                             theta_ / static_cast<double>(kernel_nnz_);
  }

  std::size_t size() const { return n_; }
  PlanKind kind() const { return kind_; }
  double theta() const { return theta_; }
  std::size_t kernel_nnz() const { return kernel_nnz_; }
  bool factorized_storage() const { return !grid_.has_value(); }

  friend SamplingPlan shrink_with_uniform(const SamplingPlan& plan,
                                          double theta);

 private:
  SamplingPlan() = default;

  PlanKind kind_ = PlanKind::Uniform;
  std::size_t n_ = 0;
  double theta_ = 0.0;
  std::size_t kernel_nnz_ = 0;
  std::optional<Matrix> grid_;
  std::vector<double> row_w_, col_w_;
};

// Row-compressed sketch with inverse-probability rescaled values.
struct SparseKernel {
  std::vector<std::size_t> row_ptr;  // size n+1
  std::vector<std::uint32_t> col_idx;
  std::vector<double> values;  // K_ij / p*_ij, all > 0
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::size_t realized_nnz = 0;
  double epsilon = 0.0;

  std::size_t size() const { return n; }
  Matrix to_dense() const;
  void save_triplet_csv(const std::string& path) const;
  void save_metadata_json(const std::string& path, double s, double theta,
                          PlanKind kind) const;
};

// p_ij proportional to sqrt(a_i b_j) on the support of K.
SamplingPlan ot_probabilities(const DiscreteMeasure& a,
                              const DiscreteMeasure& b, const KernelMatrix& K);

// p_ij proportional to (a_i b_j)^{lambda/(2 lambda + eps)}
//                       * K_ij^{eps/(2 lambda + eps)}.
SamplingPlan uot_probabilities(const DiscreteMeasure& a,
                               const DiscreteMeasure& b, const KernelMatrix& K,
                               double lambda, double epsilon);

// Column-constant: p_ij = sqrt(b_j) / (n * sum_j sqrt(b_j)) on the support.
SamplingPlan barycenter_probabilities(const DiscreteMeasure& b_k,
                                      const KernelMatrix& K_k);

SamplingPlan uniform_probabilities(const KernelMatrix& K);

// p'_ij = (1-theta) p_ij + theta / nnz(K) on the kernel support.
SamplingPlan shrink_with_uniform(const SamplingPlan& plan, double theta);

// Independent Bernoulli draw per supported entry with p* = min(1, s p_ij);
// kept entries stored as K_ij / p*. Row i uses substream (seed, i).
SparseKernel poisson_sparsify(const KernelMatrix& K, const SamplingPlan& plan,
                              double s, std::uint64_t seed);

std::vector<double> spmv(const SparseKernel& M, const std::vector<double>& v);
std::vector<double> spmv_t(const SparseKernel& M, const std::vector<double>& u);

}  // namespace sparsink

#endif  // SPARSINK_SPARSIFY_HPP_
