#ifndef SPARSINK_GEOMETRY_HPP_
#define SPARSINK_GEOMETRY_HPP_

#include "sparsink/matrix.hpp"
#include "sparsink/measures.hpp"

namespace sparsink {

enum class CostKind { SqEuclidean, Euclidean, WFR };

// Pairwise cost matrix. Entries may be +inf (WFR truncation); those become
// exact structural zeros in the kernel.
struct CostMatrix {
  Matrix entries;
  CostKind kind = CostKind::SqEuclidean;
  double eta = 0.0;  // only meaningful for kind == WFR
  double c0 = 0.0;   // max finite entry (metadata)
};

struct KernelMatrix {
  Matrix entries;  // all in [0,1]; exact 0 where cost is +inf
  double epsilon = 0.0;
  double nnz_ratio = 1.0;

  std::size_t size() const { return entries.rows(); }
};

CostMatrix sq_euclidean_cost(const PointList& x, const PointList& y);
CostMatrix euclidean_cost(const PointList& x, const PointList& y);

// C_ij = -log(cos_+^2(d_ij/(2 eta))); +inf when d_ij >= pi*eta.
CostMatrix wfr_cost(const PointList& x, const PointList& y, double eta);

KernelMatrix kernel_from_cost(const CostMatrix& cost, double epsilon);

// Smallest eta whose WFR kernel keeps roughly `target_nnz_ratio` of the
// pairs, found by reading the target quantile of sorted pairwise distances.
double eta_for_sparsity(const PointList& x, double target_nnz_ratio);

}  // namespace sparsink

#endif  // SPARSINK_GEOMETRY_HPP_
