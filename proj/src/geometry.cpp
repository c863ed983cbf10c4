#include "sparsink/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sparsink/errors.hpp"

namespace sparsink {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

double sq_dist(const double* p, const double* q, std::size_t d) {
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double diff = p[k] - q[k];
    s += diff * diff;
  }
  return s;
}

CostMatrix pairwise_cost(const PointList& x, const PointList& y, CostKind kind,
                         double eta) {
  if (x.dim != y.dim || x.dim == 0)
    throw DimensionMismatch("point lists must share a positive dimension");
  const std::size_t nx = x.size(), ny = y.size();
  CostMatrix c;
  c.kind = kind;
  c.eta = eta;
  c.entries = Matrix(nx, ny);
  double c0 = 0.0;
  for (std::size_t i = 0; i < nx; ++i) {
    double* row = c.entries.row(i);
    const double* p = x.point(i);
    for (std::size_t j = 0; j < ny; ++j) {
      const double d2 = sq_dist(p, y.point(j), x.dim);
      double v;
      switch (kind) {
        case CostKind::SqEuclidean:
          v = d2;
          break;
        case CostKind::Euclidean:
          v = std::sqrt(d2);
          break;
        case CostKind::WFR: {
          const double d = std::sqrt(d2);
          if (d >= kPi * eta) {
            v = kInf;
          } else {
            const double cz = std::cos(d / (2.0 * eta));
            v = -std::log(cz * cz);
            if (!(v >= 0.0)) v = 0.0;  // clamp -0 from rounding at d = 0
          }
          break;
        }
      }
      row[j] = v;
      if (std::isfinite(v) && v > c0) c0 = v;
    }
  }
  c.c0 = c0;
  return c;
}

}  // namespace

CostMatrix sq_euclidean_cost(const PointList& x, const PointList& y) {
  return pairwise_cost(x, y, CostKind::SqEuclidean, 0.0);
}

CostMatrix euclidean_cost(const PointList& x, const PointList& y) {
  return pairwise_cost(x, y, CostKind::Euclidean, 0.0);
}

CostMatrix wfr_cost(const PointList& x, const PointList& y, double eta) {
  if (!(eta > 0.0)) throw NonPositiveEta("eta = " + std::to_string(eta));
  return pairwise_cost(x, y, CostKind::WFR, eta);
}

KernelMatrix kernel_from_cost(const CostMatrix& cost, double epsilon) {
  if (!(epsilon > 0.0))
    throw NonPositiveEpsilon("epsilon = " + std::to_string(epsilon));
  KernelMatrix K;
  K.epsilon = epsilon;
  const std::size_t rows = cost.entries.rows(), cols = cost.entries.cols();
  K.entries = Matrix(rows, cols);
  std::size_t nnz = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    const double* crow = cost.entries.row(i);
    double* krow = K.entries.row(i);
    for (std::size_t j = 0; j < cols; ++j) {
      const double v = std::isinf(crow[j]) ? 0.0 : std::exp(-crow[j] / epsilon);
      krow[j] = v;
      nnz += v > 0.0 ? 1 : 0;
    }
  }
  K.nnz_ratio = static_cast<double>(nnz) / static_cast<double>(rows * cols);
  return K;
}

double eta_for_sparsity(const PointList& x, double target_nnz_ratio) {
  if (!(target_nnz_ratio > 0.0 && target_nnz_ratio <= 1.0))
    throw ThetaOutOfRange("target nnz ratio must lie in (0,1]");
  const std::size_t n = x.size();
  if (n < 2) throw DegenerateSupport("need at least two points");

  std::vector<double> dists;
  dists.reserve(n * n);
  double dmax = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double d = std::sqrt(sq_dist(x.point(i), x.point(j), x.dim));
      dists.push_back(d);
      dmax = std::max(dmax, d);
    }
  if (dmax == 0.0) {
    if (target_nnz_ratio < 1.0)
      throw DegenerateSupport("all points identical");
    return 1.0;
  }
  if (target_nnz_ratio >= 1.0) return dmax / kPi * 1.0001 + 1e-12;

  // Keep pairs with d < pi*eta: pick eta so the target quantile of the n^2
  // pairwise distances sits just above the threshold.
  std::sort(dists.begin(), dists.end());
  const std::size_t keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::llround(target_nnz_ratio * static_cast<double>(n) *
                          static_cast<double>(n))));
  const double q_in = dists[keep - 1];  // largest distance kept
  const double q_out = keep < dists.size() ? dists[keep] : q_in * 1.0001;
  return (q_in == q_out ? q_in * (1.0 + 1e-9) : 0.5 * (q_in + q_out)) / kPi;
}

}  // namespace sparsink
