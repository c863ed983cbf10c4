#ifndef SPARSINK_BARYCENTER_HPP_
#define SPARSINK_BARYCENTER_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "sparsink/errors.hpp"
#include "sparsink/solvers.hpp"

namespace sparsink {

struct BarycenterConfig {
  double delta = 1e-6;
  std::size_t max_iter = 1000;
};

struct BarycenterResult {
  std::vector<double> weights;  // the barycenter q
  std::size_t iterations = 0;
  bool converged = false;
  bool diverged = false;  // scalings blew up; weights are the last finite iterate
  std::size_t masked_atoms = 0;
};

// Iterative Bregman projection on m kernels. One iteration, for each k with
// w_k > 0:
//   v_k <- b_k / K_k' u_k,
// then q <- prod_k (K_k v_k)^{w_k} and u_k <- q / K_k v_k, stopping on
// ||q_t - q_{t-1}||_1 <= delta.
// Atoms orphaned by every-kernel row gaps are masked under EmptyPolicy::Mask.
template <class Kernel>
BarycenterResult ibp(const std::vector<const Kernel*>& kernels,
                     const std::vector<const DiscreteMeasure*>& measures,
                     const std::vector<double>& w, const BarycenterConfig& cfg,
                     EmptyPolicy empty_policy = EmptyPolicy::Error);

// Sketches each K_k with column probabilities sqrt(b_{k,j}) (rows uniform)
// and per-kernel seed derived from (seed, k), then runs ibp on the sketches.
BarycenterResult spar_ibp(
    const std::vector<const KernelMatrix*>& kernels,
    const std::vector<const DiscreteMeasure*>& measures,
    const std::vector<double>& w, const BarycenterConfig& cfg, double s,
    std::uint64_t seed, bool strict = false);

// ---- template implementation ----------------------------------------------

template <class Kernel>
BarycenterResult ibp(const std::vector<const Kernel*>& kernels,
                     const std::vector<const DiscreteMeasure*>& measures,
                     const std::vector<double>& w, const BarycenterConfig& cfg,
                     EmptyPolicy empty_policy) {
  const std::size_t m = kernels.size();
  if (measures.size() != m || w.size() != m)
    throw LengthMismatch("kernels, measures and weights must align");
  if (m == 0) throw LengthMismatch("empty barycenter problem");
  double wsum = 0.0;
  for (double wk : w) {
    if (wk < 0.0) throw NegativeWeight("barycenter weight");
    wsum += wk;
  }
  if (std::abs(wsum - 1.0) > 1e-10)
    throw NotNormalized("barycenter weights must sum to 1");

  const std::size_t n = kernel_size(*kernels[0]);
  for (std::size_t k = 0; k < m; ++k) {
    if (kernel_size(*kernels[k]) != n || measures[k]->size() != n)
      throw LengthMismatch("all measures must share one dimension");
  }

  // Row mask: an atom survives only if every active kernel can reach it.
  // Column masks are per kernel.
  std::vector<char> row_ok(n, 1);
  std::vector<std::vector<char>> col_ok(m);
  std::size_t masked = 0;
  for (std::size_t k = 0; k < m; ++k) {
    if (w[k] == 0.0) continue;
    std::vector<char> rne, cne;
    kernel_coverage(*kernels[k], rne, cne);
    col_ok[k] = std::move(cne);
    for (std::size_t i = 0; i < n; ++i) row_ok[i] = row_ok[i] && rne[i];
  }
  for (std::size_t i = 0; i < n; ++i) masked += row_ok[i] ? 0 : 1;
  bool col_gap = false;
  for (std::size_t k = 0; k < m; ++k) {
    if (w[k] == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) col_gap = col_gap || !col_ok[k][j];
  }
  if ((masked > 0 || col_gap) && empty_policy == EmptyPolicy::Error)
    throw ZeroDenominator("a kernel has empty rows or columns");
  if (masked == n) throw DegenerateSketchError("no atom covered by all kernels");

  std::vector<double> q(n, 1.0 / static_cast<double>(n)), q_prev(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!row_ok[i]) q[i] = 0.0;
  std::vector<std::vector<double>> u(m, std::vector<double>(n, 1.0));
  std::vector<std::vector<double>> v(m, std::vector<double>(n, 1.0));
  std::vector<std::vector<double>> kv(m, std::vector<double>(n, 0.0));
  std::vector<double> tmp(n);

  bool converged = false;
  bool diverged = false;
  std::size_t t = 0;
  while (t < cfg.max_iter) {
    ++t;
    q_prev = q;

    for (std::size_t k = 0; k < m; ++k) {
      if (w[k] == 0.0) continue;
      kernel_apply_t(*kernels[k], u[k], tmp);
      for (std::size_t j = 0; j < n; ++j) {
        if (!col_ok[k][j]) {
          v[k][j] = 0.0;
          continue;
        }
        if (tmp[j] <= 0.0 || !std::isfinite(tmp[j])) {
          // A covered column can still lose every row to earlier masking.
          if (empty_policy == EmptyPolicy::Mask && tmp[j] == 0.0) {
            col_ok[k][j] = 0;
            v[k][j] = 0.0;
            continue;
          }
          if (empty_policy == EmptyPolicy::Mask) {
            diverged = true;
            break;
          }
          throw ZeroDenominator("K'u underflowed in IBP");
        }
        v[k][j] = measures[k]->weights[j] / tmp[j];
        if (!(v[k][j] <= 1e150) && empty_policy == EmptyPolicy::Mask) {
          diverged = true;
          break;
        }
      }
      if (diverged) break;
      kernel_apply(*kernels[k], v[k], kv[k]);
      for (std::size_t i = 0; i < n; ++i) {
        if (!row_ok[i]) continue;
        if (kv[k][i] <= 0.0 || !std::isfinite(kv[k][i])) {
          if (empty_policy == EmptyPolicy::Mask && kv[k][i] == 0.0) {
            row_ok[i] = 0;
            q[i] = 0.0;
            ++masked;
            continue;
          }
          if (empty_policy == EmptyPolicy::Mask) {
            diverged = true;
            break;
          }
          throw ZeroDenominator("Kv underflowed in IBP");
        }
      }
      if (diverged) break;
    }
    if (diverged) {
      // Diverging scalings on a disconnected sketch: keep the last iterate.
      q = q_prev;
      break;
    }
    if (masked == n)
      throw DegenerateSketchError("masking removed every atom");

    for (std::size_t i = 0; i < n; ++i) {
      if (!row_ok[i]) continue;
      double acc = 1.0;
      for (std::size_t k = 0; k < m; ++k) {
        if (w[k] == 0.0) continue;
        acc *= std::pow(kv[k][i], w[k]);
      }
      if (!(acc <= 1e150) && empty_policy == EmptyPolicy::Mask) {
        diverged = true;
        break;
      }
      q[i] = acc;
    }
    for (std::size_t k = 0; !diverged && k < m; ++k) {
      if (w[k] == 0.0) continue;
      for (std::size_t i = 0; i < n; ++i) {
        u[k][i] = row_ok[i] ? q[i] / kv[k][i] : 0.0;
        if (!(u[k][i] <= 1e150) && empty_policy == EmptyPolicy::Mask) {
          diverged = true;
          break;
        }
      }
    }
    if (diverged) {
      q = q_prev;
      break;
    }

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) err += std::abs(q[i] - q_prev[i]);
    if (err <= cfg.delta) {
      converged = true;
      break;
    }
  }

  BarycenterResult res;
  res.weights = std::move(q);
  res.iterations = t;
  res.converged = converged;
  res.diverged = diverged;
  res.masked_atoms = masked;
  return res;
}

}  // namespace sparsink

#endif  // SPARSINK_BARYCENTER_HPP_
