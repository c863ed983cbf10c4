#include "sparsink/barycenter.hpp"

#include "sparsink/rng.hpp"
#include "sparsink/sparsify.hpp"

namespace sparsink {

BarycenterResult spar_ibp(const std::vector<const KernelMatrix*>& kernels,
                          const std::vector<const DiscreteMeasure*>& measures,
                          const std::vector<double>& w,
                          const BarycenterConfig& cfg, double s,
                          std::uint64_t seed, bool strict) {
  const std::size_t m = kernels.size();
  if (measures.size() != m || w.size() != m)
    throw LengthMismatch("kernels, measures and weights must align");

  // Independent derived seeds per kernel keep sketch noise uncorrelated
  // across measures.
  std::vector<SparseKernel> sketches;
  sketches.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    SamplingPlan plan = barycenter_probabilities(*measures[k], *kernels[k]);
    sketches.push_back(
        poisson_sparsify(*kernels[k], plan, s, mix_seed(seed, k)));
    if (strict) {
      std::vector<char> rne, cne;
      kernel_coverage(sketches.back(), rne, cne);
      for (std::size_t i = 0; i < rne.size(); ++i)
        if (!rne[i] || !cne[i])
          throw DegenerateSketchError("sketch " + std::to_string(k) +
                                      " orphaned atom " + std::to_string(i));
    }
  }

  std::vector<const SparseKernel*> ptrs;
  ptrs.reserve(m);
  for (const auto& sk : sketches) ptrs.push_back(&sk);
  return ibp(ptrs, measures, w, cfg,
             strict ? EmptyPolicy::Error : EmptyPolicy::Mask);
}

}  // namespace sparsink
