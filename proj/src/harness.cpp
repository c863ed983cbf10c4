#include "sparsink/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>

#include "sparsink/rng.hpp"

namespace sparsink {

namespace {

double normal_density(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / sigma;
}

// Unnormalized Student-t density with 5 degrees of freedom, location-scale.
double t5_density(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::pow(1.0 + z * z / 5.0, -3.0) / sigma;
}

std::vector<double> grid_weights(std::size_t n,
                                 const std::function<double(double)>& density,
                                 double total_mass) {
  std::vector<double> w(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x =
        static_cast<double>(i + 1) / static_cast<double>(n + 1);
    w[i] = density(x);
    sum += w[i];
  }
  for (double& v : w) v *= total_mass / sum;
  return w;
}

PointList uniform_support(std::size_t n, std::size_t d, std::uint64_t seed) {
  PointList pts;
  pts.dim = d;
  pts.coords.resize(n * d);
  CounterRng rng(seed, 0);
  for (double& c : pts.coords) c = rng.next_double();
  return pts;
}

// x ~ N(0, Sigma) with Sigma_jk = 0.5^{|j-k|}, via the Cholesky factor.
PointList ar_gaussian_support(std::size_t n, std::size_t d,
                              std::uint64_t seed) {
  Matrix sigma(d, d);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = 0; k < d; ++k)
      sigma(j, k) = std::pow(0.5, std::abs(static_cast<long>(j) -
                                           static_cast<long>(k)));
  Matrix chol(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = 0; k <= j; ++k) {
      double acc = sigma(j, k);
      for (std::size_t t = 0; t < k; ++t) acc -= chol(j, t) * chol(k, t);
      chol(j, k) = (j == k) ? std::sqrt(acc) : acc / chol(k, k);
    }
  }

  PointList pts;
  pts.dim = d;
  pts.coords.resize(n * d);
  CounterRng rng(seed, 0);
  std::vector<double> z(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) z[k] = rng.next_normal();
    for (std::size_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k <= j; ++k) acc += chol(j, k) * z[k];
      pts.coords[i * d + j] = acc;
    }
  }
  return pts;
}

}  // namespace

ScenarioData generate_scenario(const ScenarioSpec& spec) {
  if (spec.n < 2 || spec.d < 1)
    throw LengthMismatch("scenario needs n >= 2 and d >= 1");
  const double sigma =
      spec.scale_is_sd ? spec.scale_param : std::sqrt(spec.scale_param);
  const double mass_a = spec.masses ? spec.masses->first : 1.0;
  const double mass_b = spec.masses ? spec.masses->second : 1.0;
  if (mass_a <= 0.0 || mass_b <= 0.0)
    throw NegativeWeight("total masses must be positive");

  std::vector<double> wa, wb;
  switch (spec.scenario) {
    case Scenario::C1:
    case Scenario::C2:
      wa = grid_weights(spec.n,
                        [&](double x) { return normal_density(x, 1.0 / 3.0, sigma); },
                        mass_a);
      wb = grid_weights(spec.n,
                        [&](double x) { return normal_density(x, 0.5, sigma); },
                        mass_b);
      break;
    case Scenario::C3:
      wa = grid_weights(spec.n,
                        [&](double x) { return t5_density(x, 1.0 / 3.0, sigma); },
                        mass_a);
      wb = grid_weights(spec.n,
                        [&](double x) { return t5_density(x, 0.5, sigma); },
                        mass_b);
      break;
  }

  PointList support = spec.scenario == Scenario::C2
                          ? ar_gaussian_support(spec.n, spec.d, spec.seed)
                          : uniform_support(spec.n, spec.d, spec.seed);

  ScenarioData data;
  data.support = support;
  data.a = new_measure(std::move(wa), support, !spec.masses.has_value());
  data.b = new_measure(std::move(wb), std::move(support),
                       !spec.masses.has_value());
  return data;
}

double s0_budget(std::size_t n) {
  const double ln = std::log(static_cast<double>(n));
  return 1e-3 * static_cast<double>(n) * ln * ln * ln * ln;
}

BudgetSchedule s_schedule(std::size_t n,
                          const std::vector<double>& multipliers) {
  if (n < 2) throw LengthMismatch("s_schedule needs n >= 2");
  const double s0 = s0_budget(n);
  const double cap =
      static_cast<double>(n) * static_cast<double>(n) * (1.0 - 1e-9);
  BudgetSchedule sched;
  for (double m : multipliers) {
    double s = m * s0;
    if (s >= cap) {
      s = cap;
      sched.clamped = true;
    }
    sched.budgets.push_back(s);
  }
  return sched;
}

RmaeReport rmae_experiment(const ScenarioSpec& spec, ApproxMethod method,
                           const std::vector<double>& budgets,
                           std::size_t replications, const SolverConfig& cfg) {
  if (replications < 1)
    throw LengthMismatch("rmae_experiment needs replications >= 1");
  ScenarioData data = generate_scenario(spec);
  const bool unbalanced = spec.sparsity_target.has_value();

  CostMatrix C;
  if (unbalanced) {
    const double eta = eta_for_sparsity(data.support, *spec.sparsity_target);
    C = wfr_cost(data.support, data.support, eta);
  } else {
    C = sq_euclidean_cost(data.support, data.support);
  }
  KernelMatrix K = kernel_from_cost(C, cfg.epsilon);

  double exact;
  try {
    if (unbalanced) {
      SolveResult base = sinkhorn_uot(K, data.a, data.b, cfg);
      exact = uot_objective(base.plan, C, data.a, data.b, cfg.lambda,
                            cfg.epsilon);
    } else {
      SolveResult base = sinkhorn_ot(K, data.a, data.b, cfg);
      exact = ot_objective(base.plan, C, cfg.epsilon);
    }
  } catch (const Error& e) {
    throw BaselineFailed(e.what());
  }
  if (exact == 0.0) throw BaselineFailed("exact objective is zero");

  SparSinkOptions opts;
  opts.probs = method == ApproxMethod::SparSink ? SketchProbs::Importance
                                                : SketchProbs::Uniform;

  RmaeReport report;
  report.method = method;
  report.exact_objective = exact;
  report.replications = replications;
  report.scale_note = spec.scale_is_sd ? "scale_param read as sd"
                                       : "scale_param read as variance";
  for (double s : budgets) {
    RmaeRow row;
    row.budget = s;
    for (std::size_t r = 0; r < replications; ++r) {
      // Replication seeds are counter-derived; a degenerate draw (orphaned
      // atom whose sub-problem still fails) retries on a fresh substream.
      double approx = 0.0;
      std::size_t attempt = 0;
      for (;;) {
        const std::uint64_t seed =
            mix_seed(spec.seed, (r + 1) + attempt * 0x100000ULL);
        try {
          SolveResult sol =
              unbalanced
                  ? spar_sink_uot(K, C, data.a, data.b, cfg, s, seed, opts)
                  : spar_sink_ot(K, C, data.a, data.b, cfg, s, seed, opts);
          approx = sol.report.objective;
          break;
        } catch (const Error&) {
          if (++attempt > 5) throw;
          ++row.retried;
        }
      }
      row.errors.push_back(std::abs(approx - exact) / std::abs(exact));
    }
    double mean = 0.0;
    for (double e : row.errors) mean += e;
    mean /= static_cast<double>(row.errors.size());
    double var = 0.0;
    for (double e : row.errors) var += (e - mean) * (e - mean);
    row.mean = mean;
    row.std_error =
        row.errors.size() > 1
            ? std::sqrt(var / static_cast<double>(row.errors.size() - 1) /
                        static_cast<double>(row.errors.size()))
            : 0.0;
    report.rows.push_back(std::move(row));
  }
  return report;
}

namespace {

// Gibbs kernel straight from points, skipping the n^2 cost-matrix copy.
KernelMatrix direct_sq_euclid_kernel(const PointList& pts, double epsilon) {
  const std::size_t n = pts.size();
  KernelMatrix K;
  K.epsilon = epsilon;
  K.entries = Matrix(n, n);
  std::size_t nnz = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = pts.point(i);
    double* row = K.entries.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double* q = pts.point(j);
      double d2 = 0.0;
      for (std::size_t k = 0; k < pts.dim; ++k) {
        const double diff = p[k] - q[k];
        d2 += diff * diff;
      }
      row[j] = std::exp(-d2 / epsilon);
      nnz += row[j] > 0.0 ? 1 : 0;
    }
  }
  K.nnz_ratio = static_cast<double>(nnz) / (static_cast<double>(n) *
                                            static_cast<double>(n));
  return K;
}

template <class Kernel>
double time_scaling_iters(const Kernel& K, const std::vector<double>& a,
                          const std::vector<double>& b, std::size_t iters) {
  const std::size_t n = kernel_size(K);
  std::vector<double> u(n, 1.0), v(n, 1.0), tmp(n);
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t t = 0; t < iters; ++t) {
    kernel_apply(K, v, tmp);
    for (std::size_t i = 0; i < n; ++i) u[i] = tmp[i] > 0.0 ? a[i] / tmp[i] : 0.0;
    kernel_apply_t(K, u, tmp);
    for (std::size_t j = 0; j < n; ++j) v[j] = tmp[j] > 0.0 ? b[j] / tmp[j] : 0.0;
  }
  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return dt / static_cast<double>(iters);
}

}  // namespace

std::vector<TimingRow> timing_sweep(const std::vector<std::size_t>& sizes,
                                    std::size_t d, const SolverConfig& cfg,
                                    double s_multiplier, std::uint64_t seed,
                                    std::size_t iters_per_point) {
  std::vector<TimingRow> rows;
  for (std::size_t n : sizes) {
    ScenarioSpec spec;
    spec.scenario = Scenario::C1;
    spec.n = n;
    spec.d = d;
    spec.seed = seed;
    ScenarioData data = generate_scenario(spec);

    auto t0 = std::chrono::steady_clock::now();
    KernelMatrix K = direct_sq_euclid_kernel(data.support, cfg.epsilon);
    const double dense_setup =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    TimingRow dense;
    dense.method = "sinkhorn";
    dense.n = n;
    dense.setup_s = dense_setup;
    dense.iters_timed = iters_per_point;
    dense.per_iter_s =
        time_scaling_iters(K, data.a.weights, data.b.weights, iters_per_point);
    rows.push_back(dense);

    const double s = std::min(s_multiplier * s0_budget(n),
                              static_cast<double>(n) * static_cast<double>(n) *
                                  0.999);
    t0 = std::chrono::steady_clock::now();
    SamplingPlan plan = ot_probabilities(data.a, data.b, K);
    SparseKernel sk = poisson_sparsify(K, plan, s, seed);
    const double sparse_setup =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    TimingRow sparse;
    sparse.method = "spar-sink";
    sparse.n = n;
    sparse.setup_s = sparse_setup;
    sparse.iters_timed = iters_per_point * 50;  // O(s) iters are tiny; average more
    sparse.per_iter_s = time_scaling_iters(sk, data.a.weights, data.b.weights,
                                           sparse.iters_timed);
    rows.push_back(sparse);
  }
  return rows;
}

double loglog_slope(const std::vector<std::size_t>& x,
                    const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw LengthMismatch("loglog_slope needs matched samples");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(static_cast<double>(x[i]));
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

PairwiseWfrResult pairwise_wfr(const std::vector<FrameImage>& frames,
                               double eta, double lambda, double epsilon,
                               double s_multiplier, std::uint64_t seed,
                               std::size_t stride, bool exact) {
  if (frames.size() < 2) throw LengthMismatch("need at least two frames");
  if (stride < 1) throw LengthMismatch("stride must be >= 1");
  for (const auto& f : frames)
    if (f.height != frames[0].height || f.width != frames[0].width)
      throw DimensionMismatch("frames must share dimensions");

  PairwiseWfrResult result;
  for (std::size_t i = 0; i < frames.size(); i += stride)
    result.frame_indices.push_back(i);
  const std::size_t m = result.frame_indices.size();

  std::vector<DiscreteMeasure> measures;
  measures.reserve(m);
  for (std::size_t idx : result.frame_indices)
    measures.push_back(measure_from_image(frames[idx]));

  // All frames live on one pixel grid: one cost and one kernel matrix.
  const CostMatrix C =
      wfr_cost(measures[0].support, measures[0].support, eta);
  const KernelMatrix K = kernel_from_cost(C, epsilon);
  const double s = s_multiplier * s0_budget(measures[0].size());

  SolverConfig cfg;
  cfg.epsilon = epsilon;
  cfg.lambda = lambda;

  result.distances = Matrix(m, m, 0.0);
  std::size_t pair_index = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j, ++pair_index) {
      double dist;
      try {
        double uot;
        if (exact) {
          SolveResult sol = sinkhorn_uot(K, measures[i], measures[j], cfg);
          uot = uot_objective(sol.plan, C, measures[i], measures[j],
                              cfg.lambda, cfg.epsilon);
        } else {
          SolveResult sol =
              spar_sink_uot(K, C, measures[i], measures[j], cfg, s,
                            mix_seed(seed, pair_index));
          uot = sol.report.objective;
        }
        dist = wfr_from_uot(uot);
      } catch (const Error&) {
        dist = std::numeric_limits<double>::quiet_NaN();
        ++result.failed_pairs;
      }
      result.distances(i, j) = dist;
      result.distances(j, i) = dist;
    }
  }
  return result;
}

EdPrediction predict_ed(const Matrix& distances, std::size_t t_es,
                        std::size_t window_lo, std::size_t window_hi,
                        std::size_t t_ed_true) {
  const std::size_t m = distances.rows();
  if (t_es >= m || window_lo > window_hi || window_hi >= m)
    throw EmptyWindow("prediction window out of bounds");

  double best = -1.0;
  std::size_t best_idx = window_lo;
  bool found = false;
  for (std::size_t t = window_lo; t <= window_hi; ++t) {
    const double d = distances(t_es, t);
    if (std::isnan(d)) continue;
    if (d > best) {
      best = d;
      best_idx = t;
      found = true;
    }
  }
  if (!found) throw EmptyWindow("no finite distances in window");

  EdPrediction pred;
  pred.t_ed_hat = best_idx;
  const double num = static_cast<double>(best_idx) - static_cast<double>(t_es);
  const double den =
      static_cast<double>(t_ed_true) - static_cast<double>(t_es);
  if (den == 0.0) throw EmptyWindow("true ED equals ES");
  pred.error = std::abs(1.0 - num / den);
  return pred;
}

FrameImage gaussian_blob_frame(std::size_t height, std::size_t width,
                               double center_row, double center_col,
                               double sigma) {
  FrameImage img;
  img.height = height;
  img.width = width;
  img.pixels.resize(height * width);
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c) {
      const double dr = static_cast<double>(r) - center_row;
      const double dc = static_cast<double>(c) - center_col;
      img.pixels[r * width + c] =
          std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
    }
  return img;
}

std::vector<std::vector<double>> barycenter_mixture_weights(std::size_t n) {
  auto b1 = grid_weights(
      n, [](double x) { return normal_density(x, 0.2, std::sqrt(1.0 / 50)); },
      1.0);
  auto b2 = grid_weights(
      n,
      [](double x) {
        return 0.5 * normal_density(x, 0.5, std::sqrt(1.0 / 60)) +
               0.5 * normal_density(x, 0.8, std::sqrt(1.0 / 80));
      },
      1.0);
  auto b3 = grid_weights(
      n, [](double x) { return t5_density(x, 0.6, std::sqrt(1.0 / 100)); },
      1.0);

  std::vector<std::vector<double>> out{std::move(b1), std::move(b2),
                                       std::move(b3)};
  // Smooth and renormalize so no atom is effectively unreachable.
  for (auto& b : out) {
    const double bump = 1e-2 * *std::max_element(b.begin(), b.end());
    double sum = 0.0;
    for (double& v : b) sum += (v += bump);
    for (double& v : b) v /= sum;
  }
  return out;
}

std::vector<BarycenterBenchRow> barycenter_benchmark(
    std::size_t n, std::size_t d, double epsilon,
    const std::vector<double>& budgets, std::size_t replications,
    std::uint64_t seed, const BarycenterConfig& cfg) {
  PointList support = uniform_support(n, d, seed);
  const CostMatrix C = sq_euclidean_cost(support, support);
  const KernelMatrix K = kernel_from_cost(C, epsilon);

  auto weight_sets = barycenter_mixture_weights(n);
  std::vector<DiscreteMeasure> measures;
  for (auto& w : weight_sets) measures.push_back(new_measure(w, support, true));

  std::vector<const KernelMatrix*> kernels{&K, &K, &K};
  std::vector<const DiscreteMeasure*> mptrs;
  for (const auto& msr : measures) mptrs.push_back(&msr);
  const std::vector<double> w(3, 1.0 / 3.0);

  BarycenterResult exact = ibp(kernels, mptrs, w, cfg);

  std::vector<BarycenterBenchRow> rows;
  for (double s : budgets) {
    BarycenterBenchRow row;
    row.budget = s;
    double acc = 0.0;
    for (std::size_t r = 0; r < replications; ++r) {
      BarycenterResult approx;
      std::size_t attempt = 0;
      for (;;) {
        try {
          approx = spar_ibp(kernels, mptrs, w, cfg, s,
                            mix_seed(seed, (r + 1) + attempt * 0x100000ULL));
          break;
        } catch (const Error&) {
          if (++attempt > 5) throw;
        }
      }
      double l1 = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        l1 += std::abs(approx.weights[i] - exact.weights[i]);
      row.errors.push_back(l1);
      acc += l1;
    }
    row.mean_l1_error = acc / static_cast<double>(replications);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace sparsink
