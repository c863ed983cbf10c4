// Command-line front end: pairwise solves, barycenters, benchmark sweeps and
// the echo-frame pipeline. Exit codes: 0 ok, 2 solver non-convergence,
// 3 degenerate sketch, 4 input error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "sparsink/barycenter.hpp"
#include "sparsink/harness.hpp"
#include "sparsink/solvers.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sparsink;

namespace {

struct PairArgs {
  std::string a_path, b_path;
  std::string cost = "sqeuclid";
  double eps = 0.1;
  double lambda = 1.0;
  double eta = 1.0;
  std::optional<double> spar;
  std::uint64_t seed = 1;
  double theta = 0.0;
  double delta = 1e-6;
  std::size_t max_iter = 1000;
  bool stabilize = false;
  std::string out;       // report json ("" = stdout)
  std::string plan_out;  // optional triplet csv of the plan
};

void add_pair_options(CLI::App* cmd, PairArgs& args, bool unbalanced) {
  cmd->add_option("--a", args.a_path, "first measure csv")->required();
  cmd->add_option("--b", args.b_path, "second measure csv")->required();
  cmd->add_option("--cost", args.cost, "sqeuclid | wfr")
      ->check(CLI::IsMember({"sqeuclid", "wfr"}));
  cmd->add_option("--eps", args.eps, "entropic regularization");
  if (unbalanced) {
    cmd->add_option("--lambda", args.lambda, "marginal KL weight")->required();
    cmd->add_option("--eta", args.eta, "WFR truncation radius");
  }
  cmd->add_option("--spar", args.spar, "sketch budget s (omit for dense)");
  cmd->add_option("--seed", args.seed, "sketch seed");
  cmd->add_option("--theta", args.theta, "uniform shrinkage");
  cmd->add_option("--delta", args.delta, "stopping threshold");
  cmd->add_option("--max-iter", args.max_iter, "iteration cap");
  cmd->add_flag("--stabilize", args.stabilize, "log-domain iterations");
  cmd->add_option("--out", args.out, "report json path (default stdout)");
  cmd->add_option("--plan-out", args.plan_out, "transport plan triplet csv");
}

void emit_report(const SolveReport& report, const std::string& out) {
  if (out.empty()) {
    std::cout << report.to_json() << "\n";
  } else {
    std::ofstream f(out);
    if (!f) throw IoError("cannot write " + out);
    f << report.to_json() << "\n";
  }
}

void emit_plan(const TransportPlan& plan, const std::string& path) {
  if (path.empty()) return;
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << "i,j,value\n";
  f.precision(17);
  plan.for_each_entry(
      [&](std::size_t i, std::size_t j, double t) { f << i << ',' << j << ',' << t << '\n'; });
}

int run_pair(const PairArgs& args, bool unbalanced) {
  DiscreteMeasure a = read_measure_csv(args.a_path, !unbalanced);
  DiscreteMeasure b = read_measure_csv(args.b_path, !unbalanced);

  CostMatrix C = args.cost == "wfr"
                     ? wfr_cost(a.support, b.support, args.eta)
                     : sq_euclidean_cost(a.support, b.support);
  KernelMatrix K = kernel_from_cost(C, args.eps);

  SolverConfig cfg;
  cfg.epsilon = args.eps;
  cfg.delta = args.delta;
  cfg.max_iter = args.max_iter;
  cfg.stabilize = args.stabilize;
  if (unbalanced) cfg.lambda = args.lambda;

  SolveResult res;
  if (args.spar) {
    SparSinkOptions opts;
    opts.theta = args.theta;
    res = unbalanced
              ? spar_sink_uot(K, C, a, b, cfg, *args.spar, args.seed, opts)
              : spar_sink_ot(K, C, a, b, cfg, *args.spar, args.seed, opts);
    // The sketch is gone after the call; only dense-plan output is offered.
  } else {
    res = unbalanced ? sinkhorn_uot(K, a, b, cfg) : sinkhorn_ot(K, a, b, cfg);
    res.report.objective =
        unbalanced
            ? uot_objective(res.plan, C, a, b, cfg.lambda, cfg.epsilon)
            : ot_objective(res.plan, C, cfg.epsilon);
    emit_plan(res.plan, args.plan_out);
  }
  emit_report(res.report, args.out);
  return res.report.converged ? 0 : 2;
}

std::vector<std::string> sorted_files(const std::string& dir,
                                      const std::string& ext) {
  if (!fs::is_directory(dir)) throw IoError(dir + " is not a directory");
  std::vector<std::string> paths;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ext)
      paths.push_back(e.path().string());
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw IoError("no " + ext + " files in " + dir);
  return paths;
}

int run_barycenter(const std::string& measures_dir,
                   const std::string& weights_path, double eps,
                   std::optional<double> spar, std::uint64_t seed,
                   double delta, std::size_t max_iter,
                   const std::string& out) {
  auto paths = sorted_files(measures_dir, ".csv");
  std::vector<DiscreteMeasure> measures;
  for (const auto& p : paths) measures.push_back(read_measure_csv(p, true));

  std::vector<double> w;
  if (weights_path.empty()) {
    w.assign(measures.size(), 1.0 / static_cast<double>(measures.size()));
  } else {
    std::ifstream f(weights_path);
    if (!f) throw IoError("cannot read " + weights_path);
    double x;
    while (f >> x) w.push_back(x);
  }

  // All measures must share a support; the kernel is built once from the
  // first and reused.
  const PointList& sup = measures[0].support;
  for (const auto& m : measures)
    if (m.support.coords != sup.coords || m.support.dim != sup.dim)
      throw DimensionMismatch("barycenter measures must share a support");

  CostMatrix C = sq_euclidean_cost(sup, sup);
  KernelMatrix K = kernel_from_cost(C, eps);
  std::vector<const KernelMatrix*> kernels(measures.size(), &K);
  std::vector<const DiscreteMeasure*> mptrs;
  for (const auto& m : measures) mptrs.push_back(&m);

  BarycenterConfig cfg;
  cfg.delta = delta;
  cfg.max_iter = max_iter;
  BarycenterResult res = spar ? spar_ibp(kernels, mptrs, w, cfg, *spar, seed)
                              : ibp(kernels, mptrs, w, cfg);

  std::ostream* os = &std::cout;
  std::ofstream f;
  if (!out.empty()) {
    f.open(out);
    if (!f) throw IoError("cannot write " + out);
    os = &f;
  }
  os->precision(17);
  *os << "atom,weight\n";
  for (std::size_t i = 0; i < res.weights.size(); ++i)
    *os << i << ',' << res.weights[i] << '\n';
  std::cerr << "iterations=" << res.iterations
            << " converged=" << res.converged
            << " masked_atoms=" << res.masked_atoms << "\n";
  return res.converged ? 0 : 2;
}

Scenario parse_scenario(const std::string& s) {
  if (s == "C1") return Scenario::C1;
  if (s == "C2") return Scenario::C2;
  if (s == "C3") return Scenario::C3;
  throw IoError("unknown scenario " + s);
}

double parse_sparsity(const std::string& s) {
  if (s == "R1") return 0.7;
  if (s == "R2") return 0.5;
  if (s == "R3") return 0.3;
  throw IoError("unknown sparsity regime " + s);
}

int run_bench_rmae(const std::string& scenario, std::size_t n, std::size_t d,
                   double eps, double lambda, const std::string& sparsity,
                   std::size_t reps, const std::vector<double>& multipliers,
                   std::uint64_t seed, bool scale_is_sd,
                   const std::string& out) {
  ScenarioSpec spec;
  spec.scenario = parse_scenario(scenario);
  spec.n = n;
  spec.d = d;
  spec.seed = seed;
  spec.scale_is_sd = scale_is_sd;
  if (!sparsity.empty()) spec.sparsity_target = parse_sparsity(sparsity);

  SolverConfig cfg;
  cfg.epsilon = eps;
  if (spec.sparsity_target) cfg.lambda = lambda;

  BudgetSchedule sched = s_schedule(n, multipliers);
  if (sched.clamped) std::cerr << "warning: budgets clamped below n^2\n";

  std::ofstream f(out);
  if (!f) throw IoError("cannot write " + out);
  f << "method,budget,mean_rmae,std_error,retried\n";
  f.precision(17);
  json meta;
  for (ApproxMethod m : {ApproxMethod::SparSink, ApproxMethod::RandSink}) {
    RmaeReport rep = rmae_experiment(spec, m, sched.budgets, reps, cfg);
    const char* name = m == ApproxMethod::SparSink ? "spar-sink" : "rand-sink";
    for (const auto& row : rep.rows)
      f << name << ',' << row.budget << ',' << row.mean << ','
        << row.std_error << ',' << row.retried << '\n';
    meta["exact_objective"] = rep.exact_objective;
    meta["scale_note"] = rep.scale_note;
  }
  meta["replications"] = reps;
  meta["seed"] = seed;
  std::ofstream mf(out + ".meta.json");
  mf << meta.dump(2) << "\n";
  return 0;
}

int run_bench_timing(const std::vector<std::size_t>& sizes, std::size_t d,
                     double eps, double s_mult, std::uint64_t seed,
                     const std::string& out) {
  SolverConfig cfg;
  cfg.epsilon = eps;
  auto rows = timing_sweep(sizes, d, cfg, s_mult, seed);

  std::ofstream f(out);
  if (!f) throw IoError("cannot write " + out);
  f << "method,n,setup_s,per_iter_s,iters_timed\n";
  f.precision(17);
  std::vector<double> dense_t, sparse_t;
  for (const auto& r : rows) {
    f << r.method << ',' << r.n << ',' << r.setup_s << ',' << r.per_iter_s
      << ',' << r.iters_timed << '\n';
    (r.method == "sinkhorn" ? dense_t : sparse_t).push_back(r.per_iter_s);
  }
  if (sizes.size() >= 2) {
    std::cerr << "dense slope=" << loglog_slope(sizes, dense_t)
              << " sparse slope=" << loglog_slope(sizes, sparse_t) << "\n";
  }
  return 0;
}

int run_cardio(const std::string& frames_dir, double eta, double lambda,
               double eps, std::size_t stride, double s_mult,
               std::uint64_t seed, std::size_t pool, bool exact,
               const std::string& out) {
  std::vector<FrameImage> frames;
  for (const auto& p : sorted_files(frames_dir, ".pgm")) {
    FrameImage img = read_pgm(p);
    frames.push_back(pool > 1 ? mean_pool(img, pool, pool) : std::move(img));
  }
  PairwiseWfrResult res = pairwise_wfr(frames, eta, lambda, eps, s_mult, seed,
                                       stride, exact);
  res.distances.save_csv(out);
  std::cerr << "frames=" << res.frame_indices.size()
            << " failed_pairs=" << res.failed_pairs << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spar-Sink entropic OT toolkit"};
  app.require_subcommand(1);

  PairArgs ot_args, uot_args;
  auto* ot_cmd = app.add_subcommand("ot", "balanced entropic OT");
  add_pair_options(ot_cmd, ot_args, false);
  auto* uot_cmd = app.add_subcommand("uot", "unbalanced entropic OT");
  add_pair_options(uot_cmd, uot_args, true);

  std::string bc_dir, bc_weights, bc_out;
  double bc_eps = 0.1, bc_delta = 1e-6;
  std::optional<double> bc_spar;
  std::uint64_t bc_seed = 1;
  std::size_t bc_max_iter = 1000;
  auto* bc_cmd = app.add_subcommand("barycenter", "entropic barycenter (IBP)");
  bc_cmd->add_option("--measures", bc_dir, "directory of measure csvs")
      ->required();
  bc_cmd->add_option("--weights", bc_weights, "weight file (default uniform)");
  bc_cmd->add_option("--eps", bc_eps, "entropic regularization");
  bc_cmd->add_option("--spar", bc_spar, "sketch budget per kernel");
  bc_cmd->add_option("--seed", bc_seed, "sketch seed");
  bc_cmd->add_option("--delta", bc_delta, "stopping threshold");
  bc_cmd->add_option("--max-iter", bc_max_iter, "iteration cap");
  bc_cmd->add_option("--out", bc_out, "barycenter csv (default stdout)");

  auto* bench_cmd = app.add_subcommand("bench", "benchmark sweeps");
  bench_cmd->require_subcommand(1);

  std::string rm_scenario = "C1", rm_sparsity, rm_out = "rmae.csv";
  std::size_t rm_n = 1000, rm_d = 5, rm_reps = 20;
  double rm_eps = 0.1, rm_lambda = 0.1;
  std::vector<double> rm_mults{2, 4, 8, 16};
  std::uint64_t rm_seed = 1;
  bool rm_scale_sd = false;
  auto* rmae_cmd = bench_cmd->add_subcommand("rmae", "RMAE vs budget");
  rmae_cmd->add_option("--scenario", rm_scenario, "C1 | C2 | C3");
  rmae_cmd->add_option("--n", rm_n, "atoms per measure");
  rmae_cmd->add_option("--d", rm_d, "support dimension");
  rmae_cmd->add_option("--eps", rm_eps, "entropic regularization");
  rmae_cmd->add_option("--lambda", rm_lambda, "KL weight (WFR instances)");
  rmae_cmd->add_option("--sparsity", rm_sparsity, "R1 | R2 | R3 (WFR cost)");
  rmae_cmd->add_option("--reps", rm_reps, "replications per budget");
  rmae_cmd->add_option("--budgets", rm_mults, "multiples of s0(n)")->delimiter(',');
  rmae_cmd->add_option("--seed", rm_seed, "master seed");
  rmae_cmd->add_flag("--scale-as-sd", rm_scale_sd,
                     "read the density scale parameter as sd, not variance");
  rmae_cmd->add_option("--out", rm_out, "report csv")->required();

  std::vector<std::size_t> tm_sizes{1000, 2000, 4000};
  std::size_t tm_d = 5;
  double tm_eps = 0.1, tm_smult = 8.0;
  std::uint64_t tm_seed = 1;
  std::string tm_out = "timing.csv";
  auto* timing_cmd = bench_cmd->add_subcommand("timing", "per-iteration cost");
  timing_cmd->add_option("--sizes", tm_sizes, "problem sizes")->delimiter(',');
  timing_cmd->add_option("--d", tm_d, "support dimension");
  timing_cmd->add_option("--eps", tm_eps, "entropic regularization");
  timing_cmd->add_option("--s-mult", tm_smult, "budget multiple of s0(n)");
  timing_cmd->add_option("--seed", tm_seed, "seed");
  timing_cmd->add_option("--out", tm_out, "report csv")->required();

  std::string cd_dir, cd_out = "dist.csv";
  double cd_eta = 15.0, cd_lambda = 1.0, cd_eps = 0.01, cd_smult = 8.0;
  std::size_t cd_stride = 3, cd_pool = 1;
  std::uint64_t cd_seed = 1;
  bool cd_exact = false;
  auto* cardio_cmd =
      app.add_subcommand("cardio", "pairwise WFR distances between frames");
  cardio_cmd->add_option("--frames", cd_dir, "directory of pgm frames")
      ->required();
  cardio_cmd->add_option("--eta", cd_eta, "WFR truncation radius (pixels)");
  cardio_cmd->add_option("--lambda", cd_lambda, "KL weight");
  cardio_cmd->add_option("--eps", cd_eps, "entropic regularization");
  cardio_cmd->add_option("--stride", cd_stride, "frame subsampling period");
  cardio_cmd->add_option("--s-mult", cd_smult, "budget multiple of s0(n)");
  cardio_cmd->add_option("--pool", cd_pool, "mean-pool factor before solving");
  cardio_cmd->add_option("--seed", cd_seed, "seed");
  cardio_cmd->add_flag("--exact", cd_exact, "dense solves (no sketching)");
  cardio_cmd->add_option("--out", cd_out, "distance matrix csv")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (ot_cmd->parsed()) return run_pair(ot_args, false);
    if (uot_cmd->parsed()) return run_pair(uot_args, true);
    if (bc_cmd->parsed())
      return run_barycenter(bc_dir, bc_weights, bc_eps, bc_spar, bc_seed,
                            bc_delta, bc_max_iter, bc_out);
    if (rmae_cmd->parsed())
      return run_bench_rmae(rm_scenario, rm_n, rm_d, rm_eps, rm_lambda,
                            rm_sparsity, rm_reps, rm_mults, rm_seed,
                            rm_scale_sd, rm_out);
    if (timing_cmd->parsed())
      return run_bench_timing(tm_sizes, tm_d, tm_eps, tm_smult, tm_seed,
                              tm_out);
    if (cardio_cmd->parsed())
      return run_cardio(cd_dir, cd_eta, cd_lambda, cd_eps, cd_stride, cd_smult,
                        cd_seed, cd_pool, cd_exact, cd_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
