#include "spm/cli.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "spm/decomposer.hpp"
#include "spm/experiments.hpp"
#include "spm/io.hpp"
#include "spm/landscape.hpp"

namespace spm {

namespace {

// Argument errors detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DecomposeArgs {
  std::string tensor;
  std::optional<int> k;
  std::optional<double> alpha;
  double tau = 0.5;
  double gamma = 0.0;
  std::uint64_t seed = 1;
  int max_iters = 5000;
  int max_restarts = 50;
  std::string output;
  std::string subspace;
};

struct ExperimentArgs {
  std::string name;
  std::string spec;
  std::string output;
  bool plot = false;
  int threads = 0;
};

struct CertifyArgs {
  std::string tensor;
  std::string points;
  std::string truth;
  std::optional<int> k;
  std::optional<double> constant;
  int rho_budget = 200;
  std::uint64_t seed = 1;
  std::string output;
};

struct GenArgs {
  int d = 0;
  int k = 0;
  int m = 0;
  double sigma = 0.0;
  std::uint64_t seed = 1;
  std::string output;
  std::string truth;
};

int run_decompose(const DecomposeArgs& a, std::ostream& out) {
  if (a.k && a.alpha) throw UsageError("--k and --alpha are mutually exclusive");
  const SymTensor t = read_tensor(a.tensor);
  AscentConfig cfg;
  cfg.accept_tau = a.tau;
  cfg.gamma = a.gamma;
  cfg.max_iters = a.max_iters;
  cfg.max_restarts = a.max_restarts;
  const RankRule rule = a.k ? RankRule::fixed(*a.k) : a.alpha ? RankRule::threshold(*a.alpha) : RankRule::automatic();
  CounterRng rng(a.seed);
  const DecompositionResult r = decompose(t, cfg, rule, rng);
  write_decomposition_csv(a.output, r);
  if (!a.subspace.empty()) write_subspace(a.subspace, extract_subspace(t, (t.order() + 1) / 2, RankRule::fixed(r.rank())));
  out << fmt::format("recovered {} components from D={} m={} tensor\n", r.rank(), t.dim(), t.order());
  for (const auto& w : r.warnings) out << "warning: " << w << '\n';
  return 0;
}

int run_experiment_cmd(const ExperimentArgs& a, std::ostream& out) {
  ExperimentSpec spec = load_spec(a.spec, a.name);
  if (a.threads > 0) spec.threads = a.threads;
  const ResultTable table = run_experiment(a.name, spec);
  for (const auto& p : write_outputs(table, a.output, a.plot)) out << "wrote " << p.string() << '\n';
  return 0;
}

int run_certify(const CertifyArgs& a, std::ostream& out) {
  const SymTensor t = read_tensor(a.tensor);
  const ComponentEnsemble truth = read_ensemble(a.truth);
  if (truth.dim() != t.dim()) throw UsageError("truth ensemble dimension does not match the tensor");
  const int n = (t.order() + 1) / 2;
  const TensorSubspace s = extract_subspace(t, n, RankRule::fixed(a.k.value_or(truth.rank())));
  CounterRng rng(a.seed);
  const FrameConstant rho2 = estimate_rho(truth.components, 2, a.rho_budget, rng);
  const FrameConstant rhon = estimate_rho(truth.components, n, a.rho_budget, rng);
  const ThresholdSet thr = thresholds(rho2.upper, rhon.upper, n, truth.dim(), truth.rank());
  CertifyOptions opts;
  opts.overcomplete_constant = a.constant;

  std::ofstream file;
  if (!a.output.empty()) {
    file.open(a.output);
    if (!file) throw IoError("cannot open " + a.output + " for writing");
  }
  std::ostream& dst = a.output.empty() ? out : file;
  dst << "point,objective,gradient_norm,max_hessian_eigenvalue,nearest_index,nearest_distance,"
         "distance_bound,delta_a,deterministic,overcomplete\n";
  int i = 0;
  for (const Vector& x : read_points(a.points, t.dim())) {
    const Vector xu = x / x.norm();
    const CriticalityReport r = certify_point(s, truth, xu, thr, opts);
    dst << i++ << ',' << format_double(r.objective) << ',' << format_double(r.gradient_norm) << ','
        << format_double(r.max_hessian_eigenvalue) << ',' << r.nearest_index << ','
        << format_double(r.nearest_distance) << ',' << format_double(r.distance_bound) << ','
        << format_double(r.delta_a) << ',' << to_string(r.deterministic) << ',' << to_string(r.overcomplete)
        << '\n';
  }
  if (file.is_open()) {
    file.close();
    if (!file) throw IoError("write failed for " + a.output);
  }
  return 0;
}

int run_gen(const GenArgs& a, std::ostream& out) {
  CounterRng rng(a.seed);
  CounterRng ens_rng = rng.fork(0);
  CounterRng noise_rng = rng.fork(1);
  const ComponentEnsemble e = gen_random_ensemble(a.d, a.k, a.m, ens_rng);
  const SymTensor t = add_gaussian_noise(cp_synthesize(e), a.sigma, noise_rng);
  std::filesystem::path truth = a.truth;
  if (truth.empty()) truth = std::filesystem::path(a.output).replace_extension(".spe");
  write_tensor(a.output, t);
  write_ensemble(truth, e);
  out << "wrote " << a.output << " and " << truth.string() << '\n';
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Symmetric tensor decomposition by the subspace power method", "spm"};
  app.require_subcommand(1);

  DecomposeArgs dec;
  auto* dcmd = app.add_subcommand("decompose", "Decompose a tensor file into rank-one terms");
  dcmd->add_option("tensor", dec.tensor, "Input tensor (.spt)")->required();
  auto* kopt = dcmd->add_option("--k", dec.k, "Fixed rank")->check(CLI::PositiveNumber);
  dcmd->add_option("--alpha", dec.alpha, "Singular value threshold")->check(CLI::PositiveNumber)->excludes(kopt);
  dcmd->add_option("--tau", dec.tau, "Acceptance threshold on the objective")->check(CLI::Range(0.0, 1.0));
  dcmd->add_option("--gamma", dec.gamma, "Step size (0 selects 1/(2n))")->check(CLI::NonNegativeNumber);
  dcmd->add_option("--seed", dec.seed, "Random seed");
  dcmd->add_option("--max-iters", dec.max_iters, "Ascent iteration limit")->check(CLI::PositiveNumber);
  dcmd->add_option("--max-restarts", dec.max_restarts, "Restarts per component")->check(CLI::NonNegativeNumber);
  dcmd->add_option("-o,--output", dec.output, "Output CSV")->required();
  dcmd->add_option("--subspace", dec.subspace, "Also dump the extracted subspace (.sps)");

  ExperimentArgs exp;
  auto* ecmd = app.add_subcommand("experiment", "Run an experiment grid and write CSV tables");
  ecmd->add_option("name", exp.name, "Experiment")->required()->check(CLI::IsMember(experiment_names()));
  ecmd->add_option("--spec", exp.spec, "Spec file (key = value lines)")->required();
  ecmd->add_option("-o,--output", exp.output, "Output directory")->required();
  ecmd->add_flag("--plot", exp.plot, "Also write an SVG plot");
  ecmd->add_option("--threads", exp.threads, "Worker threads (overrides spec and SPM_THREADS)")
      ->check(CLI::NonNegativeNumber);

  CertifyArgs cert;
  auto* ccmd = app.add_subcommand("certify", "Check candidate points against the landscape guarantees");
  ccmd->add_option("tensor", cert.tensor, "Input tensor (.spt)")->required();
  ccmd->add_option("points", cert.points, "Text file with one point per line")->required();
  ccmd->add_option("--truth", cert.truth, "True ensemble (.spe)")->required();
  ccmd->add_option("--k", cert.k, "Subspace rank (default: truth rank)")->check(CLI::PositiveNumber);
  ccmd->add_option("--constant", cert.constant, "Level-set constant for the overcomplete verdict");
  ccmd->add_option("--rho-budget", cert.rho_budget, "Random starts for frame constant estimates")
      ->check(CLI::NonNegativeNumber);
  ccmd->add_option("--seed", cert.seed, "Random seed");
  ccmd->add_option("-o,--output", cert.output, "Output CSV (default: stdout)");

  GenArgs gen;
  auto* gcmd = app.add_subcommand("gen", "Generate a random low-rank tensor and its truth file");
  gcmd->add_option("--d", gen.d, "Dimension")->required()->check(CLI::PositiveNumber);
  gcmd->add_option("--k", gen.k, "Rank")->required()->check(CLI::PositiveNumber);
  gcmd->add_option("--m", gen.m, "Order")->required()->check(CLI::Range(1, 8));
  gcmd->add_option("--sigma", gen.sigma, "Noise level")->check(CLI::NonNegativeNumber);
  gcmd->add_option("--seed", gen.seed, "Random seed");
  gcmd->add_option("-o,--output", gen.output, "Output tensor (.spt)")->required();
  gcmd->add_option("--truth", gen.truth, "Truth ensemble path (default: output with .spe)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*dcmd) return run_decompose(dec, out);
    if (*ecmd) return run_experiment_cmd(exp, out);
    if (*ccmd) return run_certify(cert, out);
    if (*gcmd) return run_gen(gen, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace spm
