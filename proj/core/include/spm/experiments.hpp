#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "spm/ascent.hpp"
#include "spm/random.hpp"
#include "spm/result_table.hpp"
#include "spm/tensor.hpp"

namespace spm {

/// Flat key = value experiment description. List-valued keys (d, k, m, n,
/// sigma) take comma-separated values and span a Cartesian grid.
///
///   d = 20, 40        dimensions
///   k = 100           ranks; when absent K = round(k_scale * D^k_power)
///   m = 4             tensor orders; ignored when n is given (m = 2n)
///   n = 2, 3          half orders (fig-grammian, fig-init)
///   sigma = 0, 1e-3   noise levels
///   tensors = 20      random tensors (or ensembles) per cell
///   inits = 5         initializations per tensor
///   trials = 25       runs per cell for fig-grammian
///   seed = 1
///   gamma, max_iters, accept_tau, max_restarts   ascent settings
///   methods = spm, pm
///   instance = random | two-angle   (two-angle: D = K = 2, a_2 at angle theta0)
///   theta0 = 0.785398...
///   control = true    fig-init: add the x0 = a_1 control row
///   threads = 0       0: SPM_THREADS or hardware concurrency
struct ExperimentSpec {
  std::string id;
  std::vector<int> d{20};
  std::vector<int> k{100};
  bool k_from_scale = false;
  double k_scale = 1.0;
  double k_power = 1.0;
  std::vector<int> m{4};
  std::vector<int> n;
  std::vector<double> sigma{0.0};
  int tensors = 20;
  int inits = 5;
  int trials = 25;
  std::uint64_t seed = 1;
  AscentConfig ascent;
  bool run_spm = true;
  bool run_pm = true;
  std::string instance = "random";
  double theta0 = 0.78539816339744831;
  bool control = true;
  int threads = 0;

  void validate() const;
  /// Expanded grid in (d, k, m|n, sigma) lexicographic order.
  std::vector<CellParams> cells() const;
};

/// Parses key = value lines; '#' starts a comment. Unknown keys and bad values
/// throw std::invalid_argument naming the line.
ExperimentSpec parse_spec(const std::string& text, const std::string& id = "");
ExperimentSpec load_spec(const std::filesystem::path& path, const std::string& id = "");

/// a_i ~ Unif(S^{D-1}); lambda_i = sqrt(D^m / K) * Unif[1/2, 2].
ComponentEnsemble gen_random_ensemble(int d, int k, int m, CounterRng& rng);

/// D = K = 2, a_1 = e_1, a_2 = (cos theta0, sin theta0), unit weights.
ComponentEnsemble two_angle_ensemble(int m, double theta0);

/// min over i and signs of |x - s a_i|.
double distance_to_components(const Matrix& components, const Vector& x);

/// Worker count: spec value, else SPM_THREADS, else hardware concurrency.
int resolve_threads(int requested);

/// Runs body(i) for i in [0, count) on `threads` workers. Results must be
/// written to per-index slots so the merge order does not depend on timing.
void parallel_for(int count, int threads, const std::function<void(int)>& body);

ResultTable run_fig_recovery(const ExperimentSpec& spec);
ResultTable run_fig_noise(const ExperimentSpec& spec);
ResultTable run_fig_deflation(const ExperimentSpec& spec);
ResultTable run_fig_grammian(const ExperimentSpec& spec);
ResultTable run_fig_init(const ExperimentSpec& spec);

/// Dispatch by experiment name (fig-recovery, fig-noise, ...).
ResultTable run_experiment(const std::string& name, const ExperimentSpec& spec);
const std::vector<std::string>& experiment_names();

/// Least-squares slope of log(y) against log(x) over positive pairs.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Writes <experiment>_raw.csv, <experiment>_summary.csv, <experiment>_fits.csv
/// when fits exist, and <experiment>.svg when plot is set. Returns written paths.
std::vector<std::filesystem::path> write_outputs(const ResultTable& table,
                                                 const std::filesystem::path& dir, bool plot);

}  // namespace spm
