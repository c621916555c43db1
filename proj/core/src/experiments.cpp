#include "spm/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include <fmt/format.h>

#include "spm/decomposer.hpp"
#include "spm/landscape.hpp"
#include "spm/subspace.hpp"
#include "spm/svg_plot.hpp"

namespace spm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw std::invalid_argument(where + ": not a number: '" + s + "'");
  return v;
}

long long parse_int(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw std::invalid_argument(where + ": not an integer: '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s, const std::string& where) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument(where + ": not a boolean: '" + s + "'");
}

std::vector<int> parse_int_list(const std::string& v, const std::string& where) {
  std::vector<int> out;
  for (const auto& item : split_list(v)) out.push_back(static_cast<int>(parse_int(item, where)));
  if (out.empty()) throw std::invalid_argument(where + ": empty list");
  return out;
}

std::uint64_t double_bits(double v) { return std::bit_cast<std::uint64_t>(v); }

// Streams depend on the cell parameters rather than the cell position, so the
// same (D, K, m) in different specs sees the same ensembles and starts, and
// noise levels of one sweep share their noiseless tensors.
CounterRng tensor_stream(const ExperimentSpec& spec, const CellParams& p, int tensor) {
  return CounterRng(spec.seed)
      .fork(static_cast<std::uint64_t>(p.d), static_cast<std::uint64_t>(p.k))
      .fork(static_cast<std::uint64_t>(p.m) * 64 + static_cast<std::uint64_t>(p.n))
      .fork(static_cast<std::uint64_t>(tensor));
}

struct Job {
  int cell;
  int item;
};

std::vector<Job> jobs_for(std::size_t cells, int per_cell) {
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < cells; ++c)
    for (int t = 0; t < per_cell; ++t) jobs.push_back({static_cast<int>(c), t});
  return jobs;
}

// Runs each job into its own row buffer, then appends them in job order.
ResultTable run_jobs(const std::string& name, const ExperimentSpec& spec, int per_cell,
                     const std::function<void(const Job&, const CellParams&, ResultTable&)>& body) {
  const std::vector<CellParams> cells = spec.cells();
  const std::vector<Job> jobs = jobs_for(cells.size(), per_cell);
  std::vector<ResultTable> parts(jobs.size());
  parallel_for(static_cast<int>(jobs.size()), resolve_threads(spec.threads), [&](int i) {
    body(jobs[i], cells[jobs[i].cell], parts[i]);
  });
  ResultTable table;
  table.experiment = name;
  for (auto& part : parts)
    for (auto& row : part.raw) table.raw.push_back(std::move(row));
  return table;
}

ComponentEnsemble make_ensemble(const ExperimentSpec& spec, const CellParams& p, CounterRng& rng) {
  if (spec.instance == "two-angle") return two_angle_ensemble(p.m, spec.theta0);
  return gen_random_ensemble(p.d, p.k, p.m, rng);
}

void recovery_body(const ExperimentSpec& spec, const Job& job, const CellParams& p, ResultTable& out) {
  CounterRng stream = tensor_stream(spec, p, job.item);
  CounterRng ens_rng = stream.fork(0);
  CounterRng noise_rng = stream.fork(1, double_bits(p.sigma));
  CounterRng init_rng = stream.fork(2);
  const ComponentEnsemble truth = make_ensemble(spec, p, ens_rng);
  const SymTensor t = add_gaussian_noise(cp_synthesize(truth), p.sigma, noise_rng);

  std::optional<TensorSubspace> s;
  if (spec.run_spm) s = extract_subspace(t, p.n, RankRule::fixed(truth.rank()));

  for (int i = 0; i < spec.inits; ++i) {
    const Vector x0 = random_unit_vector(truth.dim(), init_rng);
    auto add = [&](const std::string& metric, double v) { out.add(job.cell, p, job.item, metric, -1, v); };
    if (spec.run_spm) {
      const AscentTrace tr = run_spm_ascent(*s, x0, spec.ascent);
      const bool accepted = tr.final_objective >= spec.ascent.accept_tau;
      add("spm_objective", tr.final_objective);
      add("spm_converged", tr.converged ? 1.0 : 0.0);
      add("spm_accepted", accepted ? 1.0 : 0.0);
      add("spm_iterations", tr.iterations);
      if (accepted) {
        add("spm_error", distance_to_components(truth.components, tr.final_x));
        const ObjectiveTerms terms = objective_terms(*s, tr.final_x);
        add("spm_first_order_residual", (terms.pull - terms.value * tr.final_x).norm());
        add("spm_max_hessian_eigenvalue", max_tangent_hessian_eigenvalue(*s, tr.final_x));
      }
    }
    if (spec.run_pm) {
      const AscentTrace tr = run_pm_ascent(t, x0, spec.ascent);
      add("pm_error", distance_to_components(truth.components, tr.final_x));
      add("pm_objective", tr.final_objective);
      add("pm_converged", tr.converged ? 1.0 : 0.0);
    }
  }
}

std::vector<PlotSeries> series_by(const std::vector<SummaryRow>& rows, const std::string& metric,
                                  const std::function<double(const SummaryRow&)>& x,
                                  const std::function<std::string(const SummaryRow&)>& label) {
  std::vector<PlotSeries> out;
  std::map<std::string, std::size_t> at;
  for (const SummaryRow& r : rows) {
    if (r.metric != metric) continue;
    const std::string l = label(r);
    auto it = at.find(l);
    if (it == at.end()) {
      it = at.emplace(l, out.size()).first;
      out.push_back(PlotSeries{l, {}, {}, {}});
    }
    out[it->second].x.push_back(x(r));
    out[it->second].y.push_back(r.mean);
    out[it->second].err.push_back(r.std);
  }
  return out;
}

void plot_table(const ResultTable& table, const std::filesystem::path& path) {
  const auto rows = table.summarize();
  std::vector<PlotSeries> series;
  PlotOptions opts;
  opts.title = table.experiment;
  auto dkm = [](const SummaryRow& r) { return fmt::format("D={} m={}", r.params.d, r.params.m); };
  if (table.experiment == "fig-recovery" || table.experiment == "fig-noise") {
    const bool noise = table.experiment == "fig-noise";
    auto x = [noise](const SummaryRow& r) { return noise ? r.params.sigma : r.params.k; };
    for (const char* metric : {"spm_error", "pm_error"}) {
      auto s = series_by(rows, metric, x, [&](const SummaryRow& r) {
        return std::string(metric).substr(0, metric[0] == 's' ? 3 : 2) + " " + dkm(r) +
               (noise ? fmt::format(" K={}", r.params.k) : "");
      });
      series.insert(series.end(), s.begin(), s.end());
    }
    opts.x_label = noise ? "sigma" : "K";
    opts.y_label = "distance to nearest component";
    opts.log_x = noise;
    opts.log_y = true;
  } else if (table.experiment == "fig-deflation") {
    series = series_by(rows, "direction_error", [](const SummaryRow& r) { return r.index + 1.0; },
                       [&](const SummaryRow& r) {
                         return fmt::format("{} K={} sigma={:g}", dkm(r), r.params.k, r.params.sigma);
                       });
    opts.x_label = "recovery index";
    opts.y_label = "direction error";
    opts.log_y = true;
  } else if (table.experiment == "fig-grammian") {
    series = series_by(rows, "mu_k", [](const SummaryRow& r) { return r.params.d; },
                       [](const SummaryRow& r) { return fmt::format("n={}", r.params.n); });
    opts.x_label = "D";
    opts.y_label = "smallest Grammian eigenvalue";
  } else {
    series = series_by(rows, "objective",
                       [](const SummaryRow& r) { return r.params.k / std::pow(r.params.d, r.params.n); },
                       [](const SummaryRow& r) { return fmt::format("n={} D={}", r.params.n, r.params.d); });
    opts.x_label = "K / D^n";
    opts.y_label = "mean objective at random x";
    opts.log_x = opts.log_y = true;
  }
  write_svg(path, series, opts);
}

}  // namespace

void ExperimentSpec::validate() const {
  if (tensors < 1 || inits < 1 || trials < 1)
    throw std::invalid_argument("tensors, inits and trials must be >= 1");
  for (int v : d)
    if (v < 1) throw std::invalid_argument("d must be >= 1");
  if (!k_from_scale)
    for (int v : k)
      if (v < 1) throw std::invalid_argument("k must be >= 1");
  if (k_from_scale && !(k_scale > 0.0)) throw std::invalid_argument("k_scale must be positive");
  for (int v : m)
    if (v < 2 || v > 8) throw std::invalid_argument("m must lie in [2, 8]");
  for (int v : n)
    if (v < 1 || v > 4) throw std::invalid_argument("n must lie in [1, 4]");
  for (double s : sigma)
    if (!(s >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  if (!run_spm && !run_pm) throw std::invalid_argument("methods must name spm and/or pm");
  if (instance != "random" && instance != "two-angle")
    throw std::invalid_argument("instance must be random or two-angle");
  if (threads < 0) throw std::invalid_argument("threads must be >= 0");
  ascent.validate();
}

std::vector<CellParams> ExperimentSpec::cells() const {
  std::vector<CellParams> out;
  const bool two_angle = instance == "two-angle";
  const std::vector<int> dims = two_angle ? std::vector<int>{2} : d;
  for (int dv : dims) {
    std::vector<int> ks;
    if (two_angle)
      ks = {2};
    else if (k_from_scale)
      ks = {std::max(1, static_cast<int>(std::lround(k_scale * std::pow(dv, k_power))))};
    else
      ks = k;
    for (int kv : ks) {
      std::vector<std::pair<int, int>> orders;
      if (!n.empty())
        for (int nv : n) orders.emplace_back(2 * nv, nv);
      else
        for (int mv : m) orders.emplace_back(mv, (mv + 1) / 2);
      for (auto [mv, nv] : orders)
        for (double s : sigma) out.push_back(CellParams{dv, kv, mv, nv, s});
    }
  }
  return out;
}

ExperimentSpec parse_spec(const std::string& text, const std::string& id) {
  ExperimentSpec spec;
  spec.id = id;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = fmt::format("spec line {}", lineno);
    if (eq == std::string::npos) throw std::invalid_argument(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "d") {
      spec.d = parse_int_list(value, where);
    } else if (key == "k") {
      spec.k = parse_int_list(value, where);
    } else if (key == "k_scale") {
      spec.k_scale = parse_double(value, where);
      spec.k_from_scale = true;
    } else if (key == "k_power") {
      spec.k_power = parse_double(value, where);
      spec.k_from_scale = true;
    } else if (key == "m") {
      spec.m = parse_int_list(value, where);
    } else if (key == "n") {
      spec.n = parse_int_list(value, where);
    } else if (key == "sigma") {
      spec.sigma.clear();
      for (const auto& item : split_list(value)) spec.sigma.push_back(parse_double(item, where));
      if (spec.sigma.empty()) throw std::invalid_argument(where + ": empty list");
    } else if (key == "tensors") {
      spec.tensors = static_cast<int>(parse_int(value, where));
    } else if (key == "inits") {
      spec.inits = static_cast<int>(parse_int(value, where));
    } else if (key == "trials") {
      spec.trials = static_cast<int>(parse_int(value, where));
    } else if (key == "seed") {
      spec.seed = static_cast<std::uint64_t>(parse_int(value, where));
    } else if (key == "gamma") {
      spec.ascent.gamma = parse_double(value, where);
    } else if (key == "max_iters") {
      spec.ascent.max_iters = static_cast<int>(parse_int(value, where));
    } else if (key == "accept_tau") {
      spec.ascent.accept_tau = parse_double(value, where);
    } else if (key == "max_restarts") {
      spec.ascent.max_restarts = static_cast<int>(parse_int(value, where));
    } else if (key == "x_tol") {
      spec.ascent.x_tol = parse_double(value, where);
    } else if (key == "grad_tol") {
      spec.ascent.grad_tol = parse_double(value, where);
    } else if (key == "backtracking") {
      spec.ascent.backtracking = parse_bool(value, where);
    } else if (key == "methods") {
      spec.run_spm = spec.run_pm = false;
      for (const auto& item : split_list(value)) {
        if (item == "spm")
          spec.run_spm = true;
        else if (item == "pm")
          spec.run_pm = true;
        else
          throw std::invalid_argument(where + ": unknown method '" + item + "'");
      }
    } else if (key == "instance") {
      spec.instance = value;
    } else if (key == "theta0") {
      spec.theta0 = parse_double(value, where);
    } else if (key == "control") {
      spec.control = parse_bool(value, where);
    } else if (key == "threads") {
      spec.threads = static_cast<int>(parse_int(value, where));
    } else {
      throw std::invalid_argument(where + ": unknown key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path, const std::string& id) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open spec file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_spec(buf.str(), id);
}

ComponentEnsemble gen_random_ensemble(int d, int k, int m, CounterRng& rng) {
  if (d < 1 || k < 1 || m < 1) throw std::invalid_argument("gen_random_ensemble: sizes must be >= 1");
  Matrix a = random_unit_columns(d, k, rng);
  const double scale = std::sqrt(std::pow(static_cast<double>(d), m) / k);
  Vector w(k);
  for (int i = 0; i < k; ++i) w(i) = scale * (0.5 + 1.5 * rng.uniform());
  return ComponentEnsemble(m, std::move(w), std::move(a));
}

ComponentEnsemble two_angle_ensemble(int m, double theta0) {
  Matrix a(2, 2);
  a << 1.0, std::cos(theta0), 0.0, std::sin(theta0);
  return ComponentEnsemble(m, Vector::Ones(2), std::move(a));
}

double distance_to_components(const Matrix& components, const Vector& x) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < components.cols(); ++i) {
    best = std::min(best, (x - components.col(i)).norm());
    best = std::min(best, (x + components.col(i)).norm());
  }
  return best;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SPM_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  if (count <= 0) return;
  threads = std::clamp(threads, 1, count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i; (i = next.fetch_add(1)) < count;) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  // Lowest failing index wins so the reported error is schedule independent.
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

ResultTable run_fig_recovery(const ExperimentSpec& spec) {
  spec.validate();
  return run_jobs("fig-recovery", spec, spec.tensors, [&](const Job& j, const CellParams& p, ResultTable& out) {
    recovery_body(spec, j, p, out);
  });
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("loglog_slope: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  if (lx.size() < 2) return std::nan("");
  const double mx = mean_of(lx), my = mean_of(ly);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : std::nan("");
}

ResultTable run_fig_noise(const ExperimentSpec& spec) {
  spec.validate();
  ResultTable table = run_jobs("fig-noise", spec, spec.tensors, [&](const Job& j, const CellParams& p, ResultTable& out) {
    recovery_body(spec, j, p, out);
  });
  // One slope per (D, K, m) over its positive noise levels.
  const std::vector<CellParams> cells = spec.cells();
  std::map<std::tuple<int, int, int>, std::vector<int>> groups;
  std::vector<std::tuple<int, int, int>> order;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto key = std::make_tuple(cells[c].d, cells[c].k, cells[c].m);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(static_cast<int>(c));
  }
  for (const auto& key : order) {
    for (const char* method : {"spm", "pm"}) {
      std::vector<double> xs, ys;
      for (int c : groups[key]) {
        const auto v = table.values(c, std::string(method) + "_error");
        if (cells[c].sigma > 0.0 && !v.empty()) {
          xs.push_back(cells[c].sigma);
          ys.push_back(mean_of(v));
        }
      }
      if (xs.size() >= 2)
        table.fits.push_back(FitRow{std::string(method) + "_error_loglog_slope", cells[groups[key][0]],
                                    loglog_slope(xs, ys)});
    }
  }
  return table;
}

ResultTable run_fig_deflation(const ExperimentSpec& spec) {
  spec.validate();
  return run_jobs("fig-deflation", spec, spec.tensors, [&](const Job& job, const CellParams& p, ResultTable& out) {
    if (p.m < 3) throw std::invalid_argument("fig-deflation needs m >= 3");
    CounterRng stream = tensor_stream(spec, p, job.item);
    CounterRng ens_rng = stream.fork(0);
    CounterRng noise_rng = stream.fork(1, double_bits(p.sigma));
    CounterRng solve_rng = stream.fork(3);
    const ComponentEnsemble truth = make_ensemble(spec, p, ens_rng);
    const SymTensor t = add_gaussian_noise(cp_synthesize(truth), p.sigma, noise_rng);
    auto add = [&](const std::string& metric, int index, double v) {
      out.add(job.cell, p, job.item, metric, index, v);
    };
    DecompositionResult res;
    try {
      res = decompose(t, spec.ascent, RankRule::fixed(truth.rank()), solve_rng);
    } catch (const Error&) {
      add("decompose_failed", -1, 1.0);
      return;
    }
    add("decompose_failed", -1, 0.0);
    add("warnings", -1, static_cast<double>(res.warnings.size()));
    const MatchReport match = match_components(truth, res);
    const TensorSubspace full = extract_subspace(t, p.n, RankRule::fixed(truth.rank()));
    for (int k = 0; k < res.rank(); ++k) {
      const Vector& x = res.components[k].direction;
      add("direction_error", k, match.direction_errors[k]);
      add("relative_weight_error", k, match.relative_weight_errors[k]);
      const ObjectiveTerms terms = objective_terms(full, x);
      add("first_order_residual", k, (terms.pull - terms.value * x).norm());
      add("max_hessian_eigenvalue", k, max_tangent_hessian_eigenvalue(full, x));
    }
  });
}

ResultTable run_fig_grammian(const ExperimentSpec& spec) {
  spec.validate();
  return run_jobs("fig-grammian", spec, spec.trials, [&](const Job& job, const CellParams& p, ResultTable& out) {
    CounterRng rng = tensor_stream(spec, p, job.item);
    const Matrix a = random_unit_columns(p.d, p.k, rng);
    out.add(job.cell, p, job.item, "mu_k", -1, grammian(a, p.n).min_eigenvalue);
  });
}

ResultTable run_fig_init(const ExperimentSpec& spec) {
  spec.validate();
  return run_jobs("fig-init", spec, spec.tensors, [&](const Job& job, const CellParams& p, ResultTable& out) {
    CounterRng stream = tensor_stream(spec, p, job.item);
    CounterRng ens_rng = stream.fork(0);
    CounterRng init_rng = stream.fork(2);
    const Matrix a = random_unit_columns(p.d, p.k, ens_rng);
    const TensorSubspace s = component_subspace(a, p.n);
    const double scale = p.k / std::pow(static_cast<double>(p.d), p.n);
    for (int i = 0; i < spec.inits; ++i) {
      const double f = objective(s, random_unit_vector(p.d, init_rng));
      out.add(job.cell, p, job.item, "objective", -1, f);
      out.add(job.cell, p, job.item, "ratio", -1, f / scale);
    }
    if (spec.control) out.add(job.cell, p, job.item, "control_objective", -1, objective(s, a.col(0)));
  });
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"fig-recovery", "fig-noise", "fig-deflation", "fig-grammian",
                                              "fig-init"};
  return names;
}

ResultTable run_experiment(const std::string& name, const ExperimentSpec& spec) {
  if (name == "fig-recovery") return run_fig_recovery(spec);
  if (name == "fig-noise") return run_fig_noise(spec);
  if (name == "fig-deflation") return run_fig_deflation(spec);
  if (name == "fig-grammian") return run_fig_grammian(spec);
  if (name == "fig-init") return run_fig_init(spec);
  throw std::invalid_argument("unknown experiment '" + name + "'");
}

std::vector<std::filesystem::path> write_outputs(const ResultTable& table, const std::filesystem::path& dir,
                                                 bool plot) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  written.push_back(dir / (table.experiment + "_raw.csv"));
  table.write_raw_csv(written.back());
  written.push_back(dir / (table.experiment + "_summary.csv"));
  table.write_summary_csv(written.back());
  if (!table.fits.empty()) {
    written.push_back(dir / (table.experiment + "_fits.csv"));
    table.write_fits_csv(written.back());
  }
  if (plot) {
    written.push_back(dir / (table.experiment + ".svg"));
    plot_table(table, written.back());
  }
  return written;
}

}  // namespace spm
