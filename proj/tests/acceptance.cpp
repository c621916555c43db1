// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "spm/ascent.hpp"
#include "spm/decomposer.hpp"
#include "spm/experiments.hpp"
#include "spm/landscape.hpp"
#include "spm/subspace.hpp"
#include "spm/tensor.hpp"

using namespace spm;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// One SPM run of a recovery table: the metrics recorded for one (tensor, init).
struct RecoveryRun {
  int cell = 0;
  double objective = 0.0;
  bool converged = false;
  bool accepted = false;
  double error = std::nan("");
  double pm_error = std::nan("");
  bool pm_converged = false;
};

std::vector<RecoveryRun> recovery_runs(const ResultTable& t) {
  std::vector<RecoveryRun> runs;
  for (const RawRow& r : t.raw) {
    if (r.metric == "spm_objective" || (r.metric == "pm_error" && (runs.empty() || !std::isnan(runs.back().pm_error))))
      runs.push_back(RecoveryRun{r.cell});
    RecoveryRun& run = runs.back();
    if (r.metric == "spm_objective") run.objective = r.value;
    if (r.metric == "spm_converged") run.converged = r.value != 0.0;
    if (r.metric == "spm_accepted") run.accepted = r.value != 0.0;
    if (r.metric == "spm_error") run.error = r.value;
    if (r.metric == "pm_error") run.pm_error = r.value;
    if (r.metric == "pm_converged") run.pm_converged = r.value != 0.0;
  }
  return runs;
}

Vector geodesic(const Vector& x, const Vector& z, double t) { return std::cos(t) * x + std::sin(t) * z; }

Vector random_tangent(const Vector& x, CounterRng& rng) {
  Vector z = random_unit_vector(static_cast<int>(x.size()), rng);
  z -= z.dot(x) * x;
  return z / z.norm();
}

SymTensor random_sym_tensor(int dim, int order, CounterRng& rng) {
  DenseTensor t(std::vector<int>(order, dim));
  for (Eigen::Index i = 0; i < t.data().size(); ++i) t.data()(i) = rng.normal();
  return symmetrize(t);
}

// x^{n-s} (x) z^s as a dense order-n tensor.
DenseTensor mixed_power(const Vector& x, const Vector& z, int n, int s) {
  Vector v = Vector::Ones(1);
  for (int k = 0; k < n; ++k) {
    const Vector& f = k < n - s ? x : z;
    Vector next(v.size() * f.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) next.segment(i * f.size(), f.size()) = v(i) * f;
    v = next;
  }
  return DenseTensor(std::vector<int>(n, static_cast<int>(x.size())), v);
}

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

Matrix orthonormal_pair(int dim, CounterRng& rng) {
  return Matrix(random_unit_columns(dim, 2, rng)).householderQr().householderQ() * Matrix::Identity(dim, 2);
}

Outcome criterion1() {
  const ExperimentSpec spec = parse_spec("d = 20\nk = 100\nm = 4\ntensors = 20\ninits = 5\nmethods = spm\n");
  const auto runs = recovery_runs(run_fig_recovery(spec));
  int counted = 0;
  double worst_err = 0.0, worst_obj = 1.0;
  Outcome o;
  for (const RecoveryRun& r : runs) {
    if (!(r.converged && r.accepted)) continue;
    ++counted;
    worst_err = std::max(worst_err, r.error);
    worst_obj = std::min(worst_obj, r.objective);
  }
  o.pass = counted > 0 && worst_err <= 1e-6 && worst_obj >= 1 - 1e-8;
  o.detail = fmt::format("{}/{} runs converged and accepted, max error {:.3g}, min objective 1-{:.3g}", counted,
                         runs.size(), worst_err, 1 - worst_obj);
  return o;
}

Outcome criterion2() {
  const ExperimentSpec spec =
      parse_spec("d = 20\nk = 100\nm = 4\nsigma = 1e-4, 1e-3, 1e-2\ntensors = 20\ninits = 5\nmethods = spm\n");
  const ResultTable t = run_fig_noise(spec);
  Outcome o;
  const auto cells = spec.cells();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto v = t.values(static_cast<int>(c), "spm_error");
    const double mean = v.empty() ? std::nan("") : mean_of(v);
    const bool ok = !v.empty() && mean <= 10 * cells[c].sigma;
    o.pass = o.pass && ok;
    o.detail += fmt::format("sigma={:g}: mean error {:.3g}; ", cells[c].sigma, mean);
  }
  double slope = std::nan("");
  for (const FitRow& f : t.fits)
    if (f.name == "spm_error_loglog_slope") slope = f.value;
  o.pass = o.pass && slope >= 0.75 && slope <= 1.25;
  o.detail += fmt::format("slope {:.3f}", slope);
  return o;
}

Outcome criterion3() {
  const ComponentEnsemble e = two_angle_ensemble(4, std::numbers::pi / 4);
  const SymTensor t = cp_synthesize(e);
  const TensorSubspace s = extract_subspace(t, 2, RankRule::fixed(2));
  CounterRng rng(3);
  double spm_worst = 0.0, pm_best = std::numeric_limits<double>::infinity();
  bool all_converged = true;
  for (int i = 0; i < 50; ++i) {
    const Vector x0 = random_unit_vector(2, rng);
    const AscentTrace a = run_spm_ascent(s, x0, AscentConfig{});
    all_converged = all_converged && a.converged;
    spm_worst = std::max(spm_worst, distance_to_components(e.components, a.final_x));
    const AscentTrace p = run_pm_ascent(t, x0, AscentConfig{});
    if (p.converged) pm_best = std::min(pm_best, distance_to_components(e.components, p.final_x));
  }
  Outcome o;
  o.pass = all_converged && spm_worst <= 1e-8 && pm_best >= 0.05 && std::isfinite(pm_best);
  o.detail = fmt::format("50 inits: SPM max distance {:.3g}, PM min distance {:.3g}", spm_worst, pm_best);
  return o;
}

Outcome criterion4() {
  Outcome o;
  for (auto [d, k, m] : {std::tuple{10, 10, 4}, std::tuple{8, 20, 4}, std::tuple{6, 10, 6}}) {
    double dir = 0.0, weight = 0.0;
    for (int tensor = 0; tensor < 10; ++tensor) {
      CounterRng rng = CounterRng(4).fork(d * 1000 + k * 10 + m, tensor);
      CounterRng ens = rng.fork(0), solve = rng.fork(1);
      const ComponentEnsemble e = gen_random_ensemble(d, k, m, ens);
      try {
        const DecompositionResult r = decompose(cp_synthesize(e), AscentConfig{}, RankRule::fixed(k), solve);
        const MatchReport match = match_components(e, r);
        dir = std::max(dir, match.max_direction_error());
        weight = std::max(weight, match.max_relative_weight_error());
      } catch (const Error& err) {
        o.pass = false;
        o.detail += fmt::format("({},{},{}) tensor {} failed: {}; ", d, k, m, tensor, err.what());
      }
    }
    o.pass = o.pass && dir <= 1e-6 && weight <= 1e-6;
    o.detail += fmt::format("({},{},{}): max direction {:.3g}, max weight {:.3g}; ", d, k, m, dir, weight);
  }
  return o;
}

Outcome criterion5() {
  const ExperimentSpec spec = parse_spec("d = 20\nk = 60\nm = 4\nsigma = 1e-3\ntensors = 10\n");
  const ResultTable t = run_fig_deflation(spec);
  std::vector<double> first, last;
  int failed = 0;
  for (const RawRow& r : t.raw) {
    if (r.metric == "decompose_failed") failed += static_cast<int>(r.value);
    if (r.metric != "direction_error") continue;
    if (r.index < 10) first.push_back(r.value);
    if (r.index >= 50) last.push_back(r.value);
  }
  Outcome o;
  const double mf = mean_of(first), ml = mean_of(last);
  o.pass = failed == 0 && !first.empty() && !last.empty() && ml <= 2 * mf;
  o.detail = fmt::format("{} failed decompositions, first-10 mean {:.3g}, last-10 mean {:.3g}", failed, mf, ml);
  return o;
}

Outcome criterion6() {
  const ExperimentSpec spec = parse_spec("d = 20, 40, 80\nk_scale = 0.1\nk_power = 2\nn = 2\ntrials = 25\n");
  const ResultTable t = run_fig_grammian(spec);
  Outcome o;
  double prev = -1.0;
  const auto cells = spec.cells();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const double mean = mean_of(t.values(static_cast<int>(c), "mu_k"));
    o.pass = o.pass && mean >= 0.1 && mean >= prev;
    o.detail += fmt::format("D={} K={}: mean {:.4f}; ", cells[c].d, cells[c].k, mean);
    prev = mean;
  }
  return o;
}

Outcome criterion7() {
  Outcome o;
  CounterRng rng(7);
  double obj = 0.0, grad = 0.0, hess = -std::numeric_limits<double>::infinity(), dist = 0.0;
  for (int n : {2, 3}) {
    for (double delta : {0.1, 0.3, 0.5}) {
      const Matrix q = orthonormal_pair(5, rng);
      const Vector a = q.col(0), b = q.col(1);
      const TensorSubspace s = spurious_construction(a, b, delta, n);
      obj = std::max(obj, std::abs(objective(s, b) - delta * delta));
      grad = std::max(grad, riemannian_gradient(s, b).norm());
      hess = std::max(hess, max_tangent_hessian_eigenvalue(s, b) + 2.0 * n * delta * delta);
      dist = std::max(dist, std::abs(subspace_distance(s, TensorSubspace(5, n, kron_power(a, n))) - delta));
    }
  }
  o.pass = obj <= 1e-12 && grad <= 1e-12 && hess <= 1e-10 && dist <= 1e-10;
  o.detail = fmt::format("|F-delta^2| {:.2g}, |grad| {:.2g}, lambda_max+2n delta^2 {:.2g}, |dist-delta| {:.2g}", obj,
                         grad, hess, dist);
  return o;
}

Outcome criterion8() {
  constexpr int cases = 100;
  Outcome o;
  auto suite = [&](const std::string& name, const std::function<double(CounterRng&)>& margin) {
    // margin <= 0 means the case holds.
    CounterRng rng = CounterRng(8).fork(std::hash<std::string>{}(name) & 0xffff);
    double worst = -std::numeric_limits<double>::infinity();
    int bad = 0;
    for (int i = 0; i < cases; ++i) {
      CounterRng r = rng.fork(i);
      const double v = margin(r);
      worst = std::max(worst, v);
      if (!(v <= 0.0)) ++bad;
    }
    o.pass = o.pass && bad == 0;
    o.detail += fmt::format("{} {}/{} ok; ", name, cases - bad, cases);
  };

  suite("gradient-fd", [](CounterRng& rng) {
    const int m = 3 + static_cast<int>(rng() % 4);
    const TensorSubspace s = extract_subspace(random_sym_tensor(4, m, rng), (m + 1) / 2, RankRule::fixed(3));
    const Vector x = random_unit_vector(4, rng);
    const Vector z = random_tangent(x, rng);
    const double h = 1e-5;
    const double fd = (objective(s, geodesic(x, z, h)) - objective(s, geodesic(x, z, -h))) / (2 * h);
    return std::abs(riemannian_gradient(s, x).dot(z) - fd) - 1e-6;
  });
  suite("hessian-fd", [](CounterRng& rng) {
    const int m = 3 + static_cast<int>(rng() % 4);
    const TensorSubspace s = extract_subspace(random_sym_tensor(4, m, rng), (m + 1) / 2, RankRule::fixed(3));
    const Vector x = random_unit_vector(4, rng);
    const Vector z = random_tangent(x, rng);
    const double h = 1e-4;
    const double fd =
        (objective(s, geodesic(x, z, h)) - 2 * objective(s, x) + objective(s, geodesic(x, z, -h))) / (h * h);
    return std::abs(riemannian_hessian_quadratic(s, x, z) - fd) - 1e-4;
  });
  suite("grammian-objective", [](CounterRng& rng) {
    const int n = 2 + static_cast<int>(rng() % 2);
    const int d = 5 + static_cast<int>(rng() % 3);
    const int k = 2 + static_cast<int>(rng() % 10);
    const Matrix a = random_unit_columns(d, k, rng);
    const Vector x = random_unit_vector(d, rng);
    const double direct = objective(component_subspace(a, n), x);
    return std::abs(objective_via_grammian(a, grammian(a, n), x) - direct) - 1e-9;
  });
  suite("mixed-power-norm", [](CounterRng& rng) {
    const int n = 1 + static_cast<int>(rng() % 4);
    const int s = static_cast<int>(rng() % (n + 1));
    const Matrix q = orthonormal_pair(2 + static_cast<int>(rng() % 3), rng);
    const double norm = frobenius_norm(symmetrize(mixed_power(q.col(0), q.col(1), n, s)));
    return std::abs(norm - 1.0 / std::sqrt(binom(n, s))) - 1e-12;
  });
  suite("eigenvalue-sandwich", [](CounterRng& rng) {
    const int k = 2 + static_cast<int>(rng() % 3);
    const int s = 2 + static_cast<int>(rng() % 4);
    const Matrix a = random_unit_columns(2, k, rng);
    const FrameConstant fc = estimate_rho(a, s, 0, rng);
    if (!fc.exact) return 1.0;
    const Grammian g = grammian(a, s);
    const Grammian half = grammian(a, s / 2);
    return std::max({(1 - fc.lower) - g.min_eigenvalue, g.max_eigenvalue - (1 + fc.lower),
                     (1 + fc.lower) - half.max_eigenvalue}) -
           1e-9;
  });
  suite("subspace-perturbation", [](CounterRng& rng) {
    const int k = 2 + static_cast<int>(rng() % 3);
    const Matrix m = random_unit_columns(12, k, rng) * random_unit_columns(9, k, rng).transpose();
    const double sigma_k = truncated_svd(m, RankRule::fixed(k)).sigma(k - 1);
    Matrix e = random_unit_columns(12, 9, rng);
    e *= (0.02 + 0.9 * rng.uniform()) * sigma_k / spectral_norm(e);
    const SubspaceErrorBound b = subspace_perturbation_bound(m, m + e, k);
    const double actual =
        projector_distance(truncated_svd(m, RankRule::fixed(k)).u, truncated_svd(m + e, RankRule::fixed(k)).u);
    return actual - b.bound;
  });
  suite("pinv-stability", [](CounterRng& rng) {
    const int r = 2 + static_cast<int>(rng() % 3);
    const Matrix w = random_unit_columns(10, r, rng) * random_unit_columns(7, r, rng).transpose();
    const TruncatedSvd svd = truncated_svd(w, RankRule::fixed(r));
    Matrix e = random_unit_columns(10, 7, rng);
    e *= (0.02 + 0.45 * rng.uniform()) * svd.sigma(r - 1) / spectral_norm(e);
    const PseudoInverseFactors p(svd);
    const PseudoInverseFactors p_hat(truncated_svd(w + e, RankRule::fixed(r)));
    return spectral_norm(p.dense() - p_hat.dense()) - pinv_stability_bound(spectral_norm(e), svd.sigma(r - 1));
  });
  suite("critical-point-residual", [](CounterRng& rng) {
    const int m = 3 + static_cast<int>(rng() % 4);
    const TensorSubspace s = extract_subspace(random_sym_tensor(5, m, rng), (m + 1) / 2, RankRule::fixed(4));
    const AscentTrace tr = run_spm_ascent(s, random_unit_vector(5, rng), AscentConfig{});
    if (!tr.converged) return -1.0;
    const ObjectiveTerms terms = objective_terms(s, tr.final_x);
    return std::max((terms.pull - terms.value * tr.final_x).norm() - 1e-8,
                    max_tangent_hessian_eigenvalue(s, tr.final_x) - 1e-6);
  });
  return o;
}

Outcome criterion9() {
  Outcome o;
  for (auto [d, k, n] : {std::tuple{20, 100, 2}, std::tuple{30, 100, 2}, std::tuple{10, 100, 3}}) {
    const ExperimentSpec spec =
        parse_spec(fmt::format("d = {}\nk = {}\nn = {}\ntensors = 20\ninits = 100\ncontrol = false\n", d, k, n));
    const auto ratio = run_fig_init(spec).values(0, "ratio");
    const double mean = mean_of(ratio);
    o.pass = o.pass && ratio.size() == 2000 && mean >= 0.2 && mean <= 5.0;
    o.detail += fmt::format("({},{},{}): {} samples, mean F/(K/D^n) {:.3f}; ", d, k, n, ratio.size(), mean);
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::cout << fmt::format("{} criterion {}: {} [{:.1f}s]", o.pass ? "PASS" : "FAIL", i + 1, o.detail, secs)
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
