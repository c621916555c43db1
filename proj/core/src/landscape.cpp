#include "spm/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace spm {

namespace {

Matrix entrywise_power(const Matrix& m, int n) {
  Matrix out = Matrix::Ones(m.rows(), m.cols());
  for (int k = 0; k < n; ++k) out = out.cwiseProduct(m);
  return out;
}

Vector entrywise_power(const Vector& v, int n) {
  Vector out = Vector::Ones(v.size());
  for (int k = 0; k < n; ++k) out = out.cwiseProduct(v);
  return out;
}

double frame_sum(const Matrix& a, const Vector& x, int s) {
  return (a.transpose() * x).cwiseAbs().array().pow(static_cast<double>(s)).sum();
}

// Fixed-point ascent x <- grad g / |grad g| for the convex g(x) = sum |<x,a_i>|^s,
// which never decreases g on the sphere.
std::pair<double, Vector> frame_ascent(const Matrix& a, Vector x, int s) {
  double value = frame_sum(a, x, s);
  for (int it = 0; it < 2000; ++it) {
    const Vector zeta = a.transpose() * x;
    Vector w(zeta.size());
    for (Eigen::Index i = 0; i < zeta.size(); ++i)
      w(i) = std::pow(std::abs(zeta(i)), s - 1) * (zeta(i) >= 0.0 ? 1.0 : -1.0);
    Vector g = a * w;
    const double gn = g.norm();
    if (!(gn > 0.0)) break;
    g /= gn;
    const double next = frame_sum(a, g, s);
    const double moved = (g - x).norm();
    if (next < value) break;
    x = std::move(g);
    value = next;
    if (moved < 1e-13) break;
  }
  return {value, x};
}

double circle_frame_sum(const Matrix& a, double theta, int s) {
  Vector x(2);
  x << std::cos(theta), std::sin(theta);
  return frame_sum(a, x, s);
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

bool next_combination(std::vector<int>& idx, int n) {
  const int k = static_cast<int>(idx.size());
  int i = k - 1;
  while (i >= 0 && idx[i] == n - k + i) --i;
  if (i < 0) return false;
  ++idx[i];
  for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  return true;
}

double subset_deviation(const Matrix& gram, const std::vector<int>& idx) {
  const auto p = static_cast<Eigen::Index>(idx.size());
  Matrix sub(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) sub(i, j) = gram(idx[i], idx[j]);
  sub -= Matrix::Identity(p, p);
  if (p == 1) return std::abs(sub(0, 0));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sub, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

Verdict verdict_for(bool critical, bool in_level, double distance, double bound) {
  if (!critical) return Verdict::NotCritical;
  if (!in_level) return Verdict::RejectedSpurious;
  return distance <= bound ? Verdict::Pass : Verdict::Fail;
}

}  // namespace

Grammian grammian(const Matrix& components, int n) {
  if (n < 1) throw std::invalid_argument("grammian: order must be positive");
  Grammian g;
  g.order = n;
  g.g = entrywise_power(Matrix(components.transpose() * components), n);
  g.g = 0.5 * (g.g + g.g.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(g.g, Eigen::EigenvaluesOnly);
  g.min_eigenvalue = eig.eigenvalues().minCoeff();
  g.max_eigenvalue = eig.eigenvalues().maxCoeff();
  return g;
}

Vector grammian_coefficients(const Matrix& components, const Grammian& g, const Vector& x) {
  if (!(g.min_eigenvalue > 1e-10)) throw RankDeficiencyError("Grammian is numerically singular");
  if (g.g.rows() != components.cols()) throw std::invalid_argument("Grammian size mismatch");
  const Vector v = entrywise_power(Vector(components.transpose() * x), g.order);
  return g.g.llt().solve(v);
}

double objective_via_grammian(const Matrix& components, const Grammian& g, const Vector& x) {
  const Vector v = entrywise_power(Vector(components.transpose() * x), g.order);
  return v.dot(grammian_coefficients(components, g, x));
}

double pm_objective(const SymTensor& t, const Vector& x) {
  if (x.size() != t.dim()) throw std::invalid_argument("pm_objective: dimension mismatch");
  return t.data().dot(kron_power(x, t.order()));
}

double equiangular_objective(const Matrix& components, int n, double rho, double mass,
                             const Vector& x) {
  const double k = static_cast<double>(components.cols());
  const double norm2n = entrywise_power(Vector(components.transpose() * x), 2 * n).sum();
  return norm2n / (1.0 - rho) - rho * mass * mass / ((1.0 - rho) * (1.0 - rho) + k * rho * (1.0 - rho));
}

FrameConstant estimate_rho(const Matrix& components, int s, int budget, CounterRng& rng) {
  if (s < 2) throw std::invalid_argument("estimate_rho: s must be >= 2");
  const int dim = static_cast<int>(components.rows());
  const int k = static_cast<int>(components.cols());
  FrameConstant fc;
  fc.s = s;

  const Grammian half = grammian(components, s / 2);
  fc.upper = half.max_eigenvalue - 1.0;
  double row_max = 0.0;
  for (int i = 0; i < k; ++i) row_max = std::max(row_max, half.g.row(i).cwiseAbs().sum());
  fc.gershgorin = row_max - 1.0;

  if (dim == 2) {
    constexpr int kGrid = 1000000;
    double best_theta = 0.0;
    double best = -1.0;
    for (int j = 0; j < kGrid; ++j) {
      const double theta = std::numbers::pi * j / kGrid;
      const double v = circle_frame_sum(components, theta, s);
      if (v > best) {
        best = v;
        best_theta = theta;
      }
    }
    // Golden-section refinement inside the neighbouring grid cells.
    const double h = std::numbers::pi / kGrid;
    double lo = best_theta - h, hi = best_theta + h;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - phi * (hi - lo), d = lo + phi * (hi - lo);
    double fc_ = circle_frame_sum(components, c, s), fd = circle_frame_sum(components, d, s);
    for (int it = 0; it < 80; ++it) {
      if (fc_ > fd) {
        hi = d;
        d = c;
        fd = fc_;
        c = hi - phi * (hi - lo);
        fc_ = circle_frame_sum(components, c, s);
      } else {
        lo = c;
        c = d;
        fc_ = fd;
        d = lo + phi * (hi - lo);
        fd = circle_frame_sum(components, d, s);
      }
    }
    const double theta = 0.5 * (lo + hi);
    const double refined = circle_frame_sum(components, theta, s);
    if (refined > best) {
      best = refined;
      best_theta = theta;
    }
    fc.lower = best - 1.0;
    fc.argmax = Vector(2);
    fc.argmax << std::cos(best_theta), std::sin(best_theta);
    fc.exact = true;
    return fc;
  }

  double best = -1.0;
  Vector best_x;
  const int seeded = std::min(k, 64);
  for (int t = 0; t < seeded + budget; ++t) {
    Vector x0 = t < seeded ? Vector(components.col(t)) : random_unit_vector(dim, rng);
    auto [v, x] = frame_ascent(components, std::move(x0), s);
    if (v > best) {
      best = v;
      best_x = std::move(x);
    }
  }
  fc.lower = best - 1.0;
  fc.argmax = std::move(best_x);
  return fc;
}

double ThresholdSet::det_level(double delta) const {
  if (!deterministic_enabled()) return std::numeric_limits<double>::infinity();
  const double n2 = static_cast<double>(half_order) * half_order;
  return (2.0 + 2.0 * tau + 3.0 * n2) / (2.0 * tau) * delta;
}

ThresholdSet thresholds(double rho2, double rho_n, int n, int dim, int rank) {
  if (n < 1 || dim < 1 || rank < 1) throw std::invalid_argument("thresholds: bad sizes");
  ThresholdSet t;
  t.half_order = n;
  const double n2 = static_cast<double>(n) * n;
  t.tau = 1.0 / 6.0 - n2 * rho2 - (n2 + n) * rho_n;
  t.delta0 = 2.0 * t.tau / (2.0 + 4.0 * t.tau + 3.0 * n2);
  t.eps_k = rank * std::pow(std::log(static_cast<double>(rank)), n) / std::pow(dim, n);
  return t;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "pass";
    case Verdict::Fail:
      return "fail";
    case Verdict::RejectedSpurious:
      return "rejected-spurious";
    case Verdict::NotCritical:
      return "not-critical";
    case Verdict::Disabled:
      return "disabled";
  }
  return "unknown";
}

CriticalityReport certify_point(const TensorSubspace& s, const ComponentEnsemble& truth,
                                const Vector& x, const ThresholdSet& thr,
                                const CertifyOptions& opts) {
  if (truth.dim() != s.dim()) throw std::invalid_argument("certify_point: dimension mismatch");
  const int n = s.half_order();
  CriticalityReport r;
  r.objective = objective(s, x);
  const ObjectiveTerms terms = objective_terms(s, x);
  r.first_order_residual = (terms.pull - terms.value * x).norm();
  r.gradient_norm = 2.0 * n * r.first_order_residual;
  r.max_hessian_eigenvalue = max_tangent_hessian_eigenvalue(s, x);
  r.first_order_ok = r.first_order_residual <= opts.first_order_tol;
  r.second_order_ok = r.max_hessian_eigenvalue <= opts.hessian_tol;

  r.zeta = truth.components.transpose() * x;
  Eigen::Index best = 0;
  r.zeta.cwiseAbs().maxCoeff(&best);
  r.nearest_index = static_cast<int>(best);
  r.nearest_sign = r.zeta(best) >= 0.0 ? 1 : -1;
  r.nearest_distance = (x - r.nearest_sign * truth.components.col(best)).norm();

  r.delta_a = subspace_distance(s, component_subspace(truth.components, n));
  r.distance_bound = std::sqrt(2.0 * r.delta_a / n) + opts.distance_slack;

  const Grammian g = grammian(truth.components, n);
  if (g.min_eigenvalue > 1e-10) r.sigma = grammian_coefficients(truth.components, g, x);

  const bool critical = r.first_order_ok && r.second_order_ok;
  if (thr.deterministic_enabled()) {
    r.within_delta0 = r.delta_a < thr.delta0;
    r.in_det_level_set = r.objective >= thr.det_level(r.delta_a);
    r.deterministic = verdict_for(critical, r.in_det_level_set, r.nearest_distance, r.distance_bound);
  }
  if (opts.overcomplete_constant) {
    const bool in_level = r.objective >= thr.overcomplete_level(*opts.overcomplete_constant, r.delta_a);
    r.in_overcomplete_level_set = in_level;
    r.overcomplete = verdict_for(critical, in_level, r.nearest_distance, r.distance_bound);
  }
  return r;
}

TensorSubspace spurious_construction(const Vector& a, const Vector& b, double delta, int n) {
  if (a.size() != b.size()) throw std::invalid_argument("spurious_construction: dimension mismatch");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("spurious_construction: delta in (0,1)");
  if (n < 2) throw std::invalid_argument("spurious_construction: n must be >= 2");
  if (std::abs(a.norm() - 1.0) > 1e-12 || std::abs(b.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("spurious_construction: a and b must be unit vectors");
  if (std::abs(a.dot(b)) > 1e-12) throw std::invalid_argument("spurious_construction: a and b must be orthogonal");
  Vector s = std::sqrt(1.0 - delta * delta) * kron_power(a, n) - delta * kron_power(b, n);
  s /= s.norm();
  return TensorSubspace(static_cast<int>(a.size()), n, Matrix(s));
}

RipResult rip_check(const Matrix& components, int p, double delta, CounterRng& rng) {
  const int k = static_cast<int>(components.cols());
  if (p < 1 || p > k) throw std::invalid_argument("rip_check: need 1 <= p <= K");
  const Matrix gram = components.transpose() * components;
  RipResult r;
  auto consider = [&](const std::vector<int>& idx) {
    const double dev = subset_deviation(gram, idx);
    ++r.subsets_checked;
    if (dev > r.max_deviation || r.worst_subset.empty()) {
      r.max_deviation = std::max(r.max_deviation, dev);
      r.worst_subset = idx;
    }
  };
  if (binomial(k, p) <= 1e6) {
    r.exhaustive = true;
    std::vector<int> idx(p);
    std::iota(idx.begin(), idx.end(), 0);
    do {
      consider(idx);
    } while (next_combination(idx, k));
  } else {
    std::vector<int> pool(k);
    for (int t = 0; t < 10000; ++t) {
      std::iota(pool.begin(), pool.end(), 0);
      for (int i = 0; i < p; ++i) {
        const int j = i + static_cast<int>(rng() % static_cast<std::uint64_t>(k - i));
        std::swap(pool[i], pool[j]);
      }
      std::vector<int> idx(pool.begin(), pool.begin() + p);
      std::sort(idx.begin(), idx.end());
      consider(idx);
    }
  }
  r.pass = r.max_deviation <= delta;
  return r;
}

RipPartition rip_partition(const Matrix& components, const Vector& x, int p, double delta) {
  const int k = static_cast<int>(components.cols());
  if (p < 1 || p > k) throw std::invalid_argument("rip_partition: need 1 <= p <= K");
  const Vector sq = (components.transpose() * x).array().square();
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return sq(i) > sq(j); });
  RipPartition r;
  r.indices.assign(order.begin(), order.begin() + p);
  for (int i : r.indices) r.in_set_mass += sq(i);
  r.max_off_set = p < k ? sq(order[p]) : 0.0;
  r.mass_ok = r.in_set_mass >= 1.0 - delta && r.in_set_mass <= 1.0 + delta;
  r.off_set_ok = r.max_off_set <= (1.0 + delta) / p;
  return r;
}

double sigma_k_lower_bound(const Vector& weights, const Grammian& gn, const Grammian& gmn) {
  return weights.cwiseAbs().minCoeff() / std::sqrt(gn.inverse_norm() * gmn.inverse_norm());
}

double mutual_coherence(const Matrix& components) {
  Matrix g = (components.transpose() * components).cwiseAbs();
  g.diagonal().setZero();
  return g.size() ? g.maxCoeff() : 0.0;
}

}  // namespace spm
