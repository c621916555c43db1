#include "spm/decomposer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spm {

namespace {

constexpr double kMinWeightDenominator = 1e-14;

double weight_from_denominator(double denom) {
  if (!(std::abs(denom) >= kMinWeightDenominator))
    throw WeightUndefinedError("weight denominator is numerically zero");
  return 1.0 / denom;
}

int sign_power(int sign, int m) { return (m % 2 == 0) ? 1 : sign; }

}  // namespace

PseudoInverseFactors::PseudoInverseFactors(const TruncatedSvd& svd)
    : u_(svd.u), inv_sigma_(svd.sigma.cwiseInverse()), v_(svd.v) {}

Vector PseudoInverseFactors::apply(const Vector& right) const {
  if (right.size() != v_.rows()) throw std::invalid_argument("pseudo-inverse: size mismatch");
  return u_ * inv_sigma_.cwiseProduct(v_.transpose() * right);
}

double PseudoInverseFactors::bilinear(const Vector& left, const Vector& right) const {
  if (left.size() != u_.rows()) throw std::invalid_argument("pseudo-inverse: size mismatch");
  if (right.size() != v_.rows()) throw std::invalid_argument("pseudo-inverse: size mismatch");
  return (u_.transpose() * left).dot(inv_sigma_.cwiseProduct(v_.transpose() * right));
}

Matrix PseudoInverseFactors::dense() const { return u_ * inv_sigma_.asDiagonal() * v_.transpose(); }

double weight_estimate(const Vector& a_hat, const PseudoInverseFactors& pinv, int order) {
  const int n = (order + 1) / 2;
  return weight_from_denominator(pinv.bilinear(kron_power(a_hat, n), kron_power(a_hat, order - n)));
}

double weight_estimate(const Vector& a_hat, const Matrix& mk_pinv, int order) {
  const int n = (order + 1) / 2;
  const Vector left = kron_power(a_hat, n);
  const Vector right = kron_power(a_hat, order - n);
  if (mk_pinv.rows() != left.size() || mk_pinv.cols() != right.size())
    throw std::invalid_argument("weight_estimate: pseudo-inverse has the wrong shape");
  return weight_from_denominator(left.dot(mk_pinv * right));
}

DeflationOutcome deflate_subspace(const TensorSubspace& s, const Vector& v) {
  if (static_cast<std::size_t>(v.size()) != s.ambient_size())
    throw std::invalid_argument("deflate_subspace: vector size mismatch");
  const double vnorm = v.norm();
  if (!(vnorm > 0.0)) throw std::invalid_argument("deflate_subspace: zero direction");
  const Vector c = s.basis().transpose() * v;
  if (c.norm() <= 1e-12 * vnorm) return {s, true};
  // Orthonormal complement of c inside the coefficient space, mapped back
  // through the basis: spans exactly {u in S : <u, v> = 0}.
  const Matrix q = tangent_basis(c / c.norm());
  return {TensorSubspace(s.dim(), s.half_order(), s.basis() * q), false};
}

ComponentEnsemble DecompositionResult::as_ensemble() const {
  Vector w(rank());
  Matrix a(dim, rank());
  for (int i = 0; i < rank(); ++i) {
    w(i) = components[i].weight;
    a.col(i) = components[i].direction;
  }
  return ComponentEnsemble(order, std::move(w), std::move(a));
}

DecompositionResult decompose(const SymTensor& t_hat, const AscentConfig& cfg,
                              const RankRule& rule, CounterRng& rng) {
  cfg.validate();
  const int m = t_hat.order();
  if (m < 3) throw std::invalid_argument("decompose needs tensor order m >= 3");
  const int n = (m + 1) / 2;

  auto [full, svd] = extract_subspace_with_svd(t_hat, n, rule);
  const PseudoInverseFactors pinv(svd);
  const int rank = full.rank();

  DecompositionResult result;
  result.dim = t_hat.dim();
  result.order = m;
  result.singular_values = svd.sigma;
  result.components.reserve(rank);

  TensorSubspace current = full;
  for (int k = 0; k < rank; ++k) {
    CounterRng component_rng = rng.fork(static_cast<std::uint64_t>(k));
    const AscentTrace found = solve_component(current, cfg, component_rng);

    RecoveredComponent comp;
    comp.direction = found.final_x;
    comp.objective = found.final_objective;
    comp.restarts = found.restarts_used;
    // The first search already ran on the full subspace; it only needs
    // continuing when it hit max_iters.
    if (k > 0 || !found.converged) {
      const AscentTrace refined = run_spm_ascent(full, found.final_x, cfg);
      if (refined.converged) {
        comp.direction = refined.final_x;
      } else {
        comp.refinement_converged = false;
        result.warnings.push_back("component " + std::to_string(k + 1) +
                                  ": refinement did not converge; kept the deflated-subspace point");
      }
    }
    comp.weight = weight_estimate(comp.direction, pinv, m);

    if (k + 1 < rank) {
      const Vector v = pinv.apply(kron_power(comp.direction, m - n));
      DeflationOutcome next = deflate_subspace(current, v);
      if (next.degenerate)
        result.warnings.push_back("component " + std::to_string(k + 1) +
                                  ": deflation direction orthogonal to the working subspace");
      current = std::move(next.subspace);
    }
    result.components.push_back(std::move(comp));
  }
  return result;
}

double MatchReport::max_direction_error() const {
  return direction_errors.empty() ? 0.0
                                  : *std::max_element(direction_errors.begin(), direction_errors.end());
}

double MatchReport::max_relative_weight_error() const {
  return relative_weight_errors.empty()
             ? 0.0
             : *std::max_element(relative_weight_errors.begin(), relative_weight_errors.end());
}

MatchReport match_components(const ComponentEnsemble& truth, const ComponentEnsemble& est) {
  const int k = truth.rank();
  if (est.rank() != k) throw std::invalid_argument("match_components: rank mismatch");
  if (est.dim() != truth.dim()) throw std::invalid_argument("match_components: dimension mismatch");
  const int m = truth.order;

  const Matrix corr = truth.components.transpose() * est.components;  // truth x est
  const Matrix mag = corr.cwiseAbs();

  MatchReport r;
  r.permutation.assign(k, -1);
  r.signs.assign(k, 1);
  std::vector<bool> truth_used(k, false), est_used(k, false);
  for (int step = 0; step < k; ++step) {
    double best = -1.0;
    int bi = -1, bj = -1;
    for (int j = 0; j < k; ++j) {
      if (est_used[j]) continue;
      for (int i = 0; i < k; ++i) {
        if (truth_used[i]) continue;
        if (mag(i, j) > best) {
          best = mag(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    truth_used[bi] = est_used[bj] = true;
    r.permutation[bj] = bi;
    r.signs[bj] = corr(bi, bj) >= 0.0 ? 1 : -1;
  }
  for (int j = 0; j < k; ++j) {
    int argmax = 0;
    mag.col(j).maxCoeff(&argmax);
    if (argmax != r.permutation[j] && mag(argmax, j) > mag(r.permutation[j], j)) r.collision = true;
  }

  r.direction_errors.resize(k);
  r.weight_errors.resize(k);
  r.relative_weight_errors.resize(k);
  for (int j = 0; j < k; ++j) {
    const int i = r.permutation[j];
    const int s = r.signs[j];
    r.direction_errors[j] = (s * truth.components.col(i) - est.components.col(j)).norm();
    const double lam = truth.weights(i);
    const double lam_hat = est.weights(j);
    r.weight_errors[j] = std::abs(sign_power(s, m) / lam - 1.0 / lam_hat);
    r.relative_weight_errors[j] = std::abs(lam_hat - sign_power(s, m) * lam) / std::abs(lam);
  }
  return r;
}

MatchReport match_components(const ComponentEnsemble& truth, const DecompositionResult& est) {
  return match_components(truth, est.as_ensemble());
}

EndToEndBounds end_to_end_bounds(double delta_m, double sigma_k, int order) {
  if (!(delta_m >= 0.0) || !(sigma_k > 0.0)) throw std::invalid_argument("end_to_end_bounds: bad input");
  if (!(delta_m < 0.5 * sigma_k))
    throw BoundUndefinedError("end-to-end bounds need Delta_M < sigma_K(M) / 2");
  const int n = (order + 1) / 2;
  EndToEndBounds b;
  b.delta_hat = delta_m / (sigma_k - delta_m);
  b.direction_bound = std::sqrt(2.0 * b.delta_hat / n);
  b.weight_bound = 2.0 * std::sqrt(static_cast<double>(order) / n) / sigma_k * std::sqrt(b.delta_hat) +
                   4.0 * b.delta_hat / sigma_k;
  return b;
}

}  // namespace spm
