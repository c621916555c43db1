#pragma once

#include <string>
#include <vector>

#include "spm/ascent.hpp"
#include "spm/subspace.hpp"
#include "spm/tensor.hpp"

namespace spm {

/// (M_K^T)^+ = U diag(1/sigma) V^T kept in factored form; D^n x D^{m-n}.
class PseudoInverseFactors {
 public:
  explicit PseudoInverseFactors(const TruncatedSvd& svd);

  /// (M_K^T)^+ r for r in R^{D^{m-n}}.
  Vector apply(const Vector& right) const;
  /// l^T (M_K^T)^+ r.
  double bilinear(const Vector& left, const Vector& right) const;
  Matrix dense() const;

 private:
  Matrix u_;
  Vector inv_sigma_;
  Matrix v_;
};

/// 1 / (vec(a^n)^T (M_K^T)^+ vec(a^{m-n})). Throws WeightUndefinedError when
/// the denominator magnitude is below 1e-14.
double weight_estimate(const Vector& a_hat, const PseudoInverseFactors& pinv, int order);
/// Same with an explicit D^n x D^{m-n} matrix (M_K^T)^+.
double weight_estimate(const Vector& a_hat, const Matrix& mk_pinv, int order);

struct DeflationOutcome {
  TensorSubspace subspace;
  /// v was orthogonal to the subspace; the input was returned unchanged.
  bool degenerate = false;
};

/// Orthonormal basis of {u in S : <u, v> = 0}.
DeflationOutcome deflate_subspace(const TensorSubspace& s, const Vector& v);

struct RecoveredComponent {
  double weight = 0.0;
  Vector direction;
  /// Accepted objective on the deflated subspace.
  double objective = 0.0;
  int restarts = 0;
  bool refinement_converged = true;
};

struct DecompositionResult {
  int dim = 0;
  int order = 0;
  Vector singular_values;
  std::vector<RecoveredComponent> components;
  std::vector<std::string> warnings;

  int rank() const { return static_cast<int>(components.size()); }
  ComponentEnsemble as_ensemble() const;
};

/// Rank detection, per-component ascent with restarts, refinement on the full
/// subspace, pseudo-inverse weights and subspace deflation. Needs m >= 3.
DecompositionResult decompose(const SymTensor& t_hat, const AscentConfig& cfg,
                              const RankRule& rule, CounterRng& rng);

struct MatchReport {
  /// permutation[i]: truth index matched to the i-th recovered component.
  std::vector<int> permutation;
  std::vector<int> signs;
  /// |s_i a_{pi(i)} - a_hat_i|_2
  std::vector<double> direction_errors;
  /// |s_i^m / lambda_{pi(i)} - 1 / lambda_hat_i|
  std::vector<double> weight_errors;
  /// |lambda_hat_i - s_i^m lambda_{pi(i)}| / |lambda_{pi(i)}|
  std::vector<double> relative_weight_errors;
  /// Some recovered component lost its best truth match to an earlier pick.
  bool collision = false;

  double max_direction_error() const;
  double max_relative_weight_error() const;
};

/// Greedy assignment by largest |<a_i, a_hat_j>| without reuse.
MatchReport match_components(const ComponentEnsemble& truth, const DecompositionResult& est);
MatchReport match_components(const ComponentEnsemble& truth, const ComponentEnsemble& est);

/// Error guarantees of the end-to-end analysis for given Delta_M and sigma_K(M).
struct EndToEndBounds {
  double delta_hat = 0.0;        ///< Delta_M / (sigma_K - Delta_M)
  double direction_bound = 0.0;  ///< sqrt(2 delta_hat / n)
  double weight_bound = 0.0;     ///< 2 sqrt(m/n)/sigma_K sqrt(delta_hat) + 4 delta_hat/sigma_K
};

/// Requires Delta_M < sigma_K / 2.
EndToEndBounds end_to_end_bounds(double delta_m, double sigma_k, int order);

}  // namespace spm
