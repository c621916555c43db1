#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spm/random.hpp"
#include "spm/subspace.hpp"
#include "spm/tensor.hpp"

namespace spm {

/// G_ij = <a_i, a_j>^n with its extreme eigenvalues.
struct Grammian {
  int order = 0;
  Matrix g;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;

  /// |G^{-1}|_2 = 1 / mu_K.
  double inverse_norm() const { return 1.0 / min_eigenvalue; }
};

Grammian grammian(const Matrix& components, int n);

/// ((A^T x)^{.n})^T G^{-1} (A^T x)^{.n}; throws RankDeficiencyError when
/// mu_K(G) <= 1e-10.
double objective_via_grammian(const Matrix& components, const Grammian& g, const Vector& x);

/// Expansion coefficients sigma = G^{-1} (A^T x)^{.n} of P(x^n) in the
/// rank-one tensors a_i^n.
Vector grammian_coefficients(const Matrix& components, const Grammian& g, const Vector& x);

/// <T, x^m>.
double pm_objective(const SymTensor& t, const Vector& x);

/// Closed form for ensembles with <a_i,a_j>^n = rho (i != j) and
/// sum_i <x,a_i>^n = mass on the sphere:
/// (1-rho)^{-1} |A^T x|_{2n}^{2n} - ((1-rho)^2 + K rho (1-rho))^{-1} rho mass^2.
double equiangular_objective(const Matrix& components, int n, double rho, double mass,
                             const Vector& x);

/// Interval estimate of rho_s = sup_x sum_i |<x,a_i>|^s - 1.
struct FrameConstant {
  int s = 0;
  double lower = 0.0;       ///< best value found by ascent, minus 1
  double upper = 0.0;       ///< mu_1(G_{floor(s/2)}) - 1
  double gershgorin = 0.0;  ///< max_i sum_j |<a_i,a_j>|^{floor(s/2)} - 1
  Vector argmax;            ///< maximizer attaining `lower`
  bool exact = false;       ///< D = 2 grid search; lower is the supremum
};

/// Lower estimate from `budget` random restarts plus every a_i as a start
/// (capped at 64); for D = 2 an exact 10^6-point angular grid with local
/// refinement.
FrameConstant estimate_rho(const Matrix& components, int s, int budget, CounterRng& rng);

struct ThresholdSet {
  int half_order = 0;
  double tau = 0.0;     ///< 1/6 - n^2 rho_2 - (n^2+n) rho_n
  double delta0 = 0.0;  ///< 2 tau / (2 + 4 tau + 3 n^2)
  double eps_k = 0.0;   ///< K ln^n(K) / D^n
  /// Deterministic verdicts need tau > 0.
  bool deterministic_enabled() const { return tau > 0.0; }
  /// (2 + 2 tau + 3 n^2) / (2 tau) * delta.
  double det_level(double delta) const;
  /// c * eps_K + 5 delta for a user supplied constant c.
  double overcomplete_level(double c, double delta) const { return c * eps_k + 5.0 * delta; }
};

ThresholdSet thresholds(double rho2, double rho_n, int n, int dim, int rank);

enum class Verdict {
  Pass,               ///< critical, in the level set, and near a component
  Fail,               ///< critical and in the level set but far from every component
  RejectedSpurious,   ///< critical but below the level set
  NotCritical,        ///< first- or second-order check failed
  Disabled,           ///< no usable threshold (tau <= 0 and no overcomplete constant)
};

std::string to_string(Verdict v);

struct CertifyOptions {
  /// On |P(x^n).x^{n-1} - F(x) x|.
  double first_order_tol = 1e-8;
  double hessian_tol = 1e-6;
  /// Slack added to the sqrt(2 Delta / n) distance bound.
  double distance_slack = 1e-6;
  /// Level constant for the overcomplete verdict; unset disables it.
  std::optional<double> overcomplete_constant;
};

struct CriticalityReport {
  double objective = 0.0;
  double gradient_norm = 0.0;
  double first_order_residual = 0.0;
  double max_hessian_eigenvalue = 0.0;
  int nearest_index = -1;
  int nearest_sign = 1;
  double nearest_distance = 0.0;
  double delta_a = 0.0;  ///< |P_A - P_Ahat| against the true component subspace
  double distance_bound = 0.0;
  bool first_order_ok = false;
  bool second_order_ok = false;
  bool within_delta0 = false;
  bool in_det_level_set = false;
  Verdict deterministic = Verdict::Disabled;
  std::optional<bool> in_overcomplete_level_set;
  Verdict overcomplete = Verdict::Disabled;
  Vector zeta;   ///< A^T x
  Vector sigma;  ///< G_n^{-1} zeta^{.n}; empty when G_n is singular
};

CriticalityReport certify_point(const TensorSubspace& s, const ComponentEnsemble& truth,
                                const Vector& x, const ThresholdSet& thr,
                                const CertifyOptions& opts = {});

/// span{sqrt(1 - delta^2) a^n - delta b^n} for orthonormal a, b.
TensorSubspace spurious_construction(const Vector& a, const Vector& b, double delta, int n);

struct RipResult {
  bool pass = false;
  double max_deviation = 0.0;  ///< max |A_p^T A_p - I|_2 over examined subsets
  bool exhaustive = false;     ///< false: 10^4 random subsets, not a certificate
  long long subsets_checked = 0;
  std::vector<int> worst_subset;
};

RipResult rip_check(const Matrix& components, int p, double delta, CounterRng& rng);

struct RipPartition {
  std::vector<int> indices;  ///< p largest <a_i, x>^2
  double in_set_mass = 0.0;
  double max_off_set = 0.0;  ///< max over the complement of <a_i, x>^2
  bool mass_ok = false;      ///< 1 - delta <= in_set_mass <= 1 + delta
  bool off_set_ok = false;   ///< max_off_set <= (1 + delta) / p
};

RipPartition rip_partition(const Matrix& components, const Vector& x, int p, double delta);

/// min_i |lambda_i| / sqrt(|G_n^{-1}|_2 |G_{m-n}^{-1}|_2), a lower bound on sigma_K(M).
double sigma_k_lower_bound(const Vector& weights, const Grammian& gn, const Grammian& gmn);

/// max_{i != j} |<a_i, a_j>|.
double mutual_coherence(const Matrix& components);

}  // namespace spm
