#pragma once

#include "spm/tensor.hpp"
#include "spm/types.hpp"

namespace spm {

/// Orthonormal basis of a K-dimensional subspace of order-n tensors over R^D,
/// stored as a D^n x K matrix of vectorized (row-major) tensors. The projector
/// U U^T is never formed.
class TensorSubspace {
 public:
  /// Checks U^T U = I_K to 1e-10.
  TensorSubspace(int dim, int half_order, Matrix basis, Vector singular_values = Vector());

  int dim() const { return dim_; }
  int half_order() const { return half_order_; }
  int rank() const { return static_cast<int>(basis_.cols()); }
  std::size_t ambient_size() const { return static_cast<std::size_t>(basis_.rows()); }

  const Matrix& basis() const { return basis_; }
  const Vector& singular_values() const { return singular_values_; }
  bool has_singular_values() const { return singular_values_.size() > 0; }

 private:
  int dim_;
  int half_order_;
  Matrix basis_;
  Vector singular_values_;
};

/// How many leading singular vectors to keep.
struct RankRule {
  enum class Kind { Fixed, Threshold, Automatic };

  static RankRule fixed(int k) { return {Kind::Fixed, k, 0.0}; }
  static RankRule threshold(double alpha) { return {Kind::Threshold, 0, alpha}; }
  /// alpha = max(rows, cols) * eps * sigma_1: numerical rank of an exact input.
  static RankRule automatic() { return {Kind::Automatic, 0, 0.0}; }

  Kind kind = Kind::Automatic;
  int k = 0;
  double alpha = 0.0;
};

/// Leading part of a thin SVD M ~ U diag(sigma) V^T.
struct TruncatedSvd {
  Matrix u;
  Vector sigma;
  Matrix v;
  Vector all_singular_values;
};

TruncatedSvd truncated_svd(const Eigen::Ref<const Matrix>& m, const RankRule& rule);

/// Leading left singular vectors of flatten(t, n) with the rank picked by the rule.
TensorSubspace extract_subspace(const SymTensor& t, int n, const RankRule& rule);

/// Same as extract_subspace but also returns the SVD factors.
std::pair<TensorSubspace, TruncatedSvd> extract_subspace_with_svd(const SymTensor& t, int n,
                                                                  const RankRule& rule);

/// Orthonormal basis for span{a_i^{(x)n}} (column-pivoted QR; rank-revealing
/// with relative tolerance 1e-12).
TensorSubspace component_subspace(const Matrix& components, int n);

/// w = U^T vec(t); |w|^2 = |P(t)|_F^2.
Vector project_coeffs(const TensorSubspace& s, const DenseTensor& t);
Vector project_coeffs(const TensorSubspace& s, const Vector& vec_t);
/// tensorize(U w).
DenseTensor reconstruct(const TensorSubspace& s, const Vector& coeffs);

/// Terms shared by the objective, its derivatives and the ascent step.
struct ObjectiveTerms {
  double value = 0.0;  ///< F(x) = |P(x^n)|^2
  Vector coeffs;       ///< U^T vec(x^n)
  Vector pull;         ///< P(x^n) . x^{n-1}
};

/// No unit-norm check; callers maintain |x| = 1.
ObjectiveTerms objective_terms(const TensorSubspace& s, const Vector& x);

/// F(x) = |P(x^{(x)n})|_F^2 for unit x.
double objective(const TensorSubspace& s, const Vector& x);

/// 2n P(x^n).x^{n-1} - 2n F(x) x.
Vector riemannian_gradient(const TensorSubspace& s, const Vector& x);

/// z^T Hess F(x) z for unit z orthogonal to unit x:
/// 2n^2 |P(x^{n-1} z)|^2 + 2n(n-1) <P(x^n), x^{n-2} z^2> - 2n F(x).
double riemannian_hessian_quadratic(const TensorSubspace& s, const Vector& x, const Vector& z);

/// Orthonormal basis of x^perp (D x (D-1)) from the Householder reflector
/// that maps x to a multiple of e_1.
Matrix tangent_basis(const Vector& x);

/// Riemannian Hessian in the tangent basis returned by tangent_basis(x).
Matrix tangent_hessian(const TensorSubspace& s, const Vector& x);

double max_tangent_hessian_eigenvalue(const TensorSubspace& s, const Vector& x);

/// |P_1 - P_2| in operator norm; equals the sine of the largest principal angle
/// when ranks agree.
double subspace_distance(const TensorSubspace& a, const TensorSubspace& b);
double projector_distance(const Matrix& u1, const Matrix& u2);

struct SubspaceErrorBound {
  double delta_m = 0.0;  ///< |M - M_hat|_2
  double sigma_k = 0.0;  ///< sigma_K(M)
  double bound = 0.0;    ///< delta_m / (sigma_k - delta_m)
};

/// Perturbation bound on the rank-K left singular subspace.
SubspaceErrorBound subspace_perturbation_bound(const Eigen::Ref<const Matrix>& m,
                                const Eigen::Ref<const Matrix>& m_hat, int k);

/// Bound on |W^+ - W_hat_r^+|_2 given Delta_W < sigma_r(W).
double pinv_stability_bound(double delta_w, double sigma_r);

double spectral_norm(const Eigen::Ref<const Matrix>& m);

}  // namespace spm
