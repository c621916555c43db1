#include "spm/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace spm {

namespace {

constexpr double kUnitTol = 1e-10;

void check_unit(const Vector& x, int dim, const char* what) {
  if (x.size() != dim) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
  if (std::abs(x.norm() - 1.0) > kUnitTol)
    throw std::invalid_argument(std::string(what) + ": vector must have unit norm");
}

// Column i of the result is U_i . x^{n-1}, the contraction of the i-th basis
// tensor against x on its trailing n-1 slots.
Matrix contract_basis(const TensorSubspace& s, const Vector& xp) {
  const Eigen::Index d = s.dim();
  const Eigen::Index k = s.rank();
  const Eigen::Index tail = xp.size();
  // Column-major U viewed as tail x (d*k): column (i*d + r) holds rows
  // r*tail .. (r+1)*tail-1 of basis column i.
  Eigen::Map<const Matrix> blocks(s.basis().data(), tail, d * k);
  Vector flat = blocks.transpose() * xp;
  return Eigen::Map<const Matrix>(flat.data(), d, k);
}

// Symmetric D x D matrix P(x^n) . x^{n-2} (n >= 2).
Matrix contract_projection(const TensorSubspace& s, const Vector& projected, const Vector& x) {
  const Eigen::Index d = s.dim();
  const Vector xp = kron_power(x, s.half_order() - 2);
  Eigen::Map<const Matrix> blocks(projected.data(), xp.size(), d * d);
  Vector flat = blocks.transpose() * xp;
  // flat is row-major D x D; symmetric up to rounding.
  Eigen::Map<const RowMajorMatrix> c(flat.data(), d, d);
  return 0.5 * (c + c.transpose());
}

// Euclidean part of the Hessian, 2n^2 B B^T + 2n(n-1) C.
Matrix euclidean_hessian(const TensorSubspace& s, const Vector& x, const ObjectiveTerms& terms) {
  const int n = s.half_order();
  const Matrix b = contract_basis(s, kron_power(x, n - 1));
  Matrix h = 2.0 * n * n * (b * b.transpose());
  if (n >= 2) {
    const Vector projected = s.basis() * terms.coeffs;
    h += 2.0 * n * (n - 1) * contract_projection(s, projected, x);
  }
  return h;
}

}  // namespace

TensorSubspace::TensorSubspace(int dim, int half_order, Matrix basis, Vector singular_values)
    : dim_(dim), half_order_(half_order), basis_(std::move(basis)),
      singular_values_(std::move(singular_values)) {
  if (dim < 1 || half_order < 1) throw std::invalid_argument("subspace: bad dimension or order");
  if (static_cast<std::size_t>(basis_.rows()) != int_pow(dim, half_order))
    throw std::invalid_argument("subspace: basis rows must equal D^n");
  if (basis_.cols() > basis_.rows()) throw std::invalid_argument("subspace: rank exceeds D^n");
  if (singular_values_.size() != 0 && singular_values_.size() != basis_.cols())
    throw std::invalid_argument("subspace: one singular value per basis column expected");
  if (basis_.cols() > 0) {
    const Matrix gram = basis_.transpose() * basis_;
    const double err = (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
    if (err > 1e-10) throw std::invalid_argument("subspace: basis is not orthonormal");
  }
}

TruncatedSvd truncated_svd(const Eigen::Ref<const Matrix>& m, const RankRule& rule) {
  if (rule.kind == RankRule::Kind::Threshold && !(rule.alpha > 0.0))
    throw std::invalid_argument("rank threshold must be positive");
  if (rule.kind == RankRule::Kind::Fixed) {
    if (rule.k < 1) throw std::invalid_argument("fixed rank must be positive");
    if (rule.k > m.rows()) throw std::invalid_argument("fixed rank exceeds D^n");
    if (rule.k > m.cols()) throw std::invalid_argument("fixed rank exceeds D^(m-n)");
  }
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  int k = 0;
  switch (rule.kind) {
    case RankRule::Kind::Fixed:
      k = rule.k;
      break;
    case RankRule::Kind::Threshold:
      k = static_cast<int>((sv.array() > rule.alpha).count());
      break;
    case RankRule::Kind::Automatic: {
      const double alpha = static_cast<double>(std::max(m.rows(), m.cols())) *
                           std::numeric_limits<double>::epsilon() * (sv.size() ? sv(0) : 0.0);
      k = static_cast<int>((sv.array() > alpha).count());
      break;
    }
  }
  if (k == 0) throw EmptySubspaceError("no singular value exceeds the rank threshold");
  return {svd.matrixU().leftCols(k), sv.head(k), svd.matrixV().leftCols(k), sv};
}

std::pair<TensorSubspace, TruncatedSvd> extract_subspace_with_svd(const SymTensor& t, int n,
                                                                  const RankRule& rule) {
  const Matrix flat = flattening(t, n);
  TruncatedSvd svd = truncated_svd(flat, rule);
  TensorSubspace s(t.dim(), n, svd.u, svd.sigma);
  return {std::move(s), std::move(svd)};
}

TensorSubspace extract_subspace(const SymTensor& t, int n, const RankRule& rule) {
  return extract_subspace_with_svd(t, n, rule).first;
}

TensorSubspace component_subspace(const Matrix& components, int n) {
  const Matrix kr = khatri_rao_power(components, n);
  Eigen::ColPivHouseholderQR<Matrix> qr(kr);
  qr.setThreshold(1e-12);
  const Eigen::Index r = qr.rank();
  Matrix q = qr.householderQ() * Matrix::Identity(kr.rows(), r);
  return TensorSubspace(static_cast<int>(components.rows()), n, std::move(q));
}

Vector project_coeffs(const TensorSubspace& s, const Vector& vec_t) {
  if (static_cast<std::size_t>(vec_t.size()) != s.ambient_size())
    throw std::invalid_argument("project_coeffs: tensor size mismatch");
  return s.basis().transpose() * vec_t;
}

Vector project_coeffs(const TensorSubspace& s, const DenseTensor& t) {
  if (t.order() != s.half_order() || !t.all_dims_equal() || t.dims()[0] != s.dim())
    throw std::invalid_argument("project_coeffs: tensor shape mismatch");
  return project_coeffs(s, t.data());
}

DenseTensor reconstruct(const TensorSubspace& s, const Vector& coeffs) {
  if (coeffs.size() != s.rank()) throw std::invalid_argument("reconstruct: coefficient count");
  return DenseTensor(std::vector<int>(s.half_order(), s.dim()), s.basis() * coeffs);
}

ObjectiveTerms objective_terms(const TensorSubspace& s, const Vector& x) {
  const int n = s.half_order();
  ObjectiveTerms t;
  t.coeffs = s.basis().transpose() * kron_power(x, n);
  t.value = t.coeffs.squaredNorm();
  const Vector projected = s.basis() * t.coeffs;
  const Vector xp = kron_power(x, n - 1);
  Eigen::Map<const RowMajorMatrix> pm(projected.data(), s.dim(), xp.size());
  t.pull = pm * xp;
  return t;
}

double objective(const TensorSubspace& s, const Vector& x) {
  check_unit(x, s.dim(), "objective");
  return objective_terms(s, x).value;
}

Vector riemannian_gradient(const TensorSubspace& s, const Vector& x) {
  check_unit(x, s.dim(), "riemannian_gradient");
  const ObjectiveTerms t = objective_terms(s, x);
  const double two_n = 2.0 * s.half_order();
  return two_n * (t.pull - t.value * x);
}

double riemannian_hessian_quadratic(const TensorSubspace& s, const Vector& x, const Vector& z) {
  check_unit(x, s.dim(), "riemannian_hessian_quadratic");
  check_unit(z, s.dim(), "riemannian_hessian_quadratic");
  if (std::abs(x.dot(z)) > kUnitTol)
    throw std::invalid_argument("riemannian_hessian_quadratic: z must be tangent at x");
  const int n = s.half_order();
  const ObjectiveTerms t = objective_terms(s, x);
  // |P(x^{n-1} z)|^2 = sum_i <U_i, x^{n-1} (x) z>^2 with U_i symmetric.
  Vector xz(static_cast<Eigen::Index>(s.ambient_size()));
  {
    const Vector head = kron_power(x, n - 1);
    for (Eigen::Index j = 0; j < head.size(); ++j) xz.segment(j * s.dim(), s.dim()) = head(j) * z;
  }
  const double first = (s.basis().transpose() * xz).squaredNorm();
  double second = 0.0;
  if (n >= 2) {
    Vector xzz(static_cast<Eigen::Index>(s.ambient_size()));
    const Vector head = kron_power(x, n - 2);
    const Vector zz = kron_power(z, 2);
    for (Eigen::Index j = 0; j < head.size(); ++j)
      xzz.segment(j * zz.size(), zz.size()) = head(j) * zz;
    second = t.coeffs.dot(s.basis().transpose() * xzz);
  }
  return 2.0 * n * n * first + 2.0 * n * (n - 1) * second - 2.0 * n * t.value;
}

Matrix tangent_basis(const Vector& x) {
  const Eigen::Index d = x.size();
  if (d < 2) return Matrix(d, 0);
  // Reflector H = I - 2 v v^T / |v|^2 with v = x + sign(x_0) e_1 maps x to
  // -sign(x_0) e_1; its remaining columns span x^perp.
  Vector v = x;
  const double sign = x(0) >= 0.0 ? 1.0 : -1.0;
  v(0) += sign * x.norm();
  const double vv = v.squaredNorm();
  Matrix h = Matrix::Identity(d, d);
  if (vv > 0.0) h -= (2.0 / vv) * v * v.transpose();
  return h.rightCols(d - 1);
}

Matrix tangent_hessian(const TensorSubspace& s, const Vector& x) {
  check_unit(x, s.dim(), "tangent_hessian");
  const ObjectiveTerms t = objective_terms(s, x);
  const Matrix q = tangent_basis(x);
  Matrix h = q.transpose() * euclidean_hessian(s, x, t) * q;
  h.diagonal().array() -= 2.0 * s.half_order() * t.value;
  return 0.5 * (h + h.transpose());
}

double max_tangent_hessian_eigenvalue(const TensorSubspace& s, const Vector& x) {
  const Matrix h = tangent_hessian(s, x);
  if (h.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

double spectral_norm(const Eigen::Ref<const Matrix>& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double projector_distance(const Matrix& u1, const Matrix& u2) {
  if (u1.rows() != u2.rows()) throw std::invalid_argument("subspace_distance: dimension mismatch");
  if (u1.cols() == 0 && u2.cols() == 0) return 0.0;
  if (u1.cols() == u2.cols()) {
    // |P1 - P2| = |(I - P1) P2| for equal ranks; avoids the cancellation in
    // sqrt(1 - cos^2) at small angles.
    const Matrix residual = u2 - u1 * (u1.transpose() * u2);
    return std::min(1.0, spectral_norm(residual));
  }
  // Unequal ranks: evaluate P1 - P2 on an orthonormal basis of the joint span.
  Matrix joint(u1.rows(), u1.cols() + u2.cols());
  joint << u1, u2;
  Eigen::ColPivHouseholderQR<Matrix> qr(joint);
  qr.setThreshold(1e-12);
  const Matrix q = qr.householderQ() * Matrix::Identity(joint.rows(), qr.rank());
  const Matrix a = q.transpose() * u1;
  const Matrix b = q.transpose() * u2;
  const Matrix diff = a * a.transpose() - b * b.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(diff, Eigen::EigenvaluesOnly);
  return std::min(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
}

double subspace_distance(const TensorSubspace& a, const TensorSubspace& b) {
  if (a.dim() != b.dim() || a.half_order() != b.half_order())
    throw std::invalid_argument("subspace_distance: subspaces live in different tensor spaces");
  return projector_distance(a.basis(), b.basis());
}

SubspaceErrorBound subspace_perturbation_bound(const Eigen::Ref<const Matrix>& m,
                                const Eigen::Ref<const Matrix>& m_hat, int k) {
  if (m.rows() != m_hat.rows() || m.cols() != m_hat.cols())
    throw std::invalid_argument("subspace_perturbation_bound: shape mismatch");
  if (k < 1 || k > std::min(m.rows(), m.cols()))
    throw std::invalid_argument("subspace_perturbation_bound: rank out of range");
  SubspaceErrorBound out;
  out.delta_m = spectral_norm(m - m_hat);
  Eigen::BDCSVD<Matrix> svd(m);
  out.sigma_k = svd.singularValues()(k - 1);
  if (!(out.delta_m < out.sigma_k))
    throw BoundUndefinedError("subspace bound needs |M - M_hat|_2 < sigma_K(M)");
  out.bound = out.delta_m / (out.sigma_k - out.delta_m);
  return out;
}

double pinv_stability_bound(double delta_w, double sigma_r) {
  if (!(delta_w < sigma_r)) throw BoundUndefinedError("pseudo-inverse bound needs Delta_W < sigma_r");
  const double gap = sigma_r - delta_w;
  return delta_w / gap * (2.0 / sigma_r + 1.0 / gap);
}

}  // namespace spm
