#include "spm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace spm {

struct SymTensorAccess {
  static SymTensor make(int dim, int order, Vector data) {
    return SymTensor(SymTensor::Trusted{}, dim, order, std::move(data));
  }
};

namespace {

void check_dim_order(int dim, int order) {
  if (dim < 1) throw std::invalid_argument("tensor dimension must be positive");
  if (order < 1) throw std::invalid_argument("tensor order must be positive");
  if (order > 8) throw std::invalid_argument("tensor orders above 8 are not supported");
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

// Advances a row-major multi-index; returns false after the last one.
bool next_index(std::vector<int>& index, int dim) {
  for (int k = static_cast<int>(index.size()) - 1; k >= 0; --k) {
    if (++index[k] < dim) return true;
    index[k] = 0;
  }
  return false;
}

// Advances a nondecreasing multi-index i_1 <= ... <= i_m.
bool next_sorted_index(std::vector<int>& index, int dim) {
  int k = static_cast<int>(index.size()) - 1;
  while (k >= 0 && index[k] == dim - 1) --k;
  if (k < 0) return false;
  ++index[k];
  for (std::size_t j = k + 1; j < index.size(); ++j) index[j] = index[k];
  return true;
}

std::size_t row_major_offset(std::span<const int> index, int dim) {
  std::size_t off = 0;
  for (int i : index) off = off * static_cast<std::size_t>(dim) + static_cast<std::size_t>(i);
  return off;
}

}  // namespace

std::size_t int_pow(std::size_t base, int exp) {
  if (exp < 0) throw std::invalid_argument("negative exponent");
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (base != 0 && r > std::numeric_limits<std::size_t>::max() / base)
      throw std::overflow_error("integer power overflows size_t");
    r *= base;
  }
  return r;
}

// ---- DenseTensor -----------------------------------------------------------

DenseTensor::DenseTensor(std::vector<int> dims) : dims_(std::move(dims)) {
  std::size_t n = 1;
  for (int d : dims_) {
    if (d < 1) throw std::invalid_argument("tensor dims must be positive");
    n *= static_cast<std::size_t>(d);
  }
  data_ = Vector::Zero(static_cast<Eigen::Index>(n));
}

DenseTensor::DenseTensor(std::vector<int> dims, Vector data) : DenseTensor(std::move(dims)) {
  if (data.size() != data_.size())
    throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                " does not match product of dims " +
                                std::to_string(data_.size()));
  data_ = std::move(data);
}

std::size_t DenseTensor::offset(std::span<const int> index) const {
  if (index.size() != dims_.size()) throw std::invalid_argument("index has wrong order");
  std::size_t off = 0;
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    if (index[k] < 0 || index[k] >= dims_[k]) throw std::out_of_range("tensor index out of range");
    off = off * static_cast<std::size_t>(dims_[k]) + static_cast<std::size_t>(index[k]);
  }
  return off;
}

Eigen::Map<const RowMajorMatrix> DenseTensor::as_matrix() const {
  if (order() != 2) throw std::invalid_argument("as_matrix requires an order-2 tensor");
  return {data_.data(), dims_[0], dims_[1]};
}

bool DenseTensor::all_dims_equal() const {
  return std::adjacent_find(dims_.begin(), dims_.end(), std::not_equal_to<>()) == dims_.end();
}

// ---- SymTensor -------------------------------------------------------------

SymTensor::SymTensor(Trusted, int dim, int order, Vector data)
    : dim_(dim), order_(order), data_(std::move(data)) {}

SymTensor::SymTensor(int dim, int order, Vector data)
    : dim_(dim), order_(order), data_(std::move(data)) {
  check_dim_order(dim, order);
  if (static_cast<std::size_t>(data_.size()) != int_pow(dim, order))
    throw std::invalid_argument("symmetric tensor data length must equal D^m");
  CounterRng rng(static_cast<std::uint64_t>(data_.size()));
  if (!is_symmetric(data_, dim, order, rng))
    throw std::invalid_argument("tensor data is not symmetric");
}

SymTensor SymTensor::zeros(int dim, int order) {
  check_dim_order(dim, order);
  return SymTensor(Trusted{}, dim, order,
                   Vector::Zero(static_cast<Eigen::Index>(int_pow(dim, order))));
}

double SymTensor::operator()(std::span<const int> index) const {
  if (static_cast<int>(index.size()) != order_) throw std::invalid_argument("index has wrong order");
  for (int i : index)
    if (i < 0 || i >= dim_) throw std::out_of_range("tensor index out of range");
  return data_(static_cast<Eigen::Index>(row_major_offset(index, dim_)));
}

DenseTensor SymTensor::as_dense() const {
  return DenseTensor(std::vector<int>(order_, dim_), data_);
}

SymTensor operator+(const SymTensor& a, const SymTensor& b) {
  if (a.dim_ != b.dim_ || a.order_ != b.order_) throw std::invalid_argument("shape mismatch");
  return SymTensor(SymTensor::Trusted{}, a.dim_, a.order_, a.data_ + b.data_);
}

SymTensor operator-(const SymTensor& a, const SymTensor& b) {
  if (a.dim_ != b.dim_ || a.order_ != b.order_) throw std::invalid_argument("shape mismatch");
  return SymTensor(SymTensor::Trusted{}, a.dim_, a.order_, a.data_ - b.data_);
}

SymTensor operator*(double c, const SymTensor& a) {
  return SymTensor(SymTensor::Trusted{}, a.dim_, a.order_, c * a.data_);
}

bool is_symmetric(const Vector& data, int dim, int order, CounterRng& rng, int samples,
                  double rel_tol) {
  if (static_cast<std::size_t>(data.size()) != int_pow(dim, order)) return false;
  if (order < 2 || data.size() == 0) return true;
  const double scale = std::max(data.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  std::vector<int> index(order), perm(order);
  for (int s = 0; s < samples; ++s) {
    for (int& i : index) i = static_cast<int>(rng() % static_cast<std::uint64_t>(dim));
    perm = index;
    // Fisher-Yates with the counter stream.
    for (int k = order - 1; k > 0; --k) {
      const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(k + 1));
      std::swap(perm[k], perm[j]);
    }
    const double a = data(static_cast<Eigen::Index>(row_major_offset(index, dim)));
    const double b = data(static_cast<Eigen::Index>(row_major_offset(perm, dim)));
    if (std::abs(a - b) > rel_tol * scale) return false;
  }
  return true;
}

// ---- construction ----------------------------------------------------------

Vector kron_power(const Vector& x, int p) {
  if (p < 0) throw std::invalid_argument("negative tensor power");
  Vector out = Vector::Ones(1);
  const Eigen::Index d = x.size();
  for (int k = 0; k < p; ++k) {
    Vector next(out.size() * d);
    for (Eigen::Index j = 0; j < out.size(); ++j) next.segment(j * d, d) = out(j) * x;
    out = std::move(next);
  }
  return out;
}

SymTensor sym_outer_power(const Vector& a, int p) {
  if (p < 1) throw std::invalid_argument("tensor power must be positive");
  if (a.size() == 0) throw std::invalid_argument("empty vector");
  const int dim = static_cast<int>(a.size());
  check_dim_order(dim, p);
  Vector data(static_cast<Eigen::Index>(int_pow(dim, p)));
  std::vector<int> index(p, 0), sorted(p);
  std::size_t off = 0;
  do {
    sorted = index;
    std::sort(sorted.begin(), sorted.end());
    double v = 1.0;
    for (int i : sorted) v *= a(i);
    data(static_cast<Eigen::Index>(off++)) = v;
  } while (next_index(index, dim));
  return SymTensor(SymTensor::Trusted{}, dim, p, std::move(data));
}

SymTensor symmetrize(const DenseTensor& t) {
  if (t.order() < 1) throw std::invalid_argument("cannot symmetrize a scalar");
  if (!t.all_dims_equal()) throw std::invalid_argument("symmetrize requires equal dims");
  const int dim = t.dims()[0];
  const int order = t.order();
  check_dim_order(dim, order);
  Vector out(static_cast<Eigen::Index>(t.size()));
  const Vector& in = t.data();
  std::vector<int> base(order, 0), perm(order);
  std::vector<std::size_t> offsets;
  // Each distinct permutation of a sorted tuple occurs equally often among
  // the m! permutations, so averaging over distinct ones is the same mean.
  do {
    perm = base;
    offsets.clear();
    double sum = 0.0;
    do {
      const std::size_t off = row_major_offset(perm, dim);
      offsets.push_back(off);
      sum += in(static_cast<Eigen::Index>(off));
    } while (std::next_permutation(perm.begin(), perm.end()));
    const double mean = sum / static_cast<double>(offsets.size());
    for (std::size_t off : offsets) out(static_cast<Eigen::Index>(off)) = mean;
  } while (next_sorted_index(base, dim));
  return SymTensor(SymTensor::Trusted{}, dim, order, std::move(out));
}

// ---- products ---------------------------------------------------------------

double frobenius_inner(const DenseTensor& t, const DenseTensor& s) {
  if (t.dims() != s.dims()) throw std::invalid_argument("frobenius_inner: shape mismatch");
  return t.data().dot(s.data());
}

double frobenius_inner(const SymTensor& t, const SymTensor& s) {
  if (t.dim() != s.dim() || t.order() != s.order())
    throw std::invalid_argument("frobenius_inner: shape mismatch");
  return t.data().dot(s.data());
}

double frobenius_norm(const SymTensor& t) { return t.data().norm(); }

DenseTensor contract(const DenseTensor& t, const DenseTensor& s) {
  if (s.order() > t.order()) throw std::invalid_argument("contract: order of S exceeds order of T");
  if (!t.all_dims_equal() || !s.all_dims_equal() || (s.order() > 0 && t.order() > 0 &&
                                                      t.dims()[0] != s.dims()[0]))
    throw std::invalid_argument("contract: tensors must share a single dimension D");
  const int kept = t.order() - s.order();
  std::vector<int> out_dims(t.dims().begin(), t.dims().begin() + kept);
  const Eigen::Index rows = static_cast<Eigen::Index>(t.size() / s.size());
  Eigen::Map<const RowMajorMatrix> tm(t.data().data(), rows, static_cast<Eigen::Index>(s.size()));
  Vector out = tm * s.data();
  return DenseTensor(std::move(out_dims), std::move(out));
}

DenseTensor contract_power(const SymTensor& t, const Vector& x, int times) {
  if (x.size() != t.dim()) throw std::invalid_argument("contract_power: dimension mismatch");
  if (times < 0 || times > t.order()) throw std::invalid_argument("contract_power: bad power");
  const Vector xp = kron_power(x, times);
  const Eigen::Index rows = static_cast<Eigen::Index>(t.size()) / xp.size();
  Eigen::Map<const RowMajorMatrix> tm(t.data().data(), rows, xp.size());
  return DenseTensor(std::vector<int>(t.order() - times, t.dim()), tm * xp);
}

Vector contract_to_vector(const SymTensor& t, const Vector& x) {
  return contract_power(t, x, t.order() - 1).data();
}

DenseTensor flatten(const SymTensor& t, int n) {
  if (n < 1 || n >= t.order()) throw std::invalid_argument("flatten: n must satisfy 1 <= n < m");
  const int rows = static_cast<int>(int_pow(t.dim(), n));
  const int cols = static_cast<int>(int_pow(t.dim(), t.order() - n));
  return DenseTensor({rows, cols}, t.data());
}

SymTensor unflatten(const DenseTensor& m, int dim, int order) {
  if (m.size() != int_pow(dim, order)) throw std::invalid_argument("unflatten: size mismatch");
  return SymTensor(dim, order, m.data());
}

Eigen::Map<const RowMajorMatrix> flattening(const SymTensor& t, int n) {
  if (n < 1 || n >= t.order()) throw std::invalid_argument("flatten: n must satisfy 1 <= n < m");
  const auto rows = static_cast<Eigen::Index>(int_pow(t.dim(), n));
  const auto cols = static_cast<Eigen::Index>(int_pow(t.dim(), t.order() - n));
  return {t.data().data(), rows, cols};
}

Matrix khatri_rao_power(const Matrix& a, int n) {
  if (n < 1) throw std::invalid_argument("khatri_rao_power: n must be >= 1");
  Matrix out(static_cast<Eigen::Index>(int_pow(a.rows(), n)), a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) out.col(j) = kron_power(a.col(j), n);
  return out;
}

// ---- CP model ---------------------------------------------------------------

ComponentEnsemble::ComponentEnsemble(int order_, Vector weights_, Matrix components_)
    : order(order_), weights(std::move(weights_)), components(std::move(components_)) {
  if (components.cols() < 1) throw std::invalid_argument("ensemble needs K >= 1");
  if (weights.size() != components.cols())
    throw std::invalid_argument("ensemble: weight count differs from component count");
  check_dim_order(static_cast<int>(components.rows()), order);
  for (Eigen::Index j = 0; j < components.cols(); ++j)
    if (std::abs(components.col(j).norm() - 1.0) > 1e-12)
      throw std::invalid_argument("ensemble components must have unit norm");
}

SymTensor cp_synthesize(const ComponentEnsemble& e) {
  const int m = e.order;
  const int dim = e.dim();
  if (m == 1) return SymTensorAccess::make(dim, 1, e.components * e.weights);
  const int n = (m + 1) / 2;
  const Matrix left = khatri_rao_power(e.components, n);
  const Matrix right = khatri_rao_power(e.components, m - n);
  // Row-major flattening M = A^{.n} diag(lambda) (A^{.(m-n)})^T.
  RowMajorMatrix flat = left * e.weights.asDiagonal() * right.transpose();
  Vector data = Eigen::Map<const Vector>(flat.data(), flat.size());
  return SymTensorAccess::make(dim, m, std::move(data));
}

SymTensor add_gaussian_noise(const SymTensor& t, double sigma, CounterRng& rng) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise level must be non-negative");
  if (sigma == 0.0) return t;
  const double scale = std::sqrt(factorial(t.order())) * sigma;
  Vector noise(static_cast<Eigen::Index>(t.size()));
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = scale * rng.normal();
  const SymTensor sym = symmetrize(DenseTensor(std::vector<int>(t.order(), t.dim()), noise));
  return t + sym;
}

}  // namespace spm
