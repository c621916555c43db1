#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "spm/random.hpp"
#include "spm/types.hpp"

namespace spm {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// base^exp for small non-negative integers; throws on overflow of size_t.
std::size_t int_pow(std::size_t base, int exp);

/// General real tensor with arbitrary dims, row-major.
class DenseTensor {
 public:
  explicit DenseTensor(std::vector<int> dims);
  DenseTensor(std::vector<int> dims, Vector data);

  const std::vector<int>& dims() const { return dims_; }
  int order() const { return static_cast<int>(dims_.size()); }
  std::size_t size() const { return static_cast<std::size_t>(data_.size()); }

  const Vector& data() const { return data_; }
  Vector& data() { return data_; }

  std::size_t offset(std::span<const int> index) const;
  double operator()(std::span<const int> index) const { return data_(offset(index)); }
  double operator()(std::initializer_list<int> index) const {
    return (*this)(std::span<const int>(index.begin(), index.size()));
  }

  /// Matrix view for order-2 tensors (rows = dims[0]).
  Eigen::Map<const RowMajorMatrix> as_matrix() const;

  bool all_dims_equal() const;

 private:
  std::vector<int> dims_;
  Vector data_;
};

/// Dense symmetric tensor of order m over R^D. Immutable once constructed;
/// construction from raw data checks length and samples the symmetry
/// invariant on 100 random index tuples.
class SymTensor {
 public:
  SymTensor(int dim, int order, Vector data);

  static SymTensor zeros(int dim, int order);

  int dim() const { return dim_; }
  int order() const { return order_; }
  std::size_t size() const { return static_cast<std::size_t>(data_.size()); }
  const Vector& data() const { return data_; }

  double operator()(std::span<const int> index) const;
  double operator()(std::initializer_list<int> index) const {
    return (*this)(std::span<const int>(index.begin(), index.size()));
  }

  DenseTensor as_dense() const;

  friend SymTensor operator+(const SymTensor& a, const SymTensor& b);
  friend SymTensor operator-(const SymTensor& a, const SymTensor& b);
  friend SymTensor operator*(double c, const SymTensor& a);

 private:
  struct Trusted {};
  SymTensor(Trusted, int dim, int order, Vector data);

  friend SymTensor sym_outer_power(const Vector& a, int p);
  friend SymTensor symmetrize(const DenseTensor& t);
  friend struct SymTensorAccess;

  int dim_;
  int order_;
  Vector data_;
};

/// Sampled check that permuting indices leaves entries unchanged, relative to
/// the largest entry magnitude.
bool is_symmetric(const Vector& data, int dim, int order, CounterRng& rng,
                  int samples = 100, double rel_tol = 1e-12);

/// vec(x^{(x)p}) in row-major order; p = 0 gives the scalar 1.
Vector kron_power(const Vector& x, int p);

/// Rank-one symmetric tensor a^{(x)p}. Entries are products over the sorted
/// index tuple, so the result is bit-exactly symmetric.
SymTensor sym_outer_power(const Vector& a, int p);

/// Average over all index permutations. Requires equal dims.
SymTensor symmetrize(const DenseTensor& t);

double frobenius_inner(const DenseTensor& t, const DenseTensor& s);
double frobenius_inner(const SymTensor& t, const SymTensor& s);
double frobenius_norm(const SymTensor& t);

/// Contraction over the trailing indices of t:
/// (t . s)_{i_1..i_{m1-m2}} = sum_j t_{i, j} s_j. Both tensors need dim D.
DenseTensor contract(const DenseTensor& t, const DenseTensor& s);

/// t . x^{(x)times} as a dense tensor of order m - times.
DenseTensor contract_power(const SymTensor& t, const Vector& x, int times);

/// t . x^{(x)(m-1)} as a vector.
Vector contract_to_vector(const SymTensor& t, const Vector& x);

/// Reshape to [D^n, D^{m-n}]; row-major so no data moves.
DenseTensor flatten(const SymTensor& t, int n);
/// Inverse of flatten. The data must be symmetric when viewed as order m.
SymTensor unflatten(const DenseTensor& m, int dim, int order);
/// Zero-copy matrix view of the flattening.
Eigen::Map<const RowMajorMatrix> flattening(const SymTensor& t, int n);

/// Columnwise Khatri-Rao power: column j is vec(a_j^{(x)n}).
Matrix khatri_rao_power(const Matrix& a, int n);

/// Weights and unit-norm components of a symmetric CP model.
struct ComponentEnsemble {
  ComponentEnsemble(int order, Vector weights, Matrix components);

  int dim() const { return static_cast<int>(components.rows()); }
  int rank() const { return static_cast<int>(components.cols()); }

  int order;
  Vector weights;
  Matrix components;
};

/// sum_i lambda_i a_i^{(x)m}.
SymTensor cp_synthesize(const ComponentEnsemble& e);

/// Adds iid N(0, m! sigma^2) to every entry and projects onto Sym, so that
/// entries with distinct indices get variance sigma^2. sigma = 0 returns t.
SymTensor add_gaussian_noise(const SymTensor& t, double sigma, CounterRng& rng);

}  // namespace spm
