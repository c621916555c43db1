#include "spm/random.hpp"

#include <cmath>
#include <numbers>

namespace spm {

CounterRng CounterRng::fork(std::uint64_t stream) const {
  return CounterRng(mix(key_ ^ mix(stream + kGolden)), true);
}

double CounterRng::uniform() {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

// Box-Muller is spelled out instead of std::normal_distribution so that the
// streams (and every CSV derived from them) are identical across standard
// library implementations.
double CounterRng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vector random_unit_vector(int dim, CounterRng& rng) {
  Vector x(dim);
  double norm = 0.0;
  do {
    for (int i = 0; i < dim; ++i) x(i) = rng.normal();
    norm = x.norm();
  } while (norm == 0.0);
  return x / norm;
}

Matrix random_unit_columns(int dim, int count, CounterRng& rng) {
  Matrix a(dim, count);
  for (int j = 0; j < count; ++j) a.col(j) = random_unit_vector(dim, rng);
  return a;
}

}  // namespace spm
