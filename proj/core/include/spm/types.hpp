#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace spm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base class for all recoverable library failures that are not plain
/// argument errors. Argument errors use std::invalid_argument.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Threshold rank rule kept no singular value.
class EmptySubspaceError : public Error {
 public:
  using Error::Error;
};

/// Subspace perturbation bound requested with Delta_M >= sigma_K.
class BoundUndefinedError : public Error {
 public:
  using Error::Error;
};

/// x + gamma * pull vanished in a projected ascent step.
class DegenerateStepError : public Error {
 public:
  using Error::Error;
};

/// Weight denominator too close to zero.
class WeightUndefinedError : public Error {
 public:
  using Error::Error;
};

/// Grammian is numerically singular.
class RankDeficiencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace spm
