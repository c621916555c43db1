#pragma once

#include <vector>

#include "spm/random.hpp"
#include "spm/subspace.hpp"
#include "spm/tensor.hpp"

namespace spm {

struct AscentConfig {
  /// Step size; 0 selects 1/(2n) for the subspace's half order n.
  double gamma = 0.0;
  int max_iters = 5000;
  double x_tol = 1e-12;
  double grad_tol = 1e-10;
  /// Minimum objective for solve_component to accept a run.
  double accept_tau = 0.5;
  int max_restarts = 50;
  /// Halve the step while it would decrease the objective.
  bool backtracking = true;

  void validate() const;
  double effective_gamma(int half_order) const {
    return gamma > 0.0 ? gamma : 1.0 / (2.0 * half_order);
  }
};

struct AscentTrace {
  Vector final_x;
  double final_objective = 0.0;
  double final_gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  int restarts_used = 0;
  /// Nondecreasing with backtracking, up to 16 ulp of the objective per step.
  std::vector<double> objective_history;
};

/// solve_component ran out of restarts; best() is the highest-objective run.
class NoComponentFoundError : public Error {
 public:
  NoComponentFoundError(const std::string& what, AscentTrace best)
      : Error(what), best_(std::move(best)) {}
  const AscentTrace& best() const { return best_; }

 private:
  AscentTrace best_;
};

/// x <- (x + gamma P(x^n).x^{n-1}) / |x + gamma P(x^n).x^{n-1}|.
Vector spm_step(const TensorSubspace& s, const Vector& x, double gamma);

/// Projected gradient ascent on F from x0. Stops on iterate change <= x_tol,
/// Riemannian gradient norm <= grad_tol, or max_iters (converged = false).
AscentTrace run_spm_ascent(const TensorSubspace& s, const Vector& x0, const AscentConfig& cfg);

/// Random restarts until the final objective reaches accept_tau.
/// Throws NoComponentFoundError after 1 + max_restarts rejected runs.
AscentTrace solve_component(const TensorSubspace& s, const AscentConfig& cfg, CounterRng& rng);

/// Same scheme on the power-method objective <T, x^m> (baseline).
AscentTrace run_pm_ascent(const SymTensor& t, const Vector& x0, const AscentConfig& cfg);

}  // namespace spm
