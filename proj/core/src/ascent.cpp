#include "spm/ascent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace spm {

namespace {

// Value of the objective and its "pull" (Euclidean gradient divided by the
// homogeneity degree) at a unit x.
struct PullEval {
  double value;
  Vector pull;
};

constexpr int kMaxHalvings = 60;

// Near a maximizer the objective changes by O(step^2), below the rounding
// error of its evaluation; differences within this slack count as ties.
bool not_worse(double next, double cur) {
  const double slack = 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(next), std::abs(cur));
  return next >= cur - slack;
}

template <class Oracle>
AscentTrace ascend(const Oracle& oracle, double degree, const Vector& x0, double gamma,
                   const AscentConfig& cfg) {
  AscentTrace trace;
  Vector x = x0 / x0.norm();
  PullEval cur = oracle(x);
  trace.objective_history.push_back(cur.value);

  for (int it = 0; it < cfg.max_iters; ++it) {
    const double grad_norm = degree * (cur.pull - cur.value * x).norm();
    if (grad_norm <= cfg.grad_tol) {
      trace.converged = true;
      break;
    }
    double step_gamma = gamma;
    bool moved = false;
    bool stalled = false;
    Vector y;
    PullEval next;
    double step = 0.0;
    for (int h = 0; h <= kMaxHalvings; ++h) {
      y = x + step_gamma * cur.pull;
      const double ny = y.norm();
      if (!(ny > 0.0)) throw DegenerateStepError("projected ascent step vanished");
      y /= ny;
      step = (y - x).norm();
      next = oracle(y);
      if (!cfg.backtracking || not_worse(next.value, cur.value)) {
        moved = true;
        break;
      }
      if (step <= cfg.x_tol) {
        stalled = true;
        break;
      }
      step_gamma *= 0.5;
    }
    if (!moved) {
      // No non-decreasing step above the iterate resolution.
      trace.converged = stalled;
      break;
    }
    x = std::move(y);
    cur = std::move(next);
    trace.objective_history.push_back(cur.value);
    ++trace.iterations;
    if (step <= cfg.x_tol) {
      trace.converged = true;
      break;
    }
  }
  trace.final_x = x;
  trace.final_objective = cur.value;
  trace.final_gradient_norm = degree * (cur.pull - cur.value * x).norm();
  return trace;
}

void check_start(const Vector& x0, int dim) {
  if (x0.size() != dim) throw std::invalid_argument("ascent: start point has wrong dimension");
  if (std::abs(x0.norm() - 1.0) > 1e-10) throw std::invalid_argument("ascent: start point must be unit");
}

}  // namespace

void AscentConfig::validate() const {
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be positive (or 0 for the default)");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be positive");
  if (!(x_tol > 0.0) || !(grad_tol > 0.0)) throw std::invalid_argument("tolerances must be positive");
  if (!(accept_tau >= 0.0 && accept_tau <= 1.0))
    throw std::invalid_argument("accept_tau must lie in [0, 1]");
  if (max_restarts < 0) throw std::invalid_argument("max_restarts must be non-negative");
}

Vector spm_step(const TensorSubspace& s, const Vector& x, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("spm_step: gamma must be positive");
  check_start(x, s.dim());
  const ObjectiveTerms t = objective_terms(s, x);
  Vector y = x + gamma * t.pull;
  const double ny = y.norm();
  if (!(ny > 0.0)) throw DegenerateStepError("projected ascent step vanished");
  return y / ny;
}

AscentTrace run_spm_ascent(const TensorSubspace& s, const Vector& x0, const AscentConfig& cfg) {
  cfg.validate();
  check_start(x0, s.dim());
  const auto oracle = [&s](const Vector& x) {
    ObjectiveTerms t = objective_terms(s, x);
    return PullEval{t.value, std::move(t.pull)};
  };
  const int n = s.half_order();
  return ascend(oracle, 2.0 * n, x0, cfg.effective_gamma(n), cfg);
}

AscentTrace solve_component(const TensorSubspace& s, const AscentConfig& cfg, CounterRng& rng) {
  cfg.validate();
  AscentTrace best;
  bool have_best = false;
  for (int attempt = 0; attempt <= cfg.max_restarts; ++attempt) {
    const Vector x0 = random_unit_vector(s.dim(), rng);
    AscentTrace trace = run_spm_ascent(s, x0, cfg);
    trace.restarts_used = attempt;
    if (trace.final_objective >= cfg.accept_tau) return trace;
    if (!have_best || trace.final_objective > best.final_objective) {
      best = std::move(trace);
      have_best = true;
    }
  }
  best.restarts_used = cfg.max_restarts;
  throw NoComponentFoundError("no ascent run reached the acceptance threshold", std::move(best));
}

AscentTrace run_pm_ascent(const SymTensor& t, const Vector& x0, const AscentConfig& cfg) {
  cfg.validate();
  check_start(x0, t.dim());
  const int m = t.order();
  const auto oracle = [&t](const Vector& x) {
    Vector pull = contract_to_vector(t, x);
    const double value = pull.dot(x);
    return PullEval{value, std::move(pull)};
  };
  return ascend(oracle, static_cast<double>(m), x0, cfg.effective_gamma((m + 1) / 2), cfg);
}

}  // namespace spm
