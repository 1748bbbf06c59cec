#pragma once

#include "patchsr/errors.hpp"
#include "patchsr/image.hpp"
#include "patchsr/operators.hpp"
#include "patchsr/penalties.hpp"

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

namespace patchsr {

struct SolverConfig {
  double lambda = 1e-3;
  double tau = 1.01;
  // Step size; 1/L when unset.
  std::optional<double> mu;
  double tol = 1e-5;
  int max_iters = 300;

  /// Throws ParameterError unless lambda > 0, tau > 1, tol > 0,
  /// max_iters >= 1 and (if set) mu > 0.
  void validate() const;
};

/// Step size and penalty parameter resolved for one operator.
/// gamma = tau * gamma_bar(kind, lambda * mu).
struct StepPlan {
  PenaltyKind kind = PenaltyKind::L1;
  double lipschitz = 0.0;
  double mu = 0.0;
  double gamma_bar = 0.0;
  double gamma = 0.0;

  Penalty penalty() const { return Penalty{kind, gamma}; }
};

/// Throws ParameterError for a zero operator or a step size above 1/L.
StepPlan plan_step(PenaltyKind kind, const SolverConfig& cfg, double lipschitz);

template <typename Op>
StepPlan plan_step(const Op& op, PenaltyKind kind, const SolverConfig& cfg) {
  const LipschitzEstimate est = lipschitz_constant(op);
  if (est.zero_operator) throw ParameterError("forward operator is zero; no admissible step size");
  return plan_step(kind, cfg, est.value);
}

struct SolveResult {
  Vector coefficients;
  int iterations = 0;
  // Objective at a_0 followed by one entry per iteration.
  std::vector<double> objective_trace;
  bool converged = false;
};

template <typename Op>
double objective(const Op& op, const Penalty& pen, double lambda, const Vector& y,
                 const Vector& a) {
  if (y.size() != op.output_size()) {
    throw DimensionError("objective: y has " + std::to_string(y.size()) + " entries, expected " +
                         std::to_string(op.output_size()));
  }
  const double fidelity = 0.5 * (y - op.apply_forward(a)).squaredNorm();
  double reg = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) reg += penalty_value(pen, a[i]);
  return fidelity + lambda * reg;
}

/// Forward-backward splitting for
///   min_a 1/2 ||y - A a||^2 + lambda sum_i phi_gamma(a_i)
/// from a_0 = 0:
///   b = a_k - mu A^T (A a_k - y),  a_{k+1} = prox_{lambda mu phi_gamma}(b).
/// Stops when ||a_{k+1} - a_k|| / max(||a_k||, 1e-12) < tol or after
/// max_iters iterations.
template <typename Op>
SolveResult fb_solve(const Op& op, const StepPlan& plan, const SolverConfig& cfg, const Vector& y) {
  cfg.validate();
  if (y.size() != op.output_size()) {
    throw DimensionError("fb_solve: y has " + std::to_string(y.size()) + " entries, expected " +
                         std::to_string(op.output_size()));
  }
  if (!y.allFinite()) throw NumericError("fb_solve: observation is not finite", 0);
  if (!(plan.mu > 0.0) || plan.mu * plan.lipschitz > 1.0 + 1e-12) {
    throw ParameterError("fb_solve: step size outside (0, 1/L]");
  }
  const Penalty pen = plan.penalty();
  const ProxProblem prox(cfg.lambda * plan.mu, pen);

  auto reg = [&](const Vector& a) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) s += penalty_value(pen, a[i]);
    return cfg.lambda * s;
  };

  SolveResult res;
  Vector a = Vector::Zero(op.input_size());
  Vector fwd = Vector::Zero(op.output_size());
  res.objective_trace.reserve(static_cast<std::size_t>(cfg.max_iters) + 1);
  res.objective_trace.push_back(0.5 * y.squaredNorm());

  for (int k = 0; k < cfg.max_iters; ++k) {
    const Vector b = a - plan.mu * op.apply_adjoint(fwd - y);
    Vector next = prox_vector(prox, b);
    if (!next.allFinite()) {
      throw NumericError("fb_solve: non-finite iterate at iteration " + std::to_string(k + 1),
                         k + 1);
    }
    fwd = op.apply_forward(next);
    res.objective_trace.push_back(0.5 * (y - fwd).squaredNorm() + reg(next));
    const double change = (next - a).norm() / std::max(a.norm(), 1e-12);
    a = std::move(next);
    res.iterations = k + 1;
    if (change < cfg.tol) {
      res.converged = true;
      break;
    }
  }
  res.coefficients = std::move(a);
  return res;
}

template <typename Op>
SolveResult fb_solve(const Op& op, PenaltyKind kind, const SolverConfig& cfg, const Vector& y) {
  cfg.validate();
  return fb_solve(op, plan_step(op, kind, cfg), cfg, y);
}

}  // namespace patchsr
