#include "patchsr/solver.hpp"

#include <cmath>

namespace patchsr {

void SolverConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda must be positive");
  if (!(tau > 1.0) || !std::isfinite(tau)) throw ParameterError("tau must be greater than 1");
  if (!(tol > 0.0)) throw ParameterError("tol must be positive");
  if (max_iters < 1) throw ParameterError("max_iters must be at least 1");
  if (mu && (!(*mu > 0.0) || !std::isfinite(*mu))) throw ParameterError("mu must be positive");
}

StepPlan plan_step(PenaltyKind kind, const SolverConfig& cfg, double lipschitz) {
  cfg.validate();
  if (!(lipschitz > 0.0) || !std::isfinite(lipschitz)) {
    throw ParameterError("Lipschitz constant must be positive; zero operator admits no step");
  }
  StepPlan plan;
  plan.kind = kind;
  plan.lipschitz = lipschitz;
  plan.mu = cfg.mu.value_or(1.0 / lipschitz);
  if (plan.mu * lipschitz > 1.0 + 1e-12) {
    throw ParameterError("mu=" + std::to_string(plan.mu) + " exceeds 1/L=" +
                         std::to_string(1.0 / lipschitz));
  }
  plan.gamma_bar = gamma_bar(kind, cfg.lambda * plan.mu);
  plan.gamma = cfg.tau * plan.gamma_bar;
  return plan;
}

}  // namespace patchsr
