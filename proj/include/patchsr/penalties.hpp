#pragma once

#include "patchsr/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>

namespace patchsr {

enum class PenaltyKind { Cauchy, MCP, L1 };

inline std::string_view to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::Cauchy:
      return "cauchy";
    case PenaltyKind::MCP:
      return "mcp";
    case PenaltyKind::L1:
      return "l1";
  }
  return "unknown";
}

/// Accepts "cauchy", "mcp", "l1". Throws ParameterError otherwise.
inline PenaltyKind parse_penalty_kind(std::string_view name) {
  if (name == "cauchy") return PenaltyKind::Cauchy;
  if (name == "mcp") return PenaltyKind::MCP;
  if (name == "l1") return PenaltyKind::L1;
  throw ParameterError("unknown penalty '" + std::string(name) + "' (expected cauchy|mcp|l1)");
}

/// Separable sparsity penalty phi_gamma. gamma is ignored for L1.
template <typename Scalar>
struct BasicPenalty {
  PenaltyKind kind = PenaltyKind::L1;
  Scalar gamma = Scalar(0);

  void validate() const {
    if (kind != PenaltyKind::L1 && !(gamma > Scalar(0) && std::isfinite(gamma))) {
      throw ParameterError("penalty gamma must be positive and finite for " +
                           std::string(to_string(kind)));
    }
  }
};
using Penalty = BasicPenalty<double>;

/// phi_gamma(t), shifted so that phi_gamma(0) = 0.
///   Cauchy: log((gamma^2 + t^2) / gamma) - log(gamma)
///   MCP:    -t^2/(2 gamma) + sqrt(2/gamma) |t|  for |t| < sqrt(2 gamma), else 1
///   L1:     |t|
template <typename Scalar>
Scalar penalty_value(const BasicPenalty<Scalar>& p, Scalar t) {
  using std::abs;
  using std::log1p;
  using std::sqrt;
  const Scalar at = abs(t);
  switch (p.kind) {
    case PenaltyKind::Cauchy: {
      const Scalar r = at / p.gamma;
      return log1p(r * r);
    }
    case PenaltyKind::MCP:
      if (at < sqrt(Scalar(2) * p.gamma)) {
        return -at * at / (Scalar(2) * p.gamma) + sqrt(Scalar(2) / p.gamma) * at;
      }
      return Scalar(1);
    case PenaltyKind::L1:
      return at;
  }
  return Scalar(0);
}

/// Second derivative of phi_gamma away from its kinks (0 for L1, the
/// saturated MCP branch, and the MCP breakpoint itself is assigned to the
/// saturated side).
template <typename Scalar>
Scalar penalty_second_derivative(const BasicPenalty<Scalar>& p, Scalar t) {
  using std::abs;
  using std::sqrt;
  switch (p.kind) {
    case PenaltyKind::Cauchy: {
      const Scalar g2 = p.gamma * p.gamma;
      const Scalar den = g2 + t * t;
      return Scalar(2) * (g2 - t * t) / (den * den);
    }
    case PenaltyKind::MCP:
      return abs(t) < sqrt(Scalar(2) * p.gamma) ? -Scalar(1) / p.gamma : Scalar(0);
    case PenaltyKind::L1:
      return Scalar(0);
  }
  return Scalar(0);
}

/// Strict-convexity threshold of u -> (x-u)^2/(2 weight) + phi_gamma(u):
/// Cauchy sqrt(weight)/2, MCP weight, L1 0.
template <typename Scalar>
Scalar gamma_bar(PenaltyKind kind, Scalar weight) {
  using std::sqrt;
  if (!(weight > Scalar(0)) || !std::isfinite(weight)) {
    throw ParameterError("gamma_bar: weight must be positive and finite");
  }
  switch (kind) {
    case PenaltyKind::Cauchy:
      return sqrt(weight) / Scalar(2);
    case PenaltyKind::MCP:
      return weight;
    case PenaltyKind::L1:
      return Scalar(0);
  }
  return Scalar(0);
}

/// prox of weight * phi_gamma. Construction enforces the convexity gate so
/// every evaluation has a unique minimizer.
template <typename Scalar>
class BasicProxProblem {
 public:
  BasicProxProblem(Scalar weight, BasicPenalty<Scalar> penalty)
      : weight_(weight), penalty_(penalty) {
    if (!(weight > Scalar(0)) || !std::isfinite(weight)) {
      throw ParameterError("prox weight must be positive and finite");
    }
    penalty_.validate();
    if (penalty_.kind != PenaltyKind::L1) {
      const Scalar bar = gamma_bar(penalty_.kind, weight_);
      if (!(penalty_.gamma > bar)) {
        throw ConvexityGateError("convexity gate violated for " +
                                 std::string(to_string(penalty_.kind)) + ": gamma=" +
                                 std::to_string(static_cast<double>(penalty_.gamma)) +
                                 " <= gamma_bar=" + std::to_string(static_cast<double>(bar)));
      }
    }
  }

  Scalar weight() const { return weight_; }
  const BasicPenalty<Scalar>& penalty() const { return penalty_; }

  /// (x - u)^2 / (2 weight) + phi_gamma(u)
  Scalar objective(Scalar x, Scalar u) const {
    const Scalar d = x - u;
    return d * d / (Scalar(2) * weight_) + penalty_value(penalty_, u);
  }

 private:
  Scalar weight_;
  BasicPenalty<Scalar> penalty_;
};
using ProxProblem = BasicProxProblem<double>;

namespace detail {

// Positive real root of u^3 - x u^2 + (g^2 + 2w) u - x g^2 for x > 0.
// Under the gate the cubic is a positive multiple of a strictly increasing
// derivative, so it has exactly one real root.
template <typename Scalar>
Scalar cauchy_cubic_root(Scalar x, Scalar gamma, Scalar weight) {
  using std::abs;
  using std::cbrt;
  using std::sqrt;
  const Scalar g2 = gamma * gamma;
  const Scalar a = -x;
  const Scalar b = g2 + Scalar(2) * weight;
  const Scalar c = -x * g2;
  auto f = [&](Scalar u) { return ((u + a) * u + b) * u + c; };
  auto df = [&](Scalar u) { return (Scalar(3) * u + Scalar(2) * a) * u + b; };

  // Depressed form t^3 + p t + q with u = t - a/3.
  const Scalar p = b - a * a / Scalar(3);
  const Scalar q = Scalar(2) * a * a * a / Scalar(27) - a * b / Scalar(3) + c;
  const Scalar disc = q * q / Scalar(4) + p * p * p / Scalar(27);

  Scalar u;
  if (disc > Scalar(0)) {
    const Scalar s = sqrt(disc);
    // Take the larger-magnitude cube root first; the other follows from
    // the product constraint and avoids cancellation.
    const Scalar big = cbrt(-q / Scalar(2) - (q >= Scalar(0) ? s : -s));
    const Scalar small = big != Scalar(0) ? -p / (Scalar(3) * big) : Scalar(0);
    u = big + small - a / Scalar(3);
  } else if (p < Scalar(0)) {
    // Only reachable through rounding at the gate boundary: pick the real
    // root with the smallest residual.
    const Scalar m = Scalar(2) * sqrt(-p / Scalar(3));
    const Scalar arg =
        std::clamp(Scalar(3) * q / (Scalar(2) * p) * sqrt(-Scalar(3) / p), Scalar(-1), Scalar(1));
    const Scalar theta = std::acos(arg) / Scalar(3);
    const Scalar two_pi_3 = Scalar(2.09439510239319549230842892218633526);
    u = m * std::cos(theta) - a / Scalar(3);
    for (int k = 1; k < 3; ++k) {
      const Scalar cand = m * std::cos(theta - two_pi_3 * Scalar(k)) - a / Scalar(3);
      if (abs(f(cand)) < abs(f(u))) u = cand;
    }
  } else {
    u = cbrt(-q) - a / Scalar(3);
  }

  // Newton polish, kept only while it lowers the residual.
  for (int it = 0; it < 2; ++it) {
    const Scalar d = df(u);
    if (d == Scalar(0)) break;
    const Scalar next = u - f(u) / d;
    if (!(abs(f(next)) < abs(f(u)))) break;
    u = next;
  }
  return std::clamp(u, Scalar(0), x);
}

template <typename Scalar>
Scalar mcp_prox_positive(Scalar x, Scalar gamma, Scalar weight, const BasicProxProblem<Scalar>& pp) {
  using std::sqrt;
  const Scalar knee = sqrt(Scalar(2) * gamma);
  const Scalar slope = sqrt(Scalar(2) / gamma);
  // Candidates: zero, the stationary point of the concave-quadratic branch
  // clipped to [0, knee], and the identity on the saturated branch.
  std::array<Scalar, 3> cand{Scalar(0), Scalar(0), Scalar(0)};
  int n = 1;
  const Scalar inner = (x - weight * slope) / (Scalar(1) - weight / gamma);
  cand[n++] = std::clamp(inner, Scalar(0), knee);
  if (x >= knee) cand[n++] = x;

  Scalar best = cand[0];
  Scalar best_val = pp.objective(x, best);
  for (int i = 1; i < n; ++i) {
    const Scalar v = pp.objective(x, cand[i]);
    if (v < best_val || (v == best_val && cand[i] < best)) {
      best = cand[i];
      best_val = v;
    }
  }
  return best;
}

}  // namespace detail

/// Unique minimizer of (x - u)^2 / (2 weight) + phi_gamma(u).
///   Cauchy: real root of the cubic stationarity condition (Cardano).
///   MCP:    firm threshold.
///   L1:     soft threshold.
template <typename Scalar>
Scalar prox_scalar(const BasicProxProblem<Scalar>& pp, Scalar x) {
  using std::abs;
  if (x == Scalar(0)) return Scalar(0);
  const Scalar ax = abs(x);
  const Scalar w = pp.weight();
  const auto& pen = pp.penalty();
  Scalar u = Scalar(0);
  switch (pen.kind) {
    case PenaltyKind::Cauchy:
      u = detail::cauchy_cubic_root(ax, pen.gamma, w);
      break;
    case PenaltyKind::MCP:
      u = detail::mcp_prox_positive(ax, pen.gamma, w, pp);
      break;
    case PenaltyKind::L1:
      u = ax > w ? ax - w : Scalar(0);
      break;
  }
  return x < Scalar(0) ? -u : u;
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> prox_vector(
    const BasicProxProblem<typename Derived::Scalar>& pp, const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  return v.derived().unaryExpr([&pp](Scalar x) { return prox_scalar(pp, x); });
}

/// Residual of the Cauchy stationarity cubic at u.
template <typename Scalar>
Scalar cauchy_cubic_residual(Scalar x, Scalar u, Scalar gamma, Scalar weight) {
  const Scalar g2 = gamma * gamma;
  return ((u - x) * u + (g2 + Scalar(2) * weight)) * u - x * g2;
}

}  // namespace patchsr
