#include "oracles.hpp"

#include "patchsr/operators.hpp"
#include "patchsr/solver.hpp"

#include <doctest.h>

#include <random>

using namespace patchsr;

namespace {

Matrix random_matrix(std::mt19937_64& gen, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> nd;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(gen);
  return m;
}

// Textbook ISTA on an explicit matrix, written without the library.
Vector reference_ista(const Matrix& a, const Vector& y, double lambda, int iters) {
  const double step = 1.0 / oracle::dense_lipschitz(a);
  Vector x = Vector::Zero(a.cols());
  for (int k = 0; k < iters; ++k) {
    const Vector z = x + step * a.transpose() * (y - a * x);
    const double t = lambda * step;
    x = z.unaryExpr([t](double v) { return v > t ? v - t : (v < -t ? v + t : 0.0); });
  }
  return x;
}

Eigen::Index nonzeros(const Vector& a) { return (a.array().abs() > 1e-8).count(); }

constexpr PenaltyKind kAllKinds[] = {PenaltyKind::Cauchy, PenaltyKind::MCP, PenaltyKind::L1};

}  // namespace

TEST_CASE("objective examples") {
  std::mt19937_64 gen(1);
  const PatchOperator op(Dictionary(random_matrix(gen, 16, 20)), gaussian_psf(3, 0.85), 2);
  const Penalty pen{PenaltyKind::Cauchy, 0.3};
  CHECK(objective(op, pen, 0.1, Vector::Zero(4), Vector::Zero(20)) == 0.0);
  const Vector y = random_matrix(gen, 4, 1);
  CHECK(objective(op, pen, 0.1, y, Vector::Zero(20)) == doctest::Approx(0.5 * y.squaredNorm()));

  const Matrix a_mat = op.materialize();
  for (auto kind : kAllKinds) {
    const Penalty p{kind, kind == PenaltyKind::L1 ? 0.0 : 0.7};
    const Vector a = random_matrix(gen, 20, 1);
    double reg = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      reg += kind == PenaltyKind::Cauchy ? oracle::cauchy_phi(0.7, a[i])
             : kind == PenaltyKind::MCP  ? oracle::mcp_phi(0.7, a[i])
                                         : oracle::l1_phi(0.0, a[i]);
    }
    const double expected = 0.5 * (y - a_mat * a).squaredNorm() + 0.05 * reg;
    CHECK(std::abs(objective(op, p, 0.05, y, a) - expected) <= 1e-12 * (1.0 + expected));
  }
  CHECK_THROWS_AS(objective(op, pen, 0.1, Vector::Zero(5), Vector::Zero(20)), DimensionError);
}

TEST_CASE("zero observation is a fixed point") {
  std::mt19937_64 gen(2);
  const DenseOperator op(random_matrix(gen, 6, 10));
  for (auto kind : kAllKinds) {
    const SolveResult r = fb_solve(op, kind, SolverConfig{}, Vector::Zero(6));
    CHECK(r.iterations <= 1);
    CHECK(r.converged);
    CHECK(r.coefficients.isZero(0.0));
  }
}

TEST_CASE("large lambda kills every coefficient for l1") {
  std::mt19937_64 gen(3);
  const Matrix a = random_matrix(gen, 6, 10);
  const DenseOperator op(a);
  const Vector y = random_matrix(gen, 6, 1);
  SolverConfig cfg;
  cfg.lambda = 1.01 * (a.transpose() * y).cwiseAbs().maxCoeff();
  const SolveResult r = fb_solve(op, PenaltyKind::L1, cfg, y);
  CHECK(r.coefficients.isZero(0.0));
}

TEST_CASE("l1 solve matches reference ista and exhaustive support search") {
  std::mt19937_64 gen(4);
  int certified = 0;
  for (int t = 0; t < 60; ++t) {
    const Dictionary d(random_matrix(gen, 4, 8));
    const PatchOperator op(d, Psf::identity(), 1);
    const Matrix a = op.materialize();
    Vector truth = Vector::Zero(8);
    truth[t % 8] = 1.5;
    truth[(t * 3 + 1) % 8] -= 0.8;
    const Vector y = a * truth;
    SolverConfig cfg;
    cfg.lambda = 0.3;
    cfg.tol = 1e-12;
    cfg.max_iters = 100000;
    const SolveResult r = fb_solve(op, PenaltyKind::L1, cfg, y);

    const Vector ista = reference_ista(a, y, cfg.lambda, r.iterations);
    CHECK((ista - r.coefficients).norm() <= 1e-8 * (1.0 + ista.norm()));

    const auto best = oracle::l1_exhaustive_support(a, y, cfg.lambda);
    if (!best.certified) continue;
    ++certified;
    const double got = oracle::l1_objective(a, y, cfg.lambda, r.coefficients);
    CHECK(std::abs(got - best.value) <= 1e-6);
  }
  CHECK(certified >= 20);
}

TEST_CASE("objective trace is monotone with step 1/L") {
  std::mt19937_64 gen(5);
  for (auto kind : kAllKinds) {
    CAPTURE(to_string(kind));
    for (int t = 0; t < 50; ++t) {
      const PatchOperator op(Dictionary(random_matrix(gen, 16, 24)), gaussian_psf(3, 0.85), 2);
      const Vector y = random_matrix(gen, 4, 1);
      SolverConfig cfg;
      cfg.lambda = 0.02;
      const SolveResult r = fb_solve(op, kind, cfg, y);
      for (std::size_t k = 0; k + 1 < r.objective_trace.size(); ++k) {
        CHECK(r.objective_trace[k + 1] <= r.objective_trace[k] + 1e-10);
      }
      CHECK(r.coefficients.allFinite());
      CHECK(r.objective_trace.size() == static_cast<std::size_t>(r.iterations) + 1);
    }
  }
}

TEST_CASE("converged solution is a prox fixed point") {
  std::mt19937_64 gen(6);
  for (auto kind : kAllKinds) {
    const DenseOperator op(random_matrix(gen, 8, 16));
    const Vector y = random_matrix(gen, 8, 1);
    SolverConfig cfg;
    cfg.lambda = 0.05;
    cfg.max_iters = 5000;
    const StepPlan plan = plan_step(op, kind, cfg);
    const SolveResult r = fb_solve(op, plan, cfg, y);
    REQUIRE(r.converged);
    const Vector& a = r.coefficients;
    const ProxProblem pp(cfg.lambda * plan.mu, plan.penalty());
    const Vector fp = prox_vector(pp, Vector(a + plan.mu * op.apply_adjoint(y - op.apply_forward(a))));
    CHECK((a - fp).norm() <= 10.0 * cfg.tol * a.norm());
  }
}

TEST_CASE("l1 solve reaches the long-run optimum") {
  std::mt19937_64 gen(7);
  for (int t = 0; t < 5; ++t) {
    const Matrix a = random_matrix(gen, 8, 20);
    const DenseOperator op(a);
    const Vector y = random_matrix(gen, 8, 1);
    SolverConfig cfg;
    cfg.lambda = 0.1;
    cfg.max_iters = 20000;
    cfg.tol = 1e-9;
    const SolveResult r = fb_solve(op, PenaltyKind::L1, cfg, y);
    SolverConfig longrun = cfg;
    longrun.tol = 1e-12;
    longrun.max_iters = 100000;
    const SolveResult ref = fb_solve(op, PenaltyKind::L1, longrun, y);
    CHECK(std::abs(oracle::l1_objective(a, y, cfg.lambda, r.coefficients) -
                   oracle::l1_objective(a, y, cfg.lambda, ref.coefficients)) <= 1e-6);
  }
}

TEST_CASE("sparsity does not grow with lambda") {
  std::mt19937_64 gen(8);
  const DenseOperator op(random_matrix(gen, 8, 20));
  const Vector y = random_matrix(gen, 8, 1);
  for (auto kind : kAllKinds) {
    CAPTURE(to_string(kind));
    Eigen::Index prev = 21;
    for (double lambda : {1e-3, 1e-2, 0.1, 0.5, 2.0, 10.0}) {
      SolverConfig cfg;
      cfg.lambda = lambda;
      cfg.tol = 1e-10;
      cfg.max_iters = 20000;
      const Eigen::Index nz = nonzeros(fb_solve(op, kind, cfg, y).coefficients);
      CAPTURE(lambda);
      CHECK(nz <= prev);
      prev = nz;
    }
  }
}

TEST_CASE("solver parameter and gate errors") {
  std::mt19937_64 gen(9);
  const DenseOperator op(random_matrix(gen, 4, 6));
  const Vector y = random_matrix(gen, 4, 1);
  SolverConfig cfg;

  StepPlan plan = plan_step(op, PenaltyKind::Cauchy, cfg);
  CHECK(plan.gamma == doctest::Approx(1.01 * plan.gamma_bar).epsilon(1e-15));
  CHECK(plan.mu * plan.lipschitz == doctest::Approx(1.0).epsilon(1e-15));
  plan.gamma = 0.5 * plan.gamma_bar;
  CHECK_THROWS_AS(fb_solve(op, plan, cfg, y), ConvexityGateError);

  SolverConfig big = cfg;
  big.mu = 2.0 / plan.lipschitz;
  CHECK_THROWS_AS(plan_step(op, PenaltyKind::L1, big), ParameterError);

  SolverConfig bad = cfg;
  bad.tau = 1.0;
  CHECK_THROWS_AS(fb_solve(op, PenaltyKind::MCP, bad, y), ParameterError);
  bad = cfg;
  bad.lambda = 0.0;
  CHECK_THROWS_AS(fb_solve(op, PenaltyKind::MCP, bad, y), ParameterError);

  CHECK_THROWS_AS(fb_solve(DenseOperator(Matrix::Zero(4, 6)), PenaltyKind::L1, cfg, y), ParameterError);
  CHECK_THROWS_AS(fb_solve(op, PenaltyKind::L1, cfg, Vector::Zero(3)), DimensionError);
  Vector nan_y = y;
  nan_y[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fb_solve(op, PenaltyKind::L1, cfg, nan_y), NumericError);
}

TEST_CASE("smaller step sizes are accepted") {
  std::mt19937_64 gen(10);
  const DenseOperator op(random_matrix(gen, 4, 6));
  const Vector y = random_matrix(gen, 4, 1);
  SolverConfig cfg;
  const double l = lipschitz_constant(op).value;
  cfg.mu = 0.5 / l;
  const StepPlan plan = plan_step(op, PenaltyKind::MCP, cfg);
  CHECK(plan.mu == 0.5 / l);
  CHECK(plan.gamma_bar == doctest::Approx(cfg.lambda * 0.5 / l));
  const SolveResult r = fb_solve(op, plan, cfg, y);
  for (std::size_t k = 0; k + 1 < r.objective_trace.size(); ++k) {
    CHECK(r.objective_trace[k + 1] <= r.objective_trace[k] + 1e-10);
  }
}
