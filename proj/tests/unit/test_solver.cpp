#include "retarget_kit/errors.hpp"
#include "retarget_kit/solver.hpp"

#include <Eigen/Cholesky>
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

namespace rkit {
namespace {

using Eigen::VectorXd;
constexpr double kInf = std::numeric_limits<double>::infinity();

VectorXd unbounded(int n, double sign) {
  return VectorXd::Constant(n, sign * kInf);
}

void expectMonotone(const SolverResult& r) {
  ASSERT_FALSE(r.accepted_objectives.empty());
  EXPECT_EQ(r.accepted_objectives.front(), r.initial_objective);
  EXPECT_EQ(r.accepted_objectives.back(), r.objective);
  for (size_t k = 1; k < r.accepted_objectives.size(); ++k) {
    EXPECT_LE(r.accepted_objectives[k], r.accepted_objectives[k - 1]);
  }
}

TEST(Solver, LinearLeastSquaresMatchesNormalEquations) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n;
  Eigen::MatrixXd a(12, 4);
  VectorXd b(12);
  for (int i = 0; i < 12; ++i) {
    b[i] = n(rng);
    for (int j = 0; j < 4; ++j) {
      a(i, j) = n(rng);
    }
  }
  auto f = [&](const VectorXd& x, VectorXd& r) { r = a * x - b; };
  const SolverResult res = minimize_least_squares(f, VectorXd::Zero(4), unbounded(4, -1), unbounded(4, 1));
  const VectorXd expected = (a.transpose() * a).ldlt().solve(a.transpose() * b);
  EXPECT_TRUE(res.converged);
  EXPECT_LE((res.x - expected).norm(), 1e-6);
  expectMonotone(res);
}

TEST(Solver, Rosenbrock) {
  auto f = [](const VectorXd& x, VectorXd& r) {
    r.resize(2);
    r << 10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0];
  };
  SolverSettings s;
  s.max_iterations = 500;
  const SolverResult res = minimize_least_squares(
      f, (VectorXd(2) << -1.2, 1.0).finished(), unbounded(2, -1), unbounded(2, 1), s);
  EXPECT_TRUE(res.converged);
  EXPECT_LE((res.x - VectorXd::Ones(2)).norm(), 1e-5);
  EXPECT_LE(res.objective, 1e-10);
  expectMonotone(res);
}

TEST(Solver, BoxConstraintActive) {
  // minimum at x = 2 lies outside [-1, 1]
  auto f = [](const VectorXd& x, VectorXd& r) {
    r.resize(2);
    r << x[0] - 2.0, x[1] + 0.25;
  };
  const VectorXd lo = VectorXd::Constant(2, -1.0);
  const VectorXd hi = VectorXd::Constant(2, 1.0);
  const SolverResult res = minimize_least_squares(f, VectorXd::Zero(2), lo, hi);
  EXPECT_TRUE(res.converged);
  EXPECT_DOUBLE_EQ(res.x[0], 1.0);
  // stationarity: |2 (x + 0.25)| <= gradient tolerance
  EXPECT_NEAR(res.x[1], -0.25, 0.5 * SolverSettings{}.gradient_tolerance);
  EXPECT_NEAR(res.objective, 1.0, 1e-12);
  expectMonotone(res);
}

TEST(Solver, StartAtOptimumIsConverged) {
  auto f = [](const VectorXd& x, VectorXd& r) { r = x; };
  const SolverResult res = minimize_least_squares(f, VectorXd::Zero(3), unbounded(3, -1), unbounded(3, 1));
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.iterations, 0);
  EXPECT_EQ(res.objective, 0.0);
}

TEST(Solver, IterationCapReported) {
  auto f = [](const VectorXd& x, VectorXd& r) {
    r.resize(2);
    r << 10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0];
  };
  SolverSettings s;
  s.max_iterations = 2;
  const SolverResult res = minimize_least_squares(
      f, (VectorXd(2) << -1.2, 1.0).finished(), unbounded(2, -1), unbounded(2, 1), s);
  EXPECT_FALSE(res.converged);
  EXPECT_LE(res.iterations, 2);
  EXPECT_LE(res.objective, res.initial_objective);
}

TEST(Solver, NonFiniteStartThrows) {
  auto f = [](const VectorXd& x, VectorXd& r) { r = x.array().log(); };
  EXPECT_THROW(
      minimize_least_squares(f, (VectorXd(1) << -1.0).finished(), unbounded(1, -1), unbounded(1, 1)),
      NonFiniteObjective);
}

TEST(Solver, RandomNonlinearProblemsMonotone) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 50; ++trial) {
    const VectorXd c = VectorXd::NullaryExpr(3, [&] { return u(rng); });
    auto f = [&](const VectorXd& x, VectorXd& r) {
      r.resize(4);
      r << std::sin(x[0]) - c[0] * 0.3, x[1] * x[2] - c[1], std::exp(0.3 * x[2]) - 1.0 - 0.1 * c[2],
          0.1 * x.squaredNorm();
    };
    const VectorXd x0 = VectorXd::NullaryExpr(3, [&] { return u(rng); });
    const SolverResult res = minimize_least_squares(f, x0, VectorXd::Constant(3, -1.5), VectorXd::Constant(3, 1.5));
    expectMonotone(res);
    EXPECT_TRUE((res.x.array() >= -1.5).all() && (res.x.array() <= 1.5).all());
  }
}

} // namespace
} // namespace rkit
