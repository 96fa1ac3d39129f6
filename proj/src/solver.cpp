#include "retarget_kit/solver.hpp"

#include "retarget_kit/errors.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace rkit {

namespace {

Eigen::MatrixXd centralJacobian(
    const ResidualFunction& f,
    const Eigen::VectorXd& x,
    Eigen::Index rows,
    double h) {
  Eigen::MatrixXd jac(rows, x.size());
  Eigen::VectorXd xp = x;
  Eigen::VectorXd rPlus(rows);
  Eigen::VectorXd rMinus(rows);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    f(xp, rPlus);
    xp[i] = x[i] - h;
    f(xp, rMinus);
    xp[i] = x[i];
    jac.col(i) = (rPlus - rMinus) / (2.0 * h);
  }
  return jac;
}

// Gradient components pushing against an active bound are dropped.
double projectedGradientNorm(
    const Eigen::VectorXd& grad,
    const Eigen::VectorXd& x,
    const Eigen::VectorXd& lower,
    const Eigen::VectorXd& upper) {
  double g = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if ((x[i] <= lower[i] && grad[i] > 0.0) || (x[i] >= upper[i] && grad[i] < 0.0)) {
      continue;
    }
    g = std::max(g, std::abs(grad[i]));
  }
  return g;
}

} // namespace

SolverResult minimize_least_squares(
    const ResidualFunction& f,
    const Eigen::VectorXd& x0,
    const Eigen::VectorXd& lower,
    const Eigen::VectorXd& upper,
    const SolverSettings& s) {
  if (lower.size() != x0.size() || upper.size() != x0.size()) {
    throw DimensionMismatch("solver bounds do not match the variable count");
  }
  SolverResult out;
  out.x = x0.cwiseMax(lower).cwiseMin(upper);

  Eigen::VectorXd r;
  f(out.x, r);
  out.objective = r.squaredNorm();
  out.initial_objective = out.objective;
  if (!std::isfinite(out.objective)) {
    throw NonFiniteObjective("objective is not finite at the starting point");
  }
  out.accepted_objectives.push_back(out.objective);
  if (x0.size() == 0) {
    out.converged = true;
    return out;
  }

  double mu = s.initial_damping;
  Eigen::VectorXd rTrial(r.size());
  while (out.iterations < s.max_iterations) {
    const Eigen::MatrixXd jac = centralJacobian(f, out.x, r.size(), s.fd_step);
    const Eigen::VectorXd jtr = jac.transpose() * r;
    if (!jtr.allFinite()) {
      throw NonFiniteObjective("objective gradient is not finite");
    }
    if (projectedGradientNorm(2.0 * jtr, out.x, lower, upper) < s.gradient_tolerance) {
      out.converged = true;
      break;
    }
    ++out.iterations;

    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    bool accepted = false;
    while (!accepted && mu <= s.max_damping) {
      Eigen::MatrixXd lhs = jtj;
      lhs.diagonal().array() += mu;
      const Eigen::VectorXd step = lhs.ldlt().solve(-jtr);
      double alpha = 1.0;
      for (int b = 0; b <= s.backtracking_steps; ++b, alpha *= 0.5) {
        const Eigen::VectorXd trial = (out.x + alpha * step).cwiseMax(lower).cwiseMin(upper);
        f(trial, rTrial);
        const double obj = rTrial.squaredNorm();
        if (std::isfinite(obj) && obj < out.objective) {
          out.x = trial;
          r = rTrial;
          out.objective = obj;
          out.accepted_objectives.push_back(obj);
          accepted = true;
          break;
        }
      }
      if (accepted) {
        mu = std::max(mu * s.damping_decrease, 1e-12);
      } else {
        mu *= s.damping_increase;
      }
    }
    if (!accepted) {
      // no decrease possible at machine precision
      break;
    }
  }
  if (!out.converged && out.iterations >= s.max_iterations) {
    const Eigen::MatrixXd jac = centralJacobian(f, out.x, r.size(), s.fd_step);
    out.converged = projectedGradientNorm(2.0 * (jac.transpose() * r), out.x, lower, upper) <
        s.gradient_tolerance;
  }
  return out;
}

} // namespace rkit
