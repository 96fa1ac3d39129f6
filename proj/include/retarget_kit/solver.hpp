#pragma once

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace rkit {

struct SolverSettings {
  int max_iterations = 100;
  double gradient_tolerance = 1e-6; // on the inf-norm of the projected gradient
  double fd_step = 1e-6; // central-difference step
  double initial_damping = 1e-3;
  double damping_increase = 10.0;
  double damping_decrease = 0.3;
  double max_damping = 1e12;
  int backtracking_steps = 3; // halvings tried before raising the damping
};

struct SolverResult {
  Eigen::VectorXd x;
  double initial_objective = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Objective after every accepted step, starting with the initial value.
  std::vector<double> accepted_objectives;
};

using ResidualFunction = std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& residuals)>;

/// Box-constrained damped Gauss-Newton minimizing ||r(x)||^2.
///
/// Jacobians come from central differences. Each iteration solves
/// (J^T J + mu I) dx = -J^T r, projects x + dx into [lower, upper] and accepts
/// only if the objective strictly decreases; otherwise it halves the step a
/// few times, then raises mu. Stops when the projected gradient inf-norm
/// drops below the tolerance, after max_iterations, or when mu saturates.
/// Throws NonFiniteObjective when the starting objective is not finite.
SolverResult minimize_least_squares(
    const ResidualFunction& residuals,
    const Eigen::VectorXd& x0,
    const Eigen::VectorXd& lower,
    const Eigen::VectorXd& upper,
    const SolverSettings& settings = {});

} // namespace rkit
