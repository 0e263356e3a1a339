#pragma once

#include <Eigen/Core>

#include <functional>
#include <limits>
#include <string_view>

namespace bvtomo {

/// Per-variable bounds. Infinite entries mean unbounded; lower == upper pins.
struct BoxSpec {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static BoxSpec unbounded(Eigen::Index n);
  static BoxSpec uniform(Eigen::Index n, double lo, double hi);
  void validate(Eigen::Index n) const;
  Eigen::VectorXd project(const Eigen::VectorXd& x) const;
  /// x - P(x - g), the first-order optimality residual on the box.
  Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g) const;
};

enum class StopReason { Converged, MaxEvaluations, LineSearchFailed };

std::string_view to_string(StopReason r);

struct SolveReport {
  int iterations = 0;
  int evaluations = 0;
  double objective = 0.0;
  double projected_gradient = 0.0;  // infinity norm at the returned point
  StopReason reason = StopReason::Converged;
};

struct MinimizeOptions {
  double tol = 1e-6;
  int max_evals = 500;
  int memory = 10;
  /// Cap on the infinity norm of a trial step. Keeps early quasi-Newton steps
  /// from jumping across the box before curvature is known.
  double max_step = std::numeric_limits<double>::infinity();
  double armijo = 1e-4;
};

/// Fills `grad` and returns the objective value at x.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct MinimizeResult {
  Eigen::VectorXd x;
  SolveReport report;
};

/// Projected limited-memory BFGS with Armijo backtracking along the projected
/// path. Every iterate is feasible; the objective never increases.
MinimizeResult minimize(const Objective& f, const Eigen::VectorXd& x0, const BoxSpec& box,
                        const MinimizeOptions& opts = {});

}  // namespace bvtomo
