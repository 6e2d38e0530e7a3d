#pragma once

#include <functional>
#include <optional>

#include "synthlat/common.hpp"

namespace synthlat::optim {

using ResidualFn = std::function<RealVector(const RealVector&)>;
using JacobianFn = std::function<RealMatrix(const RealVector&)>;

struct LmOptions {
  int max_iterations = 200;
  double gradient_tol = 1e-12;   ///< stop when ||J^T r||_inf falls below
  double step_tol = 1e-14;       ///< stop on relative parameter step
  double function_tol = 1e-14;   ///< stop on relative cost decrease
  double lambda_init = 1e-3;
  double lambda_max = 1e12;
};

struct LmResult {
  RealVector params;
  double cost = 0.0;             ///< 0.5 * ||r||^2 at the solution
  int iterations = 0;
  bool converged = false;
  RealMatrix jtj;                ///< J^T J at the solution (curvature)
};

/// Dense Levenberg-Marquardt with multiplicative damping. Supply an analytic
/// Jacobian where available; otherwise a forward-difference one is used.
LmResult levenberg_marquardt(const ResidualFn& residual, const RealVector& x0,
                             const LmOptions& options = {},
                             const std::optional<JacobianFn>& jacobian = std::nullopt);

/// Forward-difference Jacobian with per-parameter relative steps.
RealMatrix numerical_jacobian(const ResidualFn& residual, const RealVector& x,
                              double rel_step = 1e-7);

/// Relative 1-sigma parameter uncertainties from (J^T J)^-1 scaled by the
/// residual variance; used to detect poorly constrained directions.
RealVector relative_uncertainties(const LmResult& result, int n_residuals);

}  // namespace synthlat::optim
