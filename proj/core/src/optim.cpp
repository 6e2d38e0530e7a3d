#include "synthlat/optim.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

namespace synthlat::optim {

RealMatrix numerical_jacobian(const ResidualFn& residual, const RealVector& x,
                              double rel_step) {
  const RealVector r0 = residual(x);
  RealMatrix jac(r0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = rel_step * std::max(1.0, std::abs(x[j]));
    RealVector xp = x;
    xp[j] += h;
    jac.col(j) = (residual(xp) - r0) / h;
  }
  return jac;
}

LmResult levenberg_marquardt(const ResidualFn& residual, const RealVector& x0,
                             const LmOptions& options,
                             const std::optional<JacobianFn>& jacobian) {
  LmResult result;
  result.params = x0;

  RealVector r = residual(result.params);
  double cost = 0.5 * r.squaredNorm();
  double lambda = options.lambda_init;

  for (int it = 0; it < options.max_iterations; ++it) {
    result.iterations = it + 1;
    const RealMatrix jac = jacobian ? (*jacobian)(result.params)
                                    : numerical_jacobian(residual, result.params);
    const RealMatrix jtj = jac.transpose() * jac;
    const RealVector grad = jac.transpose() * r;
    result.jtj = jtj;

    if (grad.lpNorm<Eigen::Infinity>() < options.gradient_tol) {
      result.converged = true;
      break;
    }

    // Jacobi scaling keeps the damped solve well conditioned when parameter
    // magnitudes span many decades (rad/s rates next to dimensionless ratios).
    const Eigen::Index n_params = jtj.rows();
    RealVector scale(n_params);
    const double diag_floor = 1e-14 * jtj.diagonal().maxCoeff() + 1e-300;
    for (Eigen::Index k = 0; k < n_params; ++k) {
      scale[k] = 1.0 / std::sqrt(std::max(jtj(k, k), diag_floor));
    }
    const RealMatrix jtj_scaled =
        scale.asDiagonal() * jtj * scale.asDiagonal();
    const RealVector grad_scaled = scale.asDiagonal() * grad;

    bool stepped = false;
    while (lambda <= options.lambda_max) {
      RealMatrix damped = jtj_scaled;
      damped.diagonal().array() += lambda;
      const RealVector step =
          scale.asDiagonal() * damped.ldlt().solve(RealVector(-grad_scaled));
      const RealVector trial = result.params + step;
      const RealVector r_trial = residual(trial);
      const double cost_trial = 0.5 * r_trial.squaredNorm();
      if (std::isfinite(cost_trial) && cost_trial < cost) {
        const double rel_step =
            step.norm() / std::max(1e-300, result.params.norm());
        const double rel_decrease = (cost - cost_trial) / std::max(cost, 1e-300);
        result.params = trial;
        r = r_trial;
        cost = cost_trial;
        lambda = std::max(lambda * 0.35, 1e-12);
        stepped = true;
        if (rel_step < options.step_tol || rel_decrease < options.function_tol) {
          result.converged = true;
        }
        break;
      }
      lambda *= 4.0;
    }
    if (!stepped) {
      // No damping level improves the cost: stationary to working precision.
      result.converged = true;
      break;
    }
    if (result.converged) break;
  }

  result.cost = cost;
  if (result.jtj.size() == 0) {
    const RealMatrix jac = jacobian ? (*jacobian)(result.params)
                                    : numerical_jacobian(residual, result.params);
    result.jtj = jac.transpose() * jac;
  }
  return result;
}

RealVector relative_uncertainties(const LmResult& result, int n_residuals) {
  const auto n_params = result.jtj.rows();
  const int dof = std::max(1, n_residuals - static_cast<int>(n_params));
  const double variance = 2.0 * result.cost / dof;

  // Pseudo-inverse through LDLT with a fallback for singular curvature.
  RealMatrix cov = RealMatrix::Zero(n_params, n_params);
  Eigen::LDLT<RealMatrix> ldlt(result.jtj);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    cov = ldlt.solve(RealMatrix::Identity(n_params, n_params)) * variance;
  } else {
    cov.setConstant(std::numeric_limits<double>::infinity());
  }

  RealVector rel(n_params);
  for (Eigen::Index k = 0; k < n_params; ++k) {
    const double sigma = std::sqrt(std::max(0.0, cov(k, k)));
    rel[k] = sigma / std::max(1e-300, std::abs(result.params[k]));
  }
  return rel;
}

}  // namespace synthlat::optim
