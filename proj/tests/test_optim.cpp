#include <doctest.h>

#include <cmath>

#include "synthlat/optim.hpp"

using namespace synthlat;
using namespace synthlat::optim;

TEST_CASE("levenberg-marquardt: exponential decay fit recovers its generator") {
  const double a_true = 2.3, k_true = 1.7;
  std::vector<double> t, y;
  for (int i = 0; i <= 40; ++i) {
    t.push_back(0.1 * i);
    y.push_back(a_true * std::exp(-k_true * 0.1 * i));
  }
  auto residual = [&](const RealVector& x) {
    RealVector r(static_cast<Eigen::Index>(t.size()));
    for (size_t i = 0; i < t.size(); ++i) {
      r[static_cast<Eigen::Index>(i)] = x[0] * std::exp(-x[1] * t[i]) - y[i];
    }
    return r;
  };
  RealVector x0(2);
  x0 << 1.0, 1.0;
  const auto fit = levenberg_marquardt(residual, x0);
  CHECK(fit.converged);
  CHECK(fit.params[0] == doctest::Approx(a_true).epsilon(1e-8));
  CHECK(fit.params[1] == doctest::Approx(k_true).epsilon(1e-8));

  SUBCASE("analytic Jacobian reaches the same optimum") {
    auto jacobian = [&](const RealVector& x) {
      RealMatrix j(static_cast<Eigen::Index>(t.size()), 2);
      for (size_t i = 0; i < t.size(); ++i) {
        const double e = std::exp(-x[1] * t[i]);
        j(static_cast<Eigen::Index>(i), 0) = e;
        j(static_cast<Eigen::Index>(i), 1) = -x[0] * t[i] * e;
      }
      return j;
    };
    const auto fit2 = levenberg_marquardt(residual, x0, {}, jacobian);
    CHECK(fit2.params[0] == doctest::Approx(a_true).epsilon(1e-8));
    CHECK(fit2.params[1] == doctest::Approx(k_true).epsilon(1e-8));
  }
}

TEST_CASE("levenberg-marquardt: linear problems converge immediately") {
  auto residual = [](const RealVector& x) {
    RealVector r(3);
    r << x[0] - 1.0, x[0] + x[1] - 3.0, x[1] - 2.0;
    return r;
  };
  RealVector x0 = RealVector::Zero(2);
  const auto fit = levenberg_marquardt(residual, x0);
  CHECK(fit.converged);
  CHECK(fit.params[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(fit.params[1] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(fit.cost < 1e-20);
}

TEST_CASE("relative uncertainties flag unconstrained directions") {
  // y depends on x0 only; x1 is along a flat direction.
  auto residual = [](const RealVector& x) {
    RealVector r(8);
    for (int i = 0; i < 8; ++i) r[i] = x[0] * (i + 1) - 2.0 * (i + 1) + 1e-9 * x[1];
    return r;
  };
  RealVector x0(2);
  x0 << 1.0, 1.0;
  const auto fit = levenberg_marquardt(residual, x0);
  const auto rel = relative_uncertainties(fit, 8);
  CHECK(rel[1] > 100.0 * rel[0]);
}
