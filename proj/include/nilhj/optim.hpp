#pragma once

#include <Eigen/Dense>
#include <functional>

#include "nilhj/errors.hpp"

namespace nilhj {

using VecX = Eigen::VectorXd;

/// f(x) with gradient written into the second argument.
using ObjectiveFn = std::function<double(const VecX&, VecX&)>;
/// c(x) with Jacobian written into the second argument (rows = constraints).
using ConstraintFn = std::function<VecX(const VecX&, Eigen::MatrixXd&)>;

struct LbfgsOptions {
  int max_iters = 400;
  double grad_tol = 1e-10;
  int memory = 8;
};

struct LbfgsResult {
  VecX x;
  double f = 0.0;
  double grad_norm = 0.0;
  int iters = 0;
};

/// Limited-memory BFGS with Armijo backtracking.
LbfgsResult lbfgs_minimize(const ObjectiveFn& fg, const VecX& x0, const LbfgsOptions& opts = {});

struct AugLagOptions {
  int max_outer = 40;
  double constraint_tol = 1e-6;  // infinity norm of the residual
  double rho0 = 10.0;
  double rho_growth = 4.0;
  LbfgsOptions inner;
};

struct AugLagResult {
  VecX x;
  double objective = 0.0;   // bare objective at the returned point
  VecX residual;
  bool converged = false;
};

/// Quadratic-penalty method with multiplier updates for equality constraints.
AugLagResult auglag_minimize(const ObjectiveFn& fg, const ConstraintFn& cons, const VecX& x0,
                             const AugLagOptions& opts = {});

}  // namespace nilhj
