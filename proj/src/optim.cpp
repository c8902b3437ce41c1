#include "nilhj/optim.hpp"

#include <cmath>
#include <deque>

namespace nilhj {

LbfgsResult lbfgs_minimize(const ObjectiveFn& fg, const VecX& x0, const LbfgsOptions& opts) {
  const int n = static_cast<int>(x0.size());
  VecX x = x0, grad(n);
  double f = fg(x, grad);

  std::deque<VecX> s_hist, y_hist;
  std::deque<double> rho_hist;

  LbfgsResult res;
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    const double gnorm = grad.norm();
    if (gnorm <= opts.grad_tol) break;

    // two-loop recursion
    VecX q = grad;
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      const double gamma =
          s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      q *= gamma;
    }
    for (size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    VecX dir = -q;
    double slope = grad.dot(dir);
    if (!(slope < 0.0)) {  // fallback to steepest descent
      dir = -grad;
      slope = -gnorm * gnorm;
    }

    // Armijo backtracking
    double step = 1.0;
    VecX xn(n), gn(n);
    double fn = f;
    bool moved = false;
    for (int ls = 0; ls < 50; ++ls) {
      xn = x + step * dir;
      fn = fg(xn, gn);
      if (std::isfinite(fn) && fn <= f + 1e-4 * step * slope) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;

    VecX s = xn - x;
    VecX yv = gn - grad;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x = std::move(xn);
    grad = std::move(gn);
    f = fn;
  }

  res.x = std::move(x);
  res.f = f;
  res.grad_norm = grad.norm();
  res.iters = it;
  return res;
}

AugLagResult auglag_minimize(const ObjectiveFn& fg, const ConstraintFn& cons, const VecX& x0,
                             const AugLagOptions& opts) {
  VecX x = x0;
  Eigen::MatrixXd jac;
  VecX r = cons(x, jac);
  VecX lambda = VecX::Zero(r.size());
  double rho = opts.rho0;
  double prev_viol = r.cwiseAbs().maxCoeff();

  AugLagResult out;
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    ObjectiveFn merit = [&](const VecX& z, VecX& grad) -> double {
      VecX gz(z.size());
      const double f = fg(z, gz);
      Eigen::MatrixXd J;
      const VecX c = cons(z, J);
      grad = gz + J.transpose() * (lambda + rho * c);
      return f + lambda.dot(c) + 0.5 * rho * c.squaredNorm();
    };
    LbfgsResult inner = lbfgs_minimize(merit, x, opts.inner);
    x = inner.x;
    r = cons(x, jac);
    const double viol = r.cwiseAbs().maxCoeff();
    if (viol <= opts.constraint_tol) {
      out.converged = true;
      break;
    }
    lambda += rho * r;
    if (viol > 0.25 * prev_viol) rho *= opts.rho_growth;
    prev_viol = viol;
  }

  VecX g(x.size());
  out.objective = fg(x, g);
  out.x = std::move(x);
  out.residual = r;
  return out;
}

}  // namespace nilhj
