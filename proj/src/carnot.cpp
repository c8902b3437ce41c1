#include "nilhj/carnot.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace nilhj {

int CarnotGroup::dim() const {
  int d = 0;
  for (int s : strata) d += s;
  return d;
}

CarnotGroup abelian_carnot(int n, V1Norm norm) {
  CarnotGroup g;
  g.tag = GroupTag::AbelianN;
  g.strata = {n};
  g.norm = norm;
  return g;
}

CarnotGroup heisenberg_carnot(V1Norm norm) {
  CarnotGroup g;
  g.tag = GroupTag::Heisenberg3;
  g.strata = {2, 1};
  g.norm = norm;
  return g;
}

CarnotPoint carnot_point(const CarnotGroup& g, const Vec& coords) {
  if (coords.size() != g.dim()) throw InputError("carnot_point: coordinate count mismatch");
  if (!coords.allFinite()) throw InputError("carnot_point: non-finite coordinates");
  return CarnotPoint{g.tag, coords};
}

CarnotPoint carnot_identity(const CarnotGroup& g) {
  return CarnotPoint{g.tag, Vec::Zero(g.dim())};
}

CarnotPoint carnot_multiply(const CarnotGroup& g, const CarnotPoint& p, const CarnotPoint& q) {
  if (p.tag != g.tag || q.tag != g.tag) throw InputError("carnot_multiply: tag mismatch");
  CarnotPoint r{g.tag, p.x + q.x};
  if (g.tag == GroupTag::Heisenberg3)
    r.x(2) = p.x(2) + q.x(2) + 0.5 * (p.x(0) * q.x(1) - p.x(1) * q.x(0));
  return r;
}

CarnotPoint carnot_inverse(const CarnotGroup& g, const CarnotPoint& p) {
  if (p.tag != g.tag) throw InputError("carnot_inverse: tag mismatch");
  return CarnotPoint{g.tag, -p.x};
}

CarnotPoint dilate(const CarnotGroup& g, double lambda, const CarnotPoint& p) {
  if (p.tag != g.tag) throw InputError("dilate: tag mismatch");
  if (!std::isfinite(lambda)) throw InputError("dilate: non-finite scale");
  CarnotPoint r{g.tag, p.x};
  int off = 0;
  double factor = 1.0;
  for (int s : g.strata) {
    factor *= lambda;
    r.x.segment(off, s) *= factor;
    off += s;
  }
  return r;
}

double v1_norm(const CarnotGroup& g, const Vec& u) {
  switch (g.norm) {
    case V1Norm::L1:
      return u.lpNorm<1>();
    case V1Norm::L2:
      return u.norm();
    case V1Norm::Linf:
      return u.lpNorm<Eigen::Infinity>();
    case V1Norm::Polytope: {
      if (g.polytope_functionals.empty())
        throw InputError("v1_norm: polytope norm without functionals");
      double m = 0.0;
      for (const Vec& w : g.polytope_functionals) m = std::max(m, w.dot(u));
      return m;
    }
  }
  throw InputError("v1_norm: unknown norm tag");
}

CarnotPoint horizontal_endpoint(const CarnotGroup& g, const HorizontalPath& path) {
  const int N = path.pieces();
  if (N < 1) throw InputError("horizontal_endpoint: empty path");
  if (path.controls.rows() != g.v1_dim())
    throw InputError("horizontal_endpoint: control dimension mismatch");
  const double tau = 1.0 / N;
  CarnotPoint r = carnot_identity(g);
  if (g.tag == GroupTag::AbelianN) {
    r.x = path.controls.rowwise().sum() * tau;
    return r;
  }
  // Each constant-control piece is a straight planar segment; the vertical
  // coordinate gains half the cross product of position and displacement.
  double X = 0.0, Y = 0.0, S = 0.0;
  for (int k = 0; k < N; ++k) {
    const double a = path.controls(0, k), b = path.controls(1, k);
    S += 0.5 * tau * (X * b - Y * a);
    X += tau * a;
    Y += tau * b;
  }
  r.x << X, Y, S;
  return r;
}

double path_length(const CarnotGroup& g, const HorizontalPath& path) {
  const double tau = 1.0 / path.pieces();
  double len = 0.0;
  for (int k = 0; k < path.pieces(); ++k) len += tau * v1_norm(g, path.controls.col(k));
  return len;
}

namespace {

// Endpoint map in exponential coordinates, with Jacobian, for stacked
// controls U = [u_1; ...; u_N].
Vec endpoint_coords(const CarnotGroup& g, const VecX& U, int N, Eigen::MatrixXd* jac) {
  const int dv = g.v1_dim();
  const double tau = 1.0 / N;
  if (g.tag == GroupTag::AbelianN) {
    Vec e = Vec::Zero(dv);
    for (int k = 0; k < N; ++k) e += tau * U.segment(k * dv, dv);
    if (jac) {
      jac->setZero(dv, N * dv);
      for (int k = 0; k < N; ++k)
        for (int i = 0; i < dv; ++i) (*jac)(i, k * dv + i) = tau;
    }
    return e;
  }
  // Heisenberg: S is an antisymmetric quadratic form in the controls.
  double X = 0.0, Y = 0.0, S = 0.0;
  for (int k = 0; k < N; ++k) {
    const double a = U(2 * k), b = U(2 * k + 1);
    S += 0.5 * tau * (X * b - Y * a);
    X += tau * a;
    Y += tau * b;
  }
  Vec e(3);
  e << X, Y, S;
  if (jac) {
    jac->setZero(3, 2 * N);
    // prefix/suffix sums of the controls
    VecX pa(N + 1), pb(N + 1);
    pa(0) = pb(0) = 0.0;
    for (int k = 0; k < N; ++k) {
      pa(k + 1) = pa(k) + U(2 * k);
      pb(k + 1) = pb(k) + U(2 * k + 1);
    }
    const double ta = pa(N), tb = pb(N);
    const double c = 0.5 * tau * tau;
    // dS/da_k = c * (B_after - B_before), dS/db_k = c * (A_before - A_after)
    for (int k = 0; k < N; ++k) {
      (*jac)(0, 2 * k) = tau;
      (*jac)(1, 2 * k + 1) = tau;
      (*jac)(2, 2 * k) = c * ((tb - pb(k + 1)) - pb(k));
      (*jac)(2, 2 * k + 1) = c * (pa(k) - (ta - pa(k + 1)));
    }
  }
  return e;
}

}  // namespace

HorizontalOptimResult minimize_over_horizontal_paths(
    const CarnotGroup& g, const CarnotPoint& target,
    const std::function<double(const Vec&, Vec&)>& piece_cost,
    const HorizontalOptimOptions& opts) {
  const int N = opts.pieces;
  const int dv = g.v1_dim();
  if (N < 1) throw InputError("horizontal optimization: need at least one piece");
  if (g.tag == GroupTag::Heisenberg3 && std::abs(target.x(2)) > 1e-14 && N < 4)
    throw InputError("horizontal optimization: N >= 4 required for central targets");

  // Per-coordinate residual scaling: tolerance is relative on large targets.
  Vec scale(g.dim());
  for (int i = 0; i < g.dim(); ++i) scale(i) = std::max(1.0, std::abs(target.x(i)));

  ObjectiveFn objective = [&](const VecX& U, VecX& grad) -> double {
    grad.setZero(U.size());
    double total = 0.0;
    Vec gpiece(dv);
    for (int k = 0; k < N; ++k) {
      const Vec u = U.segment(k * dv, dv);
      total += piece_cost(u, gpiece) / N;
      grad.segment(k * dv, dv) = gpiece / N;
    }
    return total;
  };
  ConstraintFn constraint = [&](const VecX& U, Eigen::MatrixXd& J) -> VecX {
    Eigen::MatrixXd Jraw;
    const Vec e = endpoint_coords(g, U, N, &Jraw);
    J = Jraw;
    VecX r = e - target.x;
    for (int i = 0; i < r.size(); ++i) {
      r(i) /= scale(i);
      J.row(i) /= scale(i);
    }
    return r;
  };

  // Initial guess: constant control toward the V1 part, plus a circular
  // harmonic sized to the vertical deficit (Heisenberg only).
  const Vec qv1 = target.x.head(dv);
  VecX base(N * dv);
  for (int k = 0; k < N; ++k) base.segment(k * dv, dv) = qv1;
  if (g.tag == GroupTag::Heisenberg3) {
    const double ds = target.x(2);
    if (std::abs(ds) > 1e-14) {
      const double R = std::sqrt(std::abs(ds) / std::numbers::pi);
      const double sgn = ds > 0 ? 1.0 : -1.0;
      for (int k = 0; k < N; ++k) {
        const double th = 2.0 * std::numbers::pi * (k + 0.5) / N;
        base(2 * k) += -2.0 * std::numbers::pi * R * std::sin(th);
        base(2 * k + 1) += sgn * 2.0 * std::numbers::pi * R * std::cos(th);
      }
    }
  }

  AugLagOptions alopts = opts.auglag;
  alopts.constraint_tol = opts.endpoint_tol;

  HorizontalOptimResult best;
  double best_obj = std::numeric_limits<double>::infinity();
  double best_res = std::numeric_limits<double>::infinity();
  const double noise =
      0.5 * (qv1.norm() + std::sqrt(std::abs(target.x(g.dim() - 1))) + 0.5);
  for (int r = 0; r < std::max(1, opts.restarts); ++r) {
    VecX x0 = base;
    if (r > 0) {
      std::mt19937_64 rng(opts.seed * 1000003ull + static_cast<std::uint64_t>(r));
      std::normal_distribution<double> dist(0.0, noise);
      for (int i = 0; i < x0.size(); ++i) x0(i) += dist(rng);
    }
    AugLagResult sol = auglag_minimize(objective, constraint, x0, alopts);
    const double res = sol.residual.cwiseAbs().maxCoeff();
    if (res <= opts.endpoint_tol && sol.objective < best_obj) {
      best_obj = sol.objective;
      best.objective = sol.objective;
      best.residual = res;
      best.winner = r;
      best.path.controls = Eigen::Map<const Eigen::MatrixXd>(sol.x.data(), dv, N);
    }
    best_res = std::min(best_res, res);
  }
  if (best.winner < 0)
    throw NonconvergenceError("horizontal optimization: endpoint residual above tolerance",
                              best_res);
  return best;
}

namespace {

// Smoothed squared V1 norm with gradient; smooth at the origin so that the
// descent direction stays well defined for the L1/Linf/polytope cases.
std::function<double(const Vec&, Vec&)> energy_cost(const CarnotGroup& g, double smoothing) {
  switch (g.norm) {
    case V1Norm::L2:
      return [](const Vec& u, Vec& grad) {
        grad = 2.0 * u;
        return u.squaredNorm();
      };
    case V1Norm::L1:
      return [mu = smoothing](const Vec& u, Vec& grad) {
        double n = 0.0;
        Vec dn(u.size());
        for (int i = 0; i < u.size(); ++i) {
          const double s = std::sqrt(u(i) * u(i) + mu * mu);
          n += s - mu;
          dn(i) = u(i) / s;
        }
        grad = 2.0 * n * dn;
        return n * n;
      };
    case V1Norm::Linf:
    case V1Norm::Polytope:
      return [g, mu = smoothing](const Vec& u, Vec& grad) {
        std::vector<Vec> dirs;
        if (g.norm == V1Norm::Linf) {
          for (int i = 0; i < u.size(); ++i) {
            Vec w = Vec::Zero(u.size());
            w(i) = 1.0;
            dirs.push_back(w);
            dirs.push_back(-w);
          }
        } else {
          dirs = g.polytope_functionals;
        }
        // log-sum-exp smooth max
        double m = -std::numeric_limits<double>::infinity();
        for (const Vec& w : dirs) m = std::max(m, w.dot(u));
        double z = 0.0;
        Vec dz = Vec::Zero(u.size());
        for (const Vec& w : dirs) {
          const double e = std::exp((w.dot(u) - m) / mu);
          z += e;
          dz += e * w;
        }
        const double n = m + mu * std::log(z);
        grad = 2.0 * n * (dz / z);
        return n * n;
      };
  }
  throw InputError("energy_cost: unknown norm tag");
}

}  // namespace

CcResult cc_distance(const CarnotGroup& g, const CarnotPoint& p, const CarnotPoint& q,
                     const HorizontalOptimOptions& opts) {
  const CarnotPoint target = carnot_multiply(g, carnot_inverse(g, p), q);
  if (g.tag == GroupTag::AbelianN) {
    CcResult r;
    r.distance = v1_norm(g, target.x);
    r.path.controls = target.x;  // single straight piece
    r.residual = 0.0;
    return r;
  }
  const double hsize = target.x.head(2).norm() + std::sqrt(std::abs(target.x(2)));
  const double mu = 1e-6 * (1.0 + hsize);
  HorizontalOptimResult sol =
      minimize_over_horizontal_paths(g, target, energy_cost(g, mu), opts);
  CcResult r;
  // Minimal energy equals squared length: the minimizer has constant speed.
  r.distance = std::sqrt(std::max(0.0, sol.objective));
  r.path = sol.path;
  r.residual = sol.residual;
  return r;
}

GroupElement rescale_map_h(const CarnotGroup& g, const GroupPresentation& gamma, double eps,
                           const CarnotPoint& xbar) {
  if (!(eps > 0.0) || eps > 1.0) throw InputError("rescale_map_h: eps must be in (0,1]");
  if (gamma.tag != g.tag) throw InputError("rescale_map_h: lattice/group tag mismatch");
  const CarnotPoint p = dilate(g, 1.0 / eps, xbar);
  GroupElement out = group_identity(gamma.tag, gamma.dim);
  if (g.tag == GroupTag::AbelianN) {
    for (int i = 0; i < gamma.dim; ++i) out.c[i] = static_cast<std::int64_t>(std::floor(p.x(i)));
    return out;
  }
  const double a = std::floor(p.x(0));
  const double b = std::floor(p.x(1));
  const double c = std::floor(p.x(2) + a * b / 2.0 + (b * p.x(0) - a * p.x(1)) / 2.0);
  out.c = {static_cast<std::int64_t>(a), static_cast<std::int64_t>(b),
           static_cast<std::int64_t>(c)};
  return out;
}

CarnotPoint carnot_from_lattice(const CarnotGroup& g, const GroupElement& gamma) {
  if (gamma.tag != g.tag) throw InputError("carnot_from_lattice: tag mismatch");
  Vec x(g.dim());
  if (g.tag == GroupTag::AbelianN) {
    for (int i = 0; i < g.dim(); ++i) x(i) = static_cast<double>(gamma.c[i]);
  } else {
    x(0) = static_cast<double>(gamma.c[0]);
    x(1) = static_cast<double>(gamma.c[1]);
    x(2) = static_cast<double>(gamma.c[2]) -
           static_cast<double>(gamma.c[0]) * static_cast<double>(gamma.c[1]) / 2.0;
  }
  return CarnotPoint{g.tag, x};
}

}  // namespace nilhj
