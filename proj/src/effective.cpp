#include "nilhj/effective.hpp"

#include <algorithm>
#include <cmath>

#include "nilhj/parallel.hpp"

namespace nilhj {

long BetaFunction::samples() const {
  long n = 1;
  for (int i = 0; i < dim; ++i) n *= npts(i);
  return n;
}

Vec BetaFunction::sample_point(long flat) const {
  Vec h(dim);
  for (int i = dim - 1; i >= 0; --i) {
    h(i) = h_min(i) + step * static_cast<double>(flat % npts(i));
    flat /= npts(i);
  }
  return h;
}

namespace {

long flat_of(const BetaFunction& b, const Eigen::VectorXi& idx) {
  long f = 0;
  for (int i = 0; i < b.dim; ++i) f = f * b.npts(i) + idx(i);
  return f;
}

}  // namespace

double beta_eval(const BetaFunction& beta, const Vec& h) {
  if (h.size() != beta.dim) throw InputError("beta_eval: dimension mismatch");
  if (beta.analytic) return beta.analytic(h);
  if (beta.values.size() == 0) throw InputError("beta_eval: empty table");
  // multilinear interpolation
  Eigen::VectorXi i0(beta.dim);
  Vec w(beta.dim);
  for (int i = 0; i < beta.dim; ++i) {
    const double r = (h(i) - beta.h_min(i)) / beta.step;
    if (r < -1e-9 || r > beta.npts(i) - 1 + 1e-9)
      throw RangeError("beta_eval: point outside the sampled box");
    double f = std::floor(r);
    if (f > beta.npts(i) - 2) f = beta.npts(i) - 2;
    if (f < 0) f = 0;
    i0(i) = static_cast<int>(f);
    w(i) = std::clamp(r - f, 0.0, 1.0);
  }
  double val = 0.0;
  const long corners = 1L << beta.dim;
  for (long c = 0; c < corners; ++c) {
    Eigen::VectorXi idx = i0;
    double weight = 1.0;
    for (int i = 0; i < beta.dim; ++i) {
      if (c & (1L << i)) {
        idx(i) += 1;
        weight *= w(i);
      } else {
        weight *= 1.0 - w(i);
      }
    }
    val += weight * beta.values(flat_of(beta, idx));
  }
  return val;
}

Vec beta_grad(const BetaFunction& beta, const Vec& h) {
  if (beta.analytic_grad) return beta.analytic_grad(h);
  Vec g(beta.dim);
  const double step = 1e-5 * (1.0 + h.cwiseAbs().maxCoeff());
  for (int i = 0; i < beta.dim; ++i) {
    Vec hp = h, hm = h;
    hp(i) += step;
    hm(i) -= step;
    g(i) = (beta_eval(beta, hp) - beta_eval(beta, hm)) / (2.0 * step);
  }
  return g;
}

BetaFunction quadratic_beta(int dim, double halfwidth, double step) {
  BetaFunction b;
  b.dim = dim;
  b.h_min = Vec::Constant(dim, -halfwidth);
  b.step = step;
  const int n = 2 * static_cast<int>(std::round(halfwidth / step)) + 1;
  b.npts = Eigen::VectorXi::Constant(dim, n);
  b.values.resize(b.samples());
  for (long f = 0; f < b.samples(); ++f) b.values(f) = 0.5 * b.sample_point(f).squaredNorm();
  b.error_bars = Eigen::ArrayXd::Zero(b.samples());
  b.convexified = true;
  b.analytic = [](const Vec& h) { return 0.5 * h.squaredNorm(); };
  b.analytic_grad = [](const Vec& h) { return h; };
  return b;
}

namespace {

// beta_T ladder -> Richardson extrapolation in 1/T.
double extrapolate_beta(const std::vector<double>& t_list, const std::vector<double>& vals,
                        double* err_bar) {
  const size_t n = t_list.size();
  if (n < 2) throw InputError("mather_beta: need at least two horizon values");
  std::vector<double> extr;
  for (size_t j = 0; j + 1 < n; ++j) {
    const double t0 = t_list[j], t1 = t_list[j + 1];
    extr.push_back((t1 * vals[j + 1] - t0 * vals[j]) / (t1 - t0));
  }
  double bar;
  if (extr.size() >= 2)
    bar = std::abs(extr.back() - extr[extr.size() - 2]);
  else
    bar = std::abs(extr.back() - vals.back());
  // tail monotonicity of the raw ladder, allowing the error-bar slack
  for (size_t j = 0; j + 2 < n; ++j) {
    const double g0 = std::abs(vals[j + 1] - vals[j]);
    const double g1 = std::abs(vals[j + 2] - vals[j + 1]);
    if (g1 > g0 + std::max(bar, 1e-12))
      throw NonconvergenceError("mather_beta: non-monotone averaging tail", g1 - g0);
  }
  if (err_bar) *err_bar = bar;
  return extr.back();
}

// Reads the beta_T ladder for one direction from a phi table seeded at 0.
std::vector<double> beta_ladder(const ValueTable& phi, const Vec& h,
                                const std::vector<double>& t_list) {
  std::vector<double> vals;
  for (double T : t_list) {
    Vec endpoint(h.size());
    for (int i = 0; i < h.size(); ++i) endpoint(i) = std::round(T * h(i));
    const int k = phi.slice_at(T);
    const long node = phi.node_at(endpoint);
    const double v = phi.slices[k](node);
    if (!std::isfinite(v)) throw RangeError("mather_beta: endpoint outside the reachable cone");
    if (!phi.boundary.empty() && phi.boundary[k][static_cast<size_t>(node)])
      throw ResolutionError("mather_beta: endpoint contaminated by the velocity cap");
    vals.push_back(v / T);
  }
  return vals;
}

void check_t_list(const std::vector<double>& t_list) {
  if (t_list.size() < 2) throw InputError("beta: t_list needs at least two horizons");
  for (size_t i = 1; i < t_list.size(); ++i)
    if (t_list[i] <= t_list[i - 1]) throw InputError("beta: t_list must be increasing");
}

}  // namespace

double mather_beta(const LagrangianModel& model, const Vec& h, const std::vector<double>& t_list,
                   const DiscretizationSpec& spec, bool normalize, double* err_bar) {
  check_t_list(t_list);
  const ValueTable phi = mane_potential(model, Vec::Zero(model.dim), spec, t_list.back());
  double value = extrapolate_beta(t_list, beta_ladder(phi, h, t_list), err_bar);
  if (normalize)
    value -= extrapolate_beta(t_list, beta_ladder(phi, Vec::Zero(model.dim), t_list), nullptr);
  return value;
}

BetaFunction sample_beta(const LagrangianModel& model, const DiscretizationSpec& spec,
                         const BetaSampleGrid& grid, const std::vector<double>& t_list,
                         bool normalize, int threads) {
  check_t_list(t_list);
  if (grid.h_min.size() != model.dim || grid.npts.size() != model.dim)
    throw InputError("sample_beta: grid dimension mismatch");
  const ValueTable phi = mane_potential(model, Vec::Zero(model.dim), spec, t_list.back());

  BetaFunction b;
  b.dim = model.dim;
  b.h_min = grid.h_min;
  b.step = grid.step;
  b.npts = grid.npts;
  b.values.resize(b.samples());
  b.error_bars.resize(b.samples());

  std::vector<std::string> failures(static_cast<size_t>(b.samples()));
  parallel_for(static_cast<size_t>(b.samples()), threads, [&](size_t f) {
    try {
      double bar = 0.0;
      const Vec h = b.sample_point(static_cast<long>(f));
      b.values(static_cast<long>(f)) =
          extrapolate_beta(t_list, beta_ladder(phi, h, t_list), &bar);
      b.error_bars(static_cast<long>(f)) = bar;
    } catch (const std::exception& e) {
      failures[f] = e.what();
    }
  });
  for (const auto& msg : failures)
    if (!msg.empty()) throw NonconvergenceError("sample_beta: " + msg, 0.0);

  if (normalize) {
    const double at_zero =
        extrapolate_beta(t_list, beta_ladder(phi, Vec::Zero(model.dim), t_list), nullptr);
    b.values -= at_zero;
    b.offset = at_zero;
  }
  convexify_beta(b);
  return b;
}

double convexify_beta(BetaFunction& beta) {
  if (beta.values.size() == 0) throw InputError("convexify_beta: empty table");
  // pairs of samples whose midpoint is itself a sample
  std::vector<std::array<long, 3>> triples;  // (i, mid, j)
  const long n = beta.samples();
  for (long i = 0; i < n; ++i) {
    for (long j = i + 1; j < n; ++j) {
      long ri = i, rj = j;
      long mid = 0;
      long stride = 1;
      bool ok = true;
      for (int a = beta.dim - 1; a >= 0; --a) {
        const long ii = ri % beta.npts(a);
        const long jj = rj % beta.npts(a);
        ri /= beta.npts(a);
        rj /= beta.npts(a);
        if ((ii + jj) % 2 != 0) {
          ok = false;
          break;
        }
        mid += stride * ((ii + jj) / 2);
        stride *= beta.npts(a);
      }
      if (ok && mid != i && mid != j) triples.push_back({i, mid, j});
    }
  }
  double worst = 0.0;
  for (int sweep = 0; sweep < 10000; ++sweep) {
    bool changed = false;
    for (const auto& t : triples) {
      const double avg = 0.5 * (beta.values(t[0]) + beta.values(t[2]));
      if (beta.values(t[1]) > avg + 1e-15) {
        worst = std::max(worst, beta.values(t[1]) - avg);
        beta.values(t[1]) = avg;
        changed = true;
      }
    }
    if (!changed) break;
  }
  beta.convexified = true;
  return worst;
}

double mather_alpha(const BetaFunction& beta, const Vec& p) {
  if (p.size() != beta.dim) throw InputError("mather_alpha: dimension mismatch");
  if (beta.values.size() == 0) throw InputError("mather_alpha: beta has no samples");
  if (!beta.convexified) throw InputError("mather_alpha: convexify beta before conjugation");
  double best = -std::numeric_limits<double>::infinity();
  long best_f = -1;
  for (long f = 0; f < beta.samples(); ++f) {
    const double v = p.dot(beta.sample_point(f)) - beta.values(f);
    if (v > best) {
      best = v;
      best_f = f;
    }
  }
  long rem = best_f;
  for (int a = beta.dim - 1; a >= 0; --a) {
    const long idx = rem % beta.npts(a);
    rem /= beta.npts(a);
    if (idx == 0 || idx == beta.npts(a) - 1)
      throw RangeError("mather_alpha: argmax on the sample-box boundary; widen the h-grid");
  }
  return best;
}

AlphaTable sample_alpha(const BetaFunction& beta, const Vec& p_min, double step,
                        const Eigen::VectorXi& npts) {
  AlphaTable a;
  a.p_min = p_min;
  a.step = step;
  a.npts = npts;
  long n = 1;
  for (int i = 0; i < npts.size(); ++i) n *= npts(i);
  a.values.resize(n);
  for (long f = 0; f < n; ++f) {
    Vec p(npts.size());
    long rem = f;
    for (int i = static_cast<int>(npts.size()) - 1; i >= 0; --i) {
      p(i) = p_min(i) + step * static_cast<double>(rem % npts(i));
      rem /= npts(i);
    }
    a.values(f) = mather_alpha(beta, p);
  }
  return a;
}

double beta_superlinearity_bound(const BetaFunction& beta, double slope) {
  double bound = 0.0;
  for (long f = 0; f < beta.samples(); ++f)
    bound = std::max(bound, slope * beta.sample_point(f).norm() - beta.values(f));
  return bound;
}

namespace {

// Extends a sampled beta beyond its box with steep linear growth so the path
// optimizer can evaluate trial controls anywhere; minimizers stay inside.
std::function<double(const Vec&, Vec&)> beta_piece_cost(const BetaFunction& beta) {
  if (beta.analytic && beta.analytic_grad) {
    return [&beta](const Vec& u, Vec& grad) {
      grad = beta.analytic_grad(u);
      return beta.analytic(u);
    };
  }
  double vmax = 0.0;
  for (long f = 0; f < beta.samples(); ++f) vmax = std::max(vmax, std::abs(beta.values(f)));
  const double growth = 10.0 * (1.0 + vmax) / std::max(beta.step, 1e-9);
  return [&beta, growth](const Vec& u, Vec& grad) {
    Vec clamped = u;
    double excess = 0.0;
    Vec dir = Vec::Zero(u.size());
    for (int i = 0; i < u.size(); ++i) {
      const double lo = beta.h_min(i);
      const double hi = beta.h_min(i) + beta.step * (beta.npts(i) - 1);
      if (u(i) < lo) {
        excess += lo - u(i);
        dir(i) = -1.0;
        clamped(i) = lo;
      } else if (u(i) > hi) {
        excess += u(i) - hi;
        dir(i) = 1.0;
        clamped(i) = hi;
      }
    }
    const double inner = beta_eval(beta, clamped);
    Vec ginner = beta_grad(beta, clamped);
    grad = ginner + growth * dir;
    return inner + growth * excess;
  };
}

}  // namespace

double generalized_beta(const BetaFunction& beta, const CarnotGroup& g, const CarnotPoint& xbar,
                        const HorizontalOptimOptions& opts) {
  if (!beta.convexified && !beta.analytic)
    throw InputError("generalized_beta: beta must be convexified");
  if (beta.dim != g.v1_dim())
    throw InputError("generalized_beta: beta dimension must match the first stratum");
  if (!xbar.x.allFinite()) throw InputError("generalized_beta: non-finite target");
  if (g.tag == GroupTag::AbelianN) return beta_eval(beta, xbar.x);  // Jensen, exact path
  HorizontalOptimResult sol =
      minimize_over_horizontal_paths(g, xbar, beta_piece_cost(beta), opts);
  return sol.objective;
}

double time_beta(const BetaFunction& beta, const CarnotGroup& g, const CarnotPoint& xbar,
                 double T, const HorizontalOptimOptions& opts) {
  if (!(T > 0.0)) throw InputError("time_beta: T must be positive");
  return T * generalized_beta(beta, g, dilate(g, 1.0 / T, xbar), opts);
}

bool LimitConsistencyReport::gaps_nonincreasing(double tol) const {
  for (size_t i = 1; i < gaps.size(); ++i)
    if (gaps[i] > gaps[i - 1] + tol) return false;
  return true;
}

LimitConsistencyReport limit_consistency(const LagrangianModel& model, const BetaFunction& beta,
                                         const CarnotGroup& g, const GroupPresentation& gamma,
                                         const CarnotPoint& xbar, double T,
                                         const std::vector<double>& eps_list,
                                         const DiscretizationSpec& spec) {
  if (g.tag != GroupTag::AbelianN)
    throw InputError("limit_consistency: F_eps requires the discretized abelian cover");
  for (size_t i = 1; i < eps_list.size(); ++i)
    if (eps_list[i] >= eps_list[i - 1]) throw InputError("limit_consistency: eps must decrease");

  LimitConsistencyReport rep;
  rep.eps_list = eps_list;
  rep.limit = time_beta(beta, g, xbar, T);

  const double horizon = T / eps_list.back();
  const ValueTable phi = mane_potential(model, Vec::Zero(model.dim), spec, horizon);
  for (double eps : eps_list) {
    const GroupElement he = rescale_map_h(g, gamma, eps, xbar);
    const Vec endpoint = carnot_from_lattice(g, he).x;
    const double f = rescaled_potential(phi, eps, endpoint, T);
    rep.f_eps.push_back(f);
    rep.gaps.push_back(std::abs(f - rep.limit));
  }
  return rep;
}

}  // namespace nilhj
