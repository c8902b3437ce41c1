#include "nilhj/mane.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "nilhj/hash.hpp"
#include "nilhj/parallel.hpp"

static_assert(std::endian::native == std::endian::little, "cache format is little-endian");

namespace nilhj {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string DiscretizationSpec::signature() const {
  std::ostringstream os;
  os.precision(17);
  os << "hx=" << h_x << ";ht=" << h_t << ";hv=" << h_v << ";rbox=" << r_box
     << ";quad=" << static_cast<int>(quad);
  return os.str();
}

void validate_spec(const DiscretizationSpec& spec, const LagrangianModel& model, double t_max) {
  if (!(spec.h_x > 0) || !(spec.h_t > 0) || !(spec.h_v > 0) || !(spec.r_box > 0))
    throw InputError("discretization: spacings must be positive");
  if (spec.h_t * model.a_max < spec.h_x * (1.0 - 1e-12))
    throw InputError("discretization: h_t*A_max >= h_x violated (steps cannot reach neighbors)");
  const double cells_per_unit = 1.0 / spec.h_x;
  if (std::abs(cells_per_unit - std::round(cells_per_unit)) > 1e-9)
    throw InputError("discretization: 1/h_x must be an integer (lattice alignment)");
  if (spec.r_box < model.a_max * t_max - 1e-9)
    throw InputError("discretization: r_box >= A_max*t_max violated (box can be contaminated)");
  if (model.dim > 2) throw InputError("grid-based sweeps support dimensions 1 and 2 only");
}

long ValueTable::nodes() const {
  long n = 1;
  for (int i = 0; i < dim; ++i) n *= shape(i);
  return n;
}

long ValueTable::flat_index(const Eigen::VectorXi& idx) const {
  long f = 0;
  for (int i = 0; i < dim; ++i) f = f * shape(i) + idx(i);
  return f;
}

Vec ValueTable::node_point(long flat) const {
  Vec p(dim);
  for (int i = dim - 1; i >= 0; --i) {
    p(i) = origin(i) + h_x * static_cast<double>(flat % shape(i));
    flat /= shape(i);
  }
  return p;
}

long ValueTable::node_at(const Vec& x) const {
  if (x.size() != dim) throw InputError("node_at: dimension mismatch");
  long f = 0;
  for (int i = 0; i < dim; ++i) {
    const double r = (x(i) - origin(i)) / h_x;
    const double j = std::round(r);
    if (std::abs(r - j) > 1e-6) throw InputError("node_at: point is not a grid node");
    if (j < 0 || j >= shape(i)) throw InputError("node_at: point outside the simulation box");
    f = f * shape(i) + static_cast<long>(j);
  }
  return f;
}

int ValueTable::slice_at(double t) const {
  const double r = t / h_t;
  const int k = static_cast<int>(std::round(r));
  if (std::abs(r - k) > 1e-9 * std::max(1.0, std::abs(r)))
    throw InputError("slice_at: time is not aligned with the step grid");
  if (k < 0 || k >= static_cast<int>(slices.size()))
    throw InputError("slice_at: time beyond the table horizon");
  return k;
}

double ValueTable::value_at(double t, const Vec& x) const {
  return slices[slice_at(t)](node_at(x));
}

bool ValueTable::boundary_flagged(double t, const Vec& x) const {
  const int k = slice_at(t);
  if (boundary.empty()) return false;
  return boundary[k][static_cast<size_t>(node_at(x))] != 0;
}

namespace {

struct Candidate {
  double v[2] = {0.0, 0.0};
  int ishift[2] = {0, 0};   // integer part of the source shift per axis
  double w[2] = {0.0, 0.0}; // weight of the +1 corner, in [0,1)
  bool on_shell = false;    // top speed on some axis
};

// Candidates in descending lexicographic velocity order, so that a strict
// comparison in the argmin keeps the lowest source grid index on ties.
std::vector<Candidate> make_candidates(int dim, const DiscretizationSpec& spec, double a_max) {
  const int mv = static_cast<int>(std::floor(a_max / spec.h_v + 1e-9));
  if (mv < 1) throw InputError("velocity ball contains no nonzero grid velocity");
  std::vector<Candidate> cands;
  const int n = 2 * mv + 1;
  long total = 1;
  for (int i = 0; i < dim; ++i) total *= n;
  cands.reserve(total);
  for (long flat = 0; flat < total; ++flat) {
    long rem = flat;
    Candidate c;
    for (int axis = dim - 1; axis >= 0; --axis) {
      const int j = mv - static_cast<int>(rem % n);  // descending: +mv .. -mv
      rem /= n;
      c.v[axis] = j * spec.h_v;
      c.on_shell = c.on_shell || std::abs(j) == mv;
      const double disp = c.v[axis] * spec.h_t / spec.h_x;  // source shift in cells
      double d0 = std::floor(disp);
      double frac = disp - d0;
      if (frac < 1e-9) {
        c.ishift[axis] = static_cast<int>(d0);
        c.w[axis] = 0.0;
      } else if (frac > 1.0 - 1e-9) {
        c.ishift[axis] = static_cast<int>(d0) + 1;
        c.w[axis] = 0.0;
      } else {
        c.ishift[axis] = static_cast<int>(d0) + 1;
        c.w[axis] = 1.0 - frac;
      }
    }
    cands.push_back(c);
  }
  // descending on axis 0 velocity first
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.v[0] != b.v[0]) return a.v[0] > b.v[0];
    return a.v[1] > b.v[1];
  });
  return cands;
}

double one_step_cost(const LagrangianModel& model, const DiscretizationSpec& spec, const Vec& x,
                     const Vec& v) {
  if (spec.quad == QuadRule::Midpoint)
    return spec.h_t * eval_lagrangian(model, x - 0.5 * spec.h_t * v, v);
  return 0.5 * spec.h_t *
         (eval_lagrangian(model, x - spec.h_t * v, v) + eval_lagrangian(model, x, v));
}

struct SweepContext {
  const LagrangianModel* model;
  const DiscretizationSpec* spec;
  std::vector<Candidate> cands;
  std::vector<double> cost;  // [node * ncand + cand], time independent
  bool track_seeds = false;
};

SweepContext make_context(const LagrangianModel& model, const DiscretizationSpec& spec,
                          const ValueTable& table, bool track_seeds) {
  SweepContext ctx;
  ctx.model = &model;
  ctx.spec = &spec;
  ctx.cands = make_candidates(table.dim, spec, model.a_max);
  ctx.track_seeds = track_seeds;
  const long nodes = table.nodes();
  const long ncand = static_cast<long>(ctx.cands.size());
  if (nodes * ncand > (1L << 28))
    throw ResourceError("one-step cost matrix exceeds the memory budget");
  ctx.cost.resize(static_cast<size_t>(nodes * ncand));
  parallel_for(static_cast<size_t>(nodes), spec.threads, [&](size_t node) {
    const Vec x = table.node_point(static_cast<long>(node));
    Vec v(table.dim);
    for (long c = 0; c < ncand; ++c) {
      for (int a = 0; a < table.dim; ++a) v(a) = ctx.cands[c].v[a];
      ctx.cost[node * ncand + c] = one_step_cost(model, spec, x, v);
    }
  });
  return ctx;
}

// Advances the table from slice `from` to slice `steps` (inclusive).
void dp_sweep(SweepContext& ctx, ValueTable& table, int from, int steps) {
  const int dim = table.dim;
  const long nodes = table.nodes();
  const long ncand = static_cast<long>(ctx.cands.size());
  const int n1 = dim == 2 ? table.shape(1) : 0;

  for (int step = from; step < steps; ++step) {
    const Eigen::ArrayXd& prev = table.slices[step];
    const std::vector<uint8_t>& pflag = table.boundary[step];
    Eigen::ArrayXd next(nodes);
    std::vector<uint8_t> nflag(nodes, 0);
    std::vector<int32_t> nseed;
    if (ctx.track_seeds) nseed.assign(nodes, -1);

    parallel_for(static_cast<size_t>(nodes), ctx.spec->threads, [&](size_t node) {
      int idx[2];
      if (dim == 1) {
        idx[0] = static_cast<int>(node);
      } else {
        idx[0] = static_cast<int>(node / n1);
        idx[1] = static_cast<int>(node % n1);
      }
      double best = kInf;
      long best_c = -1;
      long best_corner = -1;
      bool best_flag = false;
      const double* cost_row = ctx.cost.data() + node * ncand;
      for (long c = 0; c < ncand; ++c) {
        const Candidate& cd = ctx.cands[c];
        double val;
        bool flagged = false;
        long corner = -1;
        if (dim == 1) {
          const int a = idx[0] - cd.ishift[0];
          if (cd.w[0] == 0.0) {
            if (a < 0 || a >= table.shape(0)) continue;
            val = prev(a);
            if (!std::isfinite(val)) continue;
            flagged = pflag[a] != 0;
            corner = a;
          } else {
            if (a < 0 || a + 1 >= table.shape(0)) continue;
            const double v0 = prev(a), v1 = prev(a + 1);
            if (!std::isfinite(v0) || !std::isfinite(v1)) continue;
            val = (1.0 - cd.w[0]) * v0 + cd.w[0] * v1;
            flagged = pflag[a] != 0 || pflag[a + 1] != 0;
            corner = cd.w[0] > 0.5 ? a + 1 : a;
          }
        } else {
          const int a0 = idx[0] - cd.ishift[0];
          const int a1 = idx[1] - cd.ishift[1];
          const int e0 = cd.w[0] == 0.0 ? 0 : 1;
          const int e1 = cd.w[1] == 0.0 ? 0 : 1;
          if (a0 < 0 || a0 + e0 >= table.shape(0) || a1 < 0 || a1 + e1 >= table.shape(1)) continue;
          val = 0.0;
          bool ok = true;
          double wmax = -1.0;
          for (int b0 = 0; b0 <= e0 && ok; ++b0) {
            for (int b1 = 0; b1 <= e1 && ok; ++b1) {
              const double weight = (b0 ? cd.w[0] : 1.0 - cd.w[0]) * (b1 ? cd.w[1] : 1.0 - cd.w[1]);
              const long f = static_cast<long>(a0 + b0) * n1 + (a1 + b1);
              const double pv = prev(f);
              if (!std::isfinite(pv)) {
                ok = false;
                break;
              }
              val += weight * pv;
              flagged = flagged || pflag[f] != 0;
              if (weight > wmax) {
                wmax = weight;
                corner = f;
              }
            }
          }
          if (!ok) continue;
        }
        const double total = val + cost_row[c];
        if (total < best) {
          best = total;
          best_c = c;
          best_corner = corner;
          best_flag = flagged || cd.on_shell;
        }
      }
      next(node) = best;
      if (best_c >= 0) nflag[node] = best_flag ? 1 : 0;
      if (ctx.track_seeds && best_c >= 0)
        nseed[node] = table.seeds[step][static_cast<size_t>(best_corner)];
    });

    table.slices.push_back(std::move(next));
    table.boundary.push_back(std::move(nflag));
    if (ctx.track_seeds) table.seeds.push_back(std::move(nseed));
  }
}

ValueTable make_grid(const LagrangianModel& model, const DiscretizationSpec& spec) {
  ValueTable t;
  t.dim = model.dim;
  const int half = static_cast<int>(std::round(spec.r_box / spec.h_x));
  t.h_x = spec.h_x;
  t.shape = Eigen::VectorXi::Constant(t.dim, 2 * half + 1);
  t.origin = Vec::Constant(t.dim, -half * spec.h_x);
  t.h_t = spec.h_t;
  return t;
}

int aligned_steps(double T, double h_t, const char* what) {
  const double r = T / h_t;
  const int k = static_cast<int>(std::round(r));
  if (k < 1) throw InputError(std::string(what) + ": horizon below one time step");
  if (std::abs(r - k) > 1e-9 * std::max(1.0, r))
    throw InputError(std::string(what) + ": horizon is not a multiple of h_t");
  return k;
}

ValueTable mane_potential_impl(const LagrangianModel& model, const Vec& y,
                               const DiscretizationSpec& spec, double T, bool with_tau);

double compare_tables(const ValueTable& fine, const ValueTable& coarse) {
  double worst = 0.0;
  bool any = false;
  for (size_t ck = 0; ck < coarse.slices.size(); ++ck) {
    const size_t fk = 2 * ck;
    if (fk >= fine.slices.size()) break;
    for (long cf = 0; cf < coarse.nodes(); ++cf) {
      const Vec p = coarse.node_point(cf);
      // coarse nodes are a subset of fine nodes by construction
      long ff;
      try {
        ff = fine.node_at(p);
      } catch (const InputError&) {
        continue;
      }
      const double a = coarse.slices[ck](cf);
      const double b = fine.slices[fk](ff);
      if (std::isfinite(a) && std::isfinite(b)) {
        worst = std::max(worst, std::abs(a - b));
        any = true;
      }
    }
  }
  return any ? worst : std::numeric_limits<double>::quiet_NaN();
}

DiscretizationSpec coarsen(const DiscretizationSpec& spec) {
  DiscretizationSpec c = spec;
  c.h_x *= 2.0;
  c.h_t *= 2.0;
  c.h_v *= 2.0;
  c.estimate_tau = false;
  return c;
}

bool can_coarsen(const DiscretizationSpec& spec, int steps, double a_max) {
  const int half = static_cast<int>(std::round(spec.r_box / spec.h_x));
  const double cells = 1.0 / (2.0 * spec.h_x);
  return steps % 2 == 0 && half % 2 == 0 && std::abs(cells - std::round(cells)) < 1e-9 &&
         std::floor(a_max / (2.0 * spec.h_v) + 1e-9) >= 1.0;
}

ValueTable mane_potential_impl(const LagrangianModel& model, const Vec& y,
                               const DiscretizationSpec& spec, double T, bool with_tau) {
  validate_spec(spec, model, T);
  const int steps = aligned_steps(T, spec.h_t, "mane_potential");
  ValueTable table = make_grid(model, spec);
  const long nodes = table.nodes();
  const long seed_node = table.node_at(y);

  Eigen::ArrayXd slice0 = Eigen::ArrayXd::Constant(nodes, kInf);
  slice0(seed_node) = 0.0;
  table.slices.push_back(std::move(slice0));
  table.boundary.emplace_back(nodes, 0);

  // First step with a continuous velocity fan out of the point seed.
  {
    Eigen::ArrayXd slice1(nodes);
    std::vector<uint8_t> flag1(nodes, 0);
    parallel_for(static_cast<size_t>(nodes), spec.threads, [&](size_t node) {
      const Vec x = table.node_point(static_cast<long>(node));
      const Vec v = (x - y) / spec.h_t;
      const double vmax = v.cwiseAbs().maxCoeff();
      if (vmax <= model.a_max + 1e-12) {
        slice1(node) = one_step_cost(model, spec, x, v);
        flag1[node] = vmax > model.a_max - spec.h_v ? 1 : 0;
      } else {
        slice1(node) = kInf;
      }
    });
    table.slices.push_back(std::move(slice1));
    table.boundary.push_back(std::move(flag1));
  }

  if (steps > 1) {
    SweepContext ctx = make_context(model, spec, table, false);
    dp_sweep(ctx, table, 1, steps);
  }

  if (with_tau && spec.estimate_tau && can_coarsen(spec, steps, model.a_max)) {
    try {
      const ValueTable coarse = mane_potential_impl(model, y, coarsen(spec), T, false);
      table.tau_dp = compare_tables(table, coarse);
    } catch (const InputError&) {
      // seed not on the coarse grid; leave tau unset
    }
  }
  return table;
}

}  // namespace

ValueTable mane_potential(const LagrangianModel& model, const Vec& y,
                          const DiscretizationSpec& spec, double T) {
  return mane_potential_impl(model, y, spec, T, true);
}

double rescaled_potential(const ValueTable& phi, double eps, const Vec& x, double T) {
  if (!(eps > 0.0) || eps > 1.0) throw InputError("rescaled_potential: eps must be in (0,1]");
  const double S = T / eps;
  const int k = phi.slice_at(S);
  const long node = phi.node_at(x);
  const double val = phi.slices[k](node);
  if (!std::isfinite(val))
    throw RangeError("rescaled_potential: endpoint outside the reachable cone");
  if (!phi.boundary.empty() && phi.boundary[k][static_cast<size_t>(node)])
    throw ResolutionError("rescaled_potential: value contaminated by the velocity cap A_max");
  return eps * val;
}

LaxSolution lax_oleinik_solve(const LagrangianModel& model,
                              const std::function<double(const Vec&)>& initial, double eps,
                              double T, const DiscretizationSpec& spec, bool track_seeds) {
  if (!(eps > 0.0) || eps > 1.0) throw InputError("lax_oleinik_solve: eps must be in (0,1]");
  const double S = T / eps;  // horizon in unrescaled time
  validate_spec(spec, model, S);
  const int steps = aligned_steps(S, spec.h_t, "lax_oleinik_solve");

  ValueTable table = make_grid(model, spec);
  const long nodes = table.nodes();

  Eigen::ArrayXd slice0(nodes);
  for (long f = 0; f < nodes; ++f) {
    const double v = initial(table.node_point(f));
    if (!std::isfinite(v)) throw InputError("lax_oleinik_solve: initial datum not finite on grid");
    slice0(f) = v / eps;
  }

  // Empirical Lipschitz constant of the datum with respect to d_eps.
  double lambda = 0.0;
  {
    const int n1 = table.dim == 2 ? table.shape(1) : 1;
    for (long f = 0; f < nodes; ++f) {
      if (table.dim == 1) {
        if (f + 1 < nodes)
          lambda = std::max(lambda, std::abs(slice0(f + 1) - slice0(f)) * eps / (eps * spec.h_x));
      } else {
        if ((f % n1) + 1 < n1)
          lambda = std::max(lambda, std::abs(slice0(f + 1) - slice0(f)) * eps / (eps * spec.h_x));
        if (f + n1 < nodes)
          lambda = std::max(lambda, std::abs(slice0(f + n1) - slice0(f)) * eps / (eps * spec.h_x));
      }
    }
  }

  table.slices.push_back(std::move(slice0));
  table.boundary.emplace_back(nodes, 0);
  if (track_seeds) {
    std::vector<int32_t> s0(nodes);
    for (long f = 0; f < nodes; ++f) s0[f] = static_cast<int32_t>(f);
    table.seeds.push_back(std::move(s0));
  }

  SweepContext ctx = make_context(model, spec, table, track_seeds);
  dp_sweep(ctx, table, 0, steps);

  for (auto& s : table.slices) s *= eps;
  table.h_t = eps * spec.h_t;

  LaxSolution out{std::move(table), lambda};

  if (spec.estimate_tau && can_coarsen(spec, steps, model.a_max)) {
    LaxSolution coarse = lax_oleinik_solve(model, initial, eps, T, coarsen(spec), false);
    out.table.tau_dp = compare_tables(out.table, coarse.table);
  }
  return out;
}

double lipschitz_estimate(const ValueTable& table, double lambda, double window,
                          double metric_scale) {
  if (table.slices.size() < 2) throw InputError("lipschitz_estimate: table has no evolution");
  double best = -1.0;
  const int n1 = table.dim == 2 ? table.shape(1) : 1;
  for (size_t k = 1; k < table.slices.size(); ++k) {
    const double t = table.h_t * static_cast<double>(k);
    if (t < lambda * (1.0 - 1e-12)) continue;
    const double cap = 0.5 * t;
    const Eigen::ArrayXd& sl = table.slices[k];

    std::vector<long> sel;
    for (long f = 0; f < table.nodes(); ++f) {
      if (!std::isfinite(sl(f))) continue;
      const Vec p = table.node_point(f);
      if (metric_scale * p.cwiseAbs().maxCoeff() <= window) sel.push_back(f);
    }
    for (size_t a = 0; a < sel.size(); ++a) {
      for (size_t b = a + 1; b < sel.size(); ++b) {
        double dist;
        if (table.dim == 1) {
          dist = metric_scale * table.h_x * static_cast<double>(sel[b] - sel[a]);
          if (dist > cap) break;  // indices sorted, distances increase
        } else {
          const double d0 = static_cast<double>(sel[b] / n1 - sel[a] / n1);
          const double d1 = static_cast<double>(sel[b] % n1 - sel[a] % n1);
          dist = metric_scale * table.h_x * std::sqrt(d0 * d0 + d1 * d1);
          if (dist > cap) continue;
        }
        if (dist <= 0.0) continue;
        best = std::max(best, std::abs(sl(sel[b]) - sl(sel[a])) / dist);
      }
    }
  }
  if (best < 0.0) throw InputError("lipschitz_estimate: empty pair set");
  return best;
}

namespace {
template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}
}  // namespace

void save_table(const std::string& path, const ValueTable& table) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("save_table: cannot open " + path);
  put<uint8_t>(os, 1);  // version
  put<uint8_t>(os, static_cast<uint8_t>(table.dim));
  for (int i = 0; i < table.dim; ++i) put<int32_t>(os, table.shape(i));
  put<int64_t>(os, static_cast<int64_t>(table.slices.size()));
  for (int i = 0; i < table.dim; ++i) put<double>(os, table.origin(i));
  put<double>(os, table.h_x);
  put<double>(os, table.h_t);
  put<double>(os, table.tau_dp);
  put<uint8_t>(os, table.boundary.empty() ? 0 : 1);
  put<uint8_t>(os, table.seeds.empty() ? 0 : 1);
  for (size_t k = 0; k < table.slices.size(); ++k) {
    os.write(reinterpret_cast<const char*>(table.slices[k].data()),
             static_cast<std::streamsize>(sizeof(double) * table.nodes()));
    if (!table.boundary.empty())
      os.write(reinterpret_cast<const char*>(table.boundary[k].data()),
               static_cast<std::streamsize>(table.nodes()));
    if (!table.seeds.empty())
      os.write(reinterpret_cast<const char*>(table.seeds[k].data()),
               static_cast<std::streamsize>(sizeof(int32_t) * table.nodes()));
  }
}

ValueTable load_table(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("load_table: cannot open " + path);
  const auto version = get<uint8_t>(is);
  if (version != 1) throw InputError("load_table: unsupported cache version");
  ValueTable t;
  t.dim = get<uint8_t>(is);
  t.shape.resize(t.dim);
  for (int i = 0; i < t.dim; ++i) t.shape(i) = get<int32_t>(is);
  const auto nslices = get<int64_t>(is);
  t.origin.resize(t.dim);
  for (int i = 0; i < t.dim; ++i) t.origin(i) = get<double>(is);
  t.h_x = get<double>(is);
  t.h_t = get<double>(is);
  t.tau_dp = get<double>(is);
  const bool has_flags = get<uint8_t>(is) != 0;
  const bool has_seeds = get<uint8_t>(is) != 0;
  const long nodes = t.nodes();
  for (int64_t k = 0; k < nslices; ++k) {
    Eigen::ArrayXd s(nodes);
    is.read(reinterpret_cast<char*>(s.data()), static_cast<std::streamsize>(sizeof(double) * nodes));
    t.slices.push_back(std::move(s));
    if (has_flags) {
      std::vector<uint8_t> f(nodes);
      is.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(nodes));
      t.boundary.push_back(std::move(f));
    }
    if (has_seeds) {
      std::vector<int32_t> sd(nodes);
      is.read(reinterpret_cast<char*>(sd.data()),
              static_cast<std::streamsize>(sizeof(int32_t) * nodes));
      t.seeds.push_back(std::move(sd));
    }
  }
  if (!is) throw InputError("load_table: truncated cache file");
  return t;
}

std::string table_cache_key(const LagrangianModel& model, const DiscretizationSpec& spec,
                            const std::string& seed_desc) {
  std::ostringstream os;
  os << std::hex << fnv1a(model.signature() + "|" + spec.signature() + "|" + seed_desc);
  return os.str();
}

}  // namespace nilhj
