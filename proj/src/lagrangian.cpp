#include "nilhj/lagrangian.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace nilhj {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

PeriodicPotential PeriodicPotential::fourier(int dim, std::vector<FourierTerm> terms) {
  PeriodicPotential p;
  p.dim_ = dim;
  for (const auto& t : terms) {
    if (t.wave.size() != dim) throw InputError("fourier term dimension mismatch");
  }
  p.terms_ = std::move(terms);
  return p;
}

PeriodicPotential PeriodicPotential::tabulated(std::vector<double> samples) {
  if (samples.size() < 4) throw InputError("tabulated potential needs at least 4 samples");
  PeriodicPotential p;
  p.dim_ = 1;
  p.samples_ = std::move(samples);

  // Periodic cubic spline: solve the cyclic tridiagonal system for the
  // second derivatives M_j. Sizes are small, a dense solve is fine.
  const int m = static_cast<int>(p.samples_.size());
  const double h = 1.0 / m;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd rhs(m);
  for (int j = 0; j < m; ++j) {
    const int jm = (j + m - 1) % m;
    const int jp = (j + 1) % m;
    A(j, jm) += h / 6.0;
    A(j, j) += 2.0 * h / 3.0;
    A(j, jp) += h / 6.0;
    rhs(j) = (p.samples_[jp] - 2.0 * p.samples_[j] + p.samples_[jm]) / h;
  }
  Eigen::VectorXd M = A.fullPivLu().solve(rhs);
  p.spline_m_.assign(M.data(), M.data() + m);
  return p;
}

double PeriodicPotential::operator()(const Vec& x) const {
  if (!samples_.empty()) {
    const int m = static_cast<int>(samples_.size());
    const double h = 1.0 / m;
    double u = x(0) - std::floor(x(0));
    int j = static_cast<int>(std::floor(u * m));
    if (j >= m) j = m - 1;
    const int jp = (j + 1) % m;
    const double a = (j + 1) * h - u;  // distance to right node
    const double b = u - j * h;        // distance to left node
    return spline_m_[j] * a * a * a / (6.0 * h) + spline_m_[jp] * b * b * b / (6.0 * h) +
           (samples_[j] - spline_m_[j] * h * h / 6.0) * a / h +
           (samples_[jp] - spline_m_[jp] * h * h / 6.0) * b / h;
  }
  double s = 0.0;
  for (const auto& t : terms_) {
    const double phase = kTwoPi * t.wave.cast<double>().dot(x);
    s += t.cos_coef * std::cos(phase) + t.sin_coef * std::sin(phase);
  }
  return s;
}

std::string PeriodicPotential::signature() const {
  std::ostringstream os;
  os.precision(17);
  if (!samples_.empty()) {
    os << "tab[";
    for (double v : samples_) os << v << ",";
    os << "]";
  } else {
    os << "fourier[";
    for (const auto& t : terms_) {
      for (int i = 0; i < t.wave.size(); ++i) os << t.wave(i) << (i + 1 < t.wave.size() ? "," : "");
      os << ":" << t.cos_coef << ":" << t.sin_coef << ";";
    }
    os << "]";
  }
  return os.str();
}

std::string LagrangianModel::signature() const {
  std::ostringstream os;
  os.precision(17);
  os << "dim=" << dim << ";kind=" << static_cast<int>(kind)
     << ";group=" << static_cast<int>(group) << ";amax=" << a_max << ";offset=" << offset
     << ";pot=" << potential.signature();
  if (custom) os << ";custom=1";
  return os.str();
}

LagrangianModel kinetic_model(int dim, double a_max) {
  LagrangianModel m;
  m.dim = dim;
  m.kind = LagrangianKind::Kinetic;
  m.a_max = a_max;
  return m;
}

LagrangianModel mechanical_cosine_model(double amplitude, double a_max) {
  LagrangianModel m;
  m.dim = 1;
  m.kind = LagrangianKind::Mechanical;
  m.a_max = a_max;
  Eigen::VectorXi k(1);
  k(0) = 1;
  m.potential = PeriodicPotential::fourier(1, {{k, amplitude, 0.0}});
  return m;
}

Vec reduce_to_cell(const Vec& x) {
  Vec r = x;
  for (int i = 0; i < r.size(); ++i) r(i) -= std::floor(r(i));
  return r;
}

double eval_lagrangian(const LagrangianModel& model, const Vec& x, const Vec& v) {
  if (x.size() != model.dim || v.size() != model.dim)
    throw InputError("eval_lagrangian: dimension mismatch");
  if (!x.allFinite() || !v.allFinite())
    throw InputError("eval_lagrangian: non-finite input");
  switch (model.kind) {
    case LagrangianKind::Kinetic:
      return 0.5 * v.squaredNorm() + model.offset;
    case LagrangianKind::Mechanical:
    case LagrangianKind::Tabulated:
      return 0.5 * v.squaredNorm() - model.potential(reduce_to_cell(x)) + model.offset;
    case LagrangianKind::Custom:
      return model.custom(reduce_to_cell(x), v) + model.offset;
  }
  throw InputError("eval_lagrangian: unknown kind");
}

namespace {

// Shared grid-sup kernel for both Legendre directions.
// Maximizes <q,w> - f(w) over the grid w in [-radius, radius]^dim.
double grid_sup(int dim, double radius, double step, const std::function<double(const Vec&)>& f,
                const Vec& q, const char* what) {
  const int m = std::max(1, static_cast<int>(std::round(radius / step)));
  const int n = 2 * m + 1;
  long total = 1;
  for (int i = 0; i < dim; ++i) total *= n;
  double best = -std::numeric_limits<double>::infinity();
  bool best_on_boundary = false;
  Vec w(dim);
  for (long flat = 0; flat < total; ++flat) {
    long rem = flat;
    bool boundary = false;
    for (int i = 0; i < dim; ++i) {
      const int idx = static_cast<int>(rem % n);
      rem /= n;
      w(i) = (idx - m) * step;
      boundary = boundary || idx == 0 || idx == n - 1;
    }
    const double val = q.dot(w) - f(w);
    if (val > best) {
      best = val;
      best_on_boundary = boundary;
    }
  }
  if (best_on_boundary)
    throw ResolutionError(std::string(what) + ": maximizer on grid boundary, enlarge the search radius");
  return best;
}

}  // namespace

double legendre_hamiltonian(const HamiltonianView& view, const Vec& x, const Vec& p) {
  const LagrangianModel& model = *view.model;
  if (view.search_radius < model.a_max)
    throw InputError("legendre_hamiltonian: search radius below model a_max");
  return grid_sup(
      model.dim, view.search_radius, view.h_v,
      [&](const Vec& v) { return eval_lagrangian(model, x, v); }, p, "legendre_hamiltonian");
}

double legendre_back(const HamiltonianView& view, const Vec& x, const Vec& v) {
  const LagrangianModel& model = *view.model;
  return grid_sup(
      model.dim, view.search_radius, view.h_v,
      [&](const Vec& p) { return legendre_hamiltonian(view, x, p); }, v, "legendre_back");
}

TonelliReport check_tonelli(const LagrangianModel& model, const TonelliSampleSpec& spec) {
  TonelliReport report;
  const int dim = model.dim;
  const double h = spec.fd_step;

  // Sample points in the unit cell and velocities in the box.
  std::vector<Vec> xs, vs;
  {
    const int nx = spec.x_samples;
    long total = 1;
    for (int i = 0; i < dim; ++i) total *= nx;
    for (long flat = 0; flat < total; ++flat) {
      long rem = flat;
      Vec x(dim);
      for (int i = 0; i < dim; ++i) {
        x(i) = static_cast<double>(rem % nx) / nx;
        rem /= nx;
      }
      xs.push_back(x);
    }
    const int nv = spec.v_samples;
    total = 1;
    for (int i = 0; i < dim; ++i) total *= nv;
    for (long flat = 0; flat < total; ++flat) {
      long rem = flat;
      Vec v(dim);
      for (int i = 0; i < dim; ++i) {
        const int idx = static_cast<int>(rem % nv);
        rem /= nv;
        v(i) = -spec.v_max + 2.0 * spec.v_max * idx / (nv - 1);
      }
      vs.push_back(v);
    }
  }

  double modulus = std::numeric_limits<double>::infinity();
  for (const Vec& x : xs) {
    for (const Vec& v : vs) {
      for (int axis = 0; axis < dim; ++axis) {
        Vec vp = v, vm = v;
        vp(axis) += h;
        vm(axis) -= h;
        const double second =
            (eval_lagrangian(model, x, vp) - 2.0 * eval_lagrangian(model, x, v) +
             eval_lagrangian(model, x, vm)) /
            (h * h);
        modulus = std::min(modulus, second);
      }
    }
  }
  report.convexity_modulus = modulus;

  for (double slope : {1.0, 2.0, 4.0}) {
    double bound = 0.0;
    for (const Vec& x : xs)
      for (const Vec& v : vs)
        bound = std::max(bound, slope * v.norm() - eval_lagrangian(model, x, v));
    report.superlinearity.push_back({slope, bound});
  }

  bool invariant = true;
  for (int axis = 0; axis < dim && invariant; ++axis) {
    Vec shift = Vec::Zero(dim);
    shift(axis) = 1.0;
    for (const Vec& x : xs) {
      for (const Vec& v : vs) {
        if (eval_lagrangian(model, x + shift, v) != eval_lagrangian(model, x, v) ||
            eval_lagrangian(model, x - shift, v) != eval_lagrangian(model, x, v)) {
          invariant = false;
          break;
        }
      }
      if (!invariant) break;
    }
  }
  report.invariant = invariant;

  report.valid = invariant && modulus >= spec.c_conv;
  if (!invariant)
    report.reason = "lattice invariance violated";
  else if (modulus < spec.c_conv)
    report.reason = "convexity modulus below threshold";
  return report;
}

}  // namespace nilhj
