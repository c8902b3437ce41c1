#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "nilhj/errors.hpp"

namespace nilhj {

using Vec = Eigen::VectorXd;

enum class GroupTag { AbelianN, Heisenberg3 };

enum class LagrangianKind { Kinetic, Mechanical, Tabulated, Custom };

/// Periodic potential on the unit cell, either a finite Fourier sum
///   V(x) = sum_k  a_k cos(2 pi k.x) + b_k sin(2 pi k.x),  k integer vector,
/// or (1D only) a table of samples interpolated by a periodic cubic spline.
class PeriodicPotential {
 public:
  struct FourierTerm {
    Eigen::VectorXi wave;
    double cos_coef = 0.0;
    double sin_coef = 0.0;
  };

  PeriodicPotential() = default;
  static PeriodicPotential fourier(int dim, std::vector<FourierTerm> terms);
  static PeriodicPotential tabulated(std::vector<double> samples);

  double operator()(const Vec& x) const;
  int dim() const { return dim_; }
  bool empty() const { return terms_.empty() && samples_.empty(); }
  std::string signature() const;

 private:
  int dim_ = 0;
  std::vector<FourierTerm> terms_;
  std::vector<double> samples_;   // values at j/m, j = 0..m-1
  std::vector<double> spline_m_;  // periodic cubic spline second derivatives
};

/// A lattice-invariant Tonelli Lagrangian on the cover R^n. Immutable after
/// construction; evaluation is pure.
struct LagrangianModel {
  int dim = 1;
  LagrangianKind kind = LagrangianKind::Kinetic;
  GroupTag group = GroupTag::AbelianN;
  PeriodicPotential potential;
  double a_max = 4.0;     // velocity truncation radius for minimizations
  double offset = 0.0;    // additive normalization constant
  std::function<double(const Vec&, const Vec&)> custom;

  std::string signature() const;
};

LagrangianModel kinetic_model(int dim, double a_max = 4.0);
LagrangianModel mechanical_cosine_model(double amplitude = 1.0, double a_max = 4.0);

/// Componentwise x - floor(x). The reduction happens before every potential
/// evaluation, which makes lattice invariance exact (bit-identical) whenever
/// x + gamma is representable.
Vec reduce_to_cell(const Vec& x);

double eval_lagrangian(const LagrangianModel& model, const Vec& x, const Vec& v);

/// Legendre view of a model: H(x,p) as a sup over a finite velocity grid.
struct HamiltonianView {
  const LagrangianModel* model = nullptr;
  double search_radius = 0.0;  // must be >= model->a_max
  double h_v = 1e-2;           // velocity grid spacing
};

/// sup over the velocity grid of <p,v> - L(x,v). Throws ResolutionError if
/// the maximizer sits on the grid boundary (search radius too small).
double legendre_hamiltonian(const HamiltonianView& view, const Vec& x, const Vec& p);

/// Inverse transform: sup over a momentum grid of <p,v> - H(x,p).
double legendre_back(const HamiltonianView& view, const Vec& x, const Vec& v);

struct TonelliSampleSpec {
  int x_samples = 5;       // per axis, over the unit cell
  int v_samples = 9;       // per axis, over [-v_max, v_max]
  double v_max = 2.0;
  double fd_step = 1e-2;   // second-difference step in v
  double c_conv = 1e-6;    // acceptance threshold for the convexity modulus
};

struct SuperlinearityPair {
  double slope;   // A
  double bound;   // B(A), smallest valid constant over the sample set
};

struct TonelliReport {
  double convexity_modulus = 0.0;
  std::vector<SuperlinearityPair> superlinearity;
  bool invariant = false;
  bool valid = false;
  std::string reason;
};

TonelliReport check_tonelli(const LagrangianModel& model, const TonelliSampleSpec& spec);

}  // namespace nilhj
