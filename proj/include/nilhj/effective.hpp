#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "nilhj/carnot.hpp"
#include "nilhj/mane.hpp"

namespace nilhj {

/// Sampled effective Lagrangian on homology directions, with an optional
/// closed form. Values live on a uniform box grid; conjugation and the
/// horizontal-curve optimizer require the table to be convexified first.
struct BetaFunction {
  int dim = 1;
  Vec h_min;
  double step = 0.25;
  Eigen::VectorXi npts;
  Eigen::ArrayXd values;      // flattened row-major
  Eigen::ArrayXd error_bars;  // Richardson spread per sample
  double offset = 0.0;        // constant subtracted so that beta(0) = 0
  bool convexified = false;
  std::function<double(const Vec&)> analytic;
  std::function<Vec(const Vec&)> analytic_grad;

  long samples() const;
  Vec sample_point(long flat) const;
};

/// Extrapolated limit of a ladder v(T) ~ v_inf + c/T over increasing horizons.
/// err_bar receives the spread of the last two extrapolants; a tail whose
/// steps grow beyond that bar throws NonconvergenceError.
double richardson_limit(const std::vector<double>& t_list, const std::vector<double>& vals,
                        double* err_bar = nullptr);

/// Evaluate beta: closed form when present, multilinear interpolation of the
/// sampled table otherwise. Throws RangeError outside the sampled box.
double beta_eval(const BetaFunction& beta, const Vec& h);
Vec beta_grad(const BetaFunction& beta, const Vec& h);

/// beta(u) = |u|^2/2 in closed form, sampled on [-halfwidth, halfwidth]^dim.
BetaFunction quadratic_beta(int dim, double halfwidth = 2.0, double step = 0.25);

/// Single direction: extrapolated limit of phi(0, round(T h), T)/T over the
/// time ladder (Richardson in 1/T). err_bar receives the spread of the last
/// two extrapolants. Throws NonconvergenceError on a non-monotone tail.
double mather_beta(const LagrangianModel& model, const Vec& h, const std::vector<double>& t_list,
                   const DiscretizationSpec& spec, bool normalize = true,
                   double* err_bar = nullptr);

struct BetaSampleGrid {
  Vec h_min;
  double step = 0.25;
  Eigen::VectorXi npts;
};

/// Samples beta over the grid from one potential table, normalizes so that
/// beta(0) = 0, and convexifies by iterated midpoint fix-ups.
BetaFunction sample_beta(const LagrangianModel& model, const DiscretizationSpec& spec,
                         const BetaSampleGrid& grid, const std::vector<double>& t_list,
                         bool normalize = true, int threads = 1);

/// Lower convex envelope by pairwise midpoint fix-ups iterated to fixpoint.
/// Returns the largest downward adjustment applied.
double convexify_beta(BetaFunction& beta);

/// alpha(p) = max over sampled h of <p,h> - beta(h). Throws RangeError when
/// the argmax sits on the sample-box boundary.
double mather_alpha(const BetaFunction& beta, const Vec& p);

struct AlphaTable {
  Vec p_min;
  double step = 0.25;
  Eigen::VectorXi npts;
  Eigen::ArrayXd values;
};

AlphaTable sample_alpha(const BetaFunction& beta, const Vec& p_min, double step,
                        const Eigen::VectorXi& npts);

/// Smallest B with beta(h) >= A*|h| - B over the sample set.
double beta_superlinearity_bound(const BetaFunction& beta, double slope);

/// Generalized effective Lagrangian: inf over horizontal paths e -> xbar of
/// the integrated beta of the projected velocity. Abelian groups reduce
/// exactly to beta(xbar) (Jensen); Heisenberg targets go through the shared
/// penalized path optimizer.
double generalized_beta(const BetaFunction& beta, const CarnotGroup& g, const CarnotPoint& xbar,
                        const HorizontalOptimOptions& opts = {});

/// T * generalized_beta(delta_{1/T}(xbar)); the rescaling identity holds by
/// construction.
double time_beta(const BetaFunction& beta, const CarnotGroup& g, const CarnotPoint& xbar,
                 double T, const HorizontalOptimOptions& opts = {});

struct LimitConsistencyReport {
  std::vector<double> eps_list;
  std::vector<double> f_eps;   // table-backed F_eps(xbar, T)
  std::vector<double> gaps;    // |F_eps - time_beta|
  double limit = 0.0;
  bool gaps_nonincreasing(double tol) const;
};

/// Compares the rescaled-potential route F_eps with the beta route at a fixed
/// target; abelian covers only.
LimitConsistencyReport limit_consistency(const LagrangianModel& model, const BetaFunction& beta,
                                         const CarnotGroup& g, const GroupPresentation& gamma,
                                         const CarnotPoint& xbar, double T,
                                         const std::vector<double>& eps_list,
                                         const DiscretizationSpec& spec);

}  // namespace nilhj
