#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "nilhj/lagrangian.hpp"

namespace nilhj {

enum class QuadRule { Midpoint, Trapezoid };

/// Grid and step sizes for the semi-Lagrangian sweep.
struct DiscretizationSpec {
  double h_x = 0.125;   // spatial spacing; 1/h_x must be an integer
  double h_t = 0.25;    // time step
  double h_v = 0.0625;  // velocity grid spacing
  double r_box = 8.0;   // half-width of the simulated box around the origin
  QuadRule quad = QuadRule::Midpoint;
  bool estimate_tau = true;  // a-posteriori Richardson error estimate
  int threads = 1;

  std::string signature() const;
};

/// Throws InputError on violated invariants: h_t*A_max >= h_x (a step can
/// reach neighboring cells) and r_box >= A_max*t_max (minimizers stay inside).
void validate_spec(const DiscretizationSpec& spec, const LagrangianModel& model, double t_max);

/// Discretized value function over grid x time steps. Entries are +inf outside
/// the reachable set; the box boundary acts as a hard wall.
struct ValueTable {
  int dim = 1;
  Vec origin;             // coordinate of grid index 0 per axis
  double h_x = 0.0;
  Eigen::VectorXi shape;  // nodes per axis
  double h_t = 0.0;       // time stamp spacing (rescaled time for Lax tables)
  std::vector<Eigen::ArrayXd> slices;           // flattened values, one per time
  std::vector<std::vector<uint8_t>> boundary;   // velocity-shell contamination flags
  std::vector<std::vector<int32_t>> seeds;      // argmin base-point node (if tracked)
  double tau_dp = std::numeric_limits<double>::quiet_NaN();

  long nodes() const;
  long flat_index(const Eigen::VectorXi& idx) const;
  Vec node_point(long flat) const;
  /// Exact node lookup; throws InputError when x is not a grid node.
  long node_at(const Vec& x) const;
  int slice_at(double t) const;
  double value_at(double t, const Vec& x) const;
  bool boundary_flagged(double t, const Vec& x) const;
  double time_horizon() const { return h_t * static_cast<double>(slices.size() - 1); }
};

/// Minimal action phi(y, x, t) from the seed y, by forward dynamic programming
/// over the truncated velocity ball. The first step away from the point seed
/// is taken with a continuous velocity fan; later steps interpolate the
/// previous slice linearly.
ValueTable mane_potential(const LagrangianModel& model, const Vec& y,
                          const DiscretizationSpec& spec, double T);

/// eps * phi(y, x, T/eps) read from a mane_potential table.
double rescaled_potential(const ValueTable& phi, double eps, const Vec& x, double T);

struct LaxSolution {
  ValueTable table;          // v^eps values, time stamps in rescaled time
  double initial_lipschitz;  // empirical Lipschitz constant of f wrt d_eps
};

/// Lax-Oleinik evolution of the initial datum under the rescaled Lagrangian
/// L(x, eps v); the DP sweep is seeded with the initial values, never with
/// materialized all-pairs potentials.
LaxSolution lax_oleinik_solve(const LagrangianModel& model,
                              const std::function<double(const Vec&)>& initial, double eps,
                              double T, const DiscretizationSpec& spec,
                              bool track_seeds = true);

/// Empirical Lipschitz constant: max over node pairs within (scaled) distance
/// t/2, at slice times t >= lambda, of |dv| / dist. `metric_scale` rescales the
/// grid metric (pass eps for tables holding v^eps); `window` restricts both
/// nodes to the sup-ball of that radius in the scaled metric.
double lipschitz_estimate(const ValueTable& table, double lambda,
                          double window = std::numeric_limits<double>::infinity(),
                          double metric_scale = 1.0);

/// Binary cache: version byte, dims, spacings as little-endian 64-bit floats,
/// then row-major values per slice.
void save_table(const std::string& path, const ValueTable& table);
ValueTable load_table(const std::string& path);
std::string table_cache_key(const LagrangianModel& model, const DiscretizationSpec& spec,
                            const std::string& seed_desc);

}  // namespace nilhj
