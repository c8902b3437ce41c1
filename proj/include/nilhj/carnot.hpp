#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "nilhj/group.hpp"
#include "nilhj/optim.hpp"

namespace nilhj {

enum class V1Norm { L1, L2, Linf, Polytope };

/// Graded limit group: R^n or H3(R) in exponential coordinates. Heisenberg
/// points (x, y, s) multiply with the symmetrized law
///   (x1,y1,s1)*(x2,y2,s2) = (x1+x2, y1+y2, s1+s2 + (x1*y2 - y1*x2)/2),
/// so the vertical increment of a horizontal path is half its swept area.
struct CarnotGroup {
  GroupTag tag = GroupTag::AbelianN;
  std::vector<int> strata;  // {n} or {2, 1}
  V1Norm norm = V1Norm::L2;
  std::vector<Vec> polytope_functionals;  // symmetric set, used by V1Norm::Polytope

  int dim() const;
  int v1_dim() const { return strata.front(); }
};

CarnotGroup abelian_carnot(int n, V1Norm norm = V1Norm::L2);
CarnotGroup heisenberg_carnot(V1Norm norm = V1Norm::L2);

struct CarnotPoint {
  GroupTag tag = GroupTag::AbelianN;
  Vec x;  // exponential coordinates, strata blocks concatenated
};

CarnotPoint carnot_point(const CarnotGroup& g, const Vec& coords);
CarnotPoint carnot_identity(const CarnotGroup& g);
CarnotPoint carnot_multiply(const CarnotGroup& g, const CarnotPoint& p, const CarnotPoint& q);
CarnotPoint carnot_inverse(const CarnotGroup& g, const CarnotPoint& p);
/// Stratum-i block scales by lambda^i; a group automorphism for lambda != 0.
CarnotPoint dilate(const CarnotGroup& g, double lambda, const CarnotPoint& p);

double v1_norm(const CarnotGroup& g, const Vec& u);

/// Piecewise-constant horizontal controls on [0,1], one column per piece.
struct HorizontalPath {
  Eigen::MatrixXd controls;  // v1_dim x pieces
  int pieces() const { return static_cast<int>(controls.cols()); }
};

CarnotPoint horizontal_endpoint(const CarnotGroup& g, const HorizontalPath& path);
double path_length(const CarnotGroup& g, const HorizontalPath& path);

struct HorizontalOptimOptions {
  int pieces = 64;
  int restarts = 8;
  std::uint64_t seed = 0;
  double endpoint_tol = 1e-4;  // relative, per coordinate
  AugLagOptions auglag;
};

struct HorizontalOptimResult {
  double objective = 0.0;  // (1/N) * sum of piece costs at the winner
  HorizontalPath path;
  double residual = 0.0;   // worst scaled endpoint residual
  int winner = -1;         // restart index of the winner
};

/// Multi-start penalized minimization of (1/N) sum cost(u_k) over horizontal
/// paths from the identity to `target`. Restarts are seeded deterministically;
/// ties resolve to the lowest objective, then the lowest restart index.
/// Throws NonconvergenceError when no restart meets the endpoint tolerance.
HorizontalOptimResult minimize_over_horizontal_paths(
    const CarnotGroup& g, const CarnotPoint& target,
    const std::function<double(const Vec&, Vec&)>& piece_cost,
    const HorizontalOptimOptions& opts);

struct CcResult {
  double distance = 0.0;
  HorizontalPath path;
  double residual = 0.0;
};

/// Carnot-Caratheodory distance: inf of V1-norm path length over horizontal
/// paths, computed as sqrt of the minimal energy. Exact (no optimization)
/// for abelian groups.
CcResult cc_distance(const CarnotGroup& g, const CarnotPoint& p, const CarnotPoint& q,
                     const HorizontalOptimOptions& opts = {});

/// Lattice element gamma with delta_{1/eps}(xbar) in gamma * [0,1)^dim, the
/// fundamental domain being the half-open unit box in exponential coordinates.
GroupElement rescale_map_h(const CarnotGroup& g, const GroupPresentation& gamma, double eps,
                           const CarnotPoint& xbar);

/// Embedding of the discrete group in the limit group. For the Heisenberg
/// pair this is the convention isomorphism (a,b,c) -> (a, b, c - a*b/2)
/// between the polarized integer law and the symmetrized real law.
CarnotPoint carnot_from_lattice(const CarnotGroup& g, const GroupElement& gamma);

}  // namespace nilhj
