#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "nilhj/lagrangian.hpp"  // Vec, GroupTag, errors

namespace nilhj {

/// Element of Z^n (n <= 3) or of the discrete Heisenberg group H3(Z).
/// Heisenberg coordinates (a, b, c) use the polarized product
///   (a1,b1,c1)*(a2,b2,c2) = (a1+a2, b1+b2, c1+c2 + a1*b2),
/// which keeps all arithmetic in exact integers; the commutator of the two
/// horizontal generators equals the central generator t = (0,0,1).
struct GroupElement {
  GroupTag tag = GroupTag::AbelianN;
  int dim = 1;  // coordinate count: n for abelian, 3 for heisenberg
  std::array<std::int64_t, 3> c{0, 0, 0};
};

GroupElement group_identity(GroupTag tag, int dim);
GroupElement multiply(const GroupElement& g1, const GroupElement& g2);
GroupElement inverse(const GroupElement& g);
bool operator==(const GroupElement& a, const GroupElement& b);

struct GroupPresentation {
  GroupTag tag = GroupTag::AbelianN;
  int dim = 1;
  std::vector<GroupElement> generators;  // symmetric set
  std::vector<int> ranks;                // lower central series ranks per stratum
};

/// Standard presentations: Z^n with {+-e_i}, H3(Z) with {a,a^-1,b,b^-1}.
GroupPresentation standard_presentation(GroupTag tag, int dim);
GroupPresentation abelian_presentation(int dim, std::vector<GroupElement> generators);

/// Bass's weighted sum of the lower central series ranks.
int bass_dimension(const GroupPresentation& p);

/// Exact word norm by breadth-first search over the Cayley graph.
/// Throws ResourceError when the norm exceeds radius_cap.
int word_norm(const GroupPresentation& p, const GroupElement& g, int radius_cap);

struct BallEnumeration {
  std::vector<GroupElement> elements;  // BFS order
  std::vector<int> norms;              // word norm per element
  std::vector<std::int64_t> counts;    // |B(r)| for r = 0..r_max
};

/// Enumerates the closed ball of the given radius. memory_budget bounds the
/// dense visited array in bytes.
BallEnumeration enumerate_ball(const GroupPresentation& p, int r_max,
                               std::size_t memory_budget = std::size_t(1) << 28);

struct GrowthTable {
  std::vector<std::int64_t> counts;  // |B(r)|, r = 0..r_max
  double fitted_exponent = 0.0;      // log-log slope over the top half of the range
  int bass_k = 0;
};

GrowthTable ball_growth(const GroupPresentation& p, int r_max,
                        std::size_t memory_budget = std::size_t(1) << 28);

using MetricOracle = std::function<double(const Vec&, const Vec&)>;

MetricOracle flat_metric();

/// d(g1 . x0, g2 . x0) for the abelian translation action.
double orbit_metric(const Vec& x0, const GroupElement& g1, const GroupElement& g2,
                    const MetricOracle& oracle = flat_metric());

}  // namespace nilhj
