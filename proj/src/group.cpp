#include "nilhj/group.hpp"

#include <cmath>
#include <cstdlib>

namespace nilhj {

GroupElement group_identity(GroupTag tag, int dim) {
  GroupElement e;
  e.tag = tag;
  e.dim = tag == GroupTag::Heisenberg3 ? 3 : dim;
  return e;
}

GroupElement multiply(const GroupElement& g1, const GroupElement& g2) {
  if (g1.tag != g2.tag || g1.dim != g2.dim) throw InputError("multiply: group tag mismatch");
  GroupElement r = g1;
  if (g1.tag == GroupTag::AbelianN) {
    for (int i = 0; i < g1.dim; ++i) r.c[i] = g1.c[i] + g2.c[i];
  } else {
    r.c[0] = g1.c[0] + g2.c[0];
    r.c[1] = g1.c[1] + g2.c[1];
    r.c[2] = g1.c[2] + g2.c[2] + g1.c[0] * g2.c[1];
  }
  return r;
}

GroupElement inverse(const GroupElement& g) {
  GroupElement r = g;
  if (g.tag == GroupTag::AbelianN) {
    for (int i = 0; i < g.dim; ++i) r.c[i] = -g.c[i];
  } else {
    r.c[0] = -g.c[0];
    r.c[1] = -g.c[1];
    r.c[2] = -g.c[2] + g.c[0] * g.c[1];
  }
  return r;
}

bool operator==(const GroupElement& a, const GroupElement& b) {
  return a.tag == b.tag && a.dim == b.dim && a.c == b.c;
}

GroupPresentation standard_presentation(GroupTag tag, int dim) {
  GroupPresentation p;
  p.tag = tag;
  if (tag == GroupTag::AbelianN) {
    if (dim < 1 || dim > 3) throw InputError("abelian presentations support n in {1,2,3}");
    p.dim = dim;
    p.ranks = {dim};
    for (int i = 0; i < dim; ++i) {
      for (int s : {1, -1}) {
        GroupElement g = group_identity(tag, dim);
        g.c[i] = s;
        p.generators.push_back(g);
      }
    }
  } else {
    p.dim = 3;
    p.ranks = {2, 1};
    for (int i = 0; i < 2; ++i) {
      for (int s : {1, -1}) {
        GroupElement g = group_identity(tag, 3);
        g.c[i] = s;
        p.generators.push_back(g);
      }
    }
  }
  return p;
}

GroupPresentation abelian_presentation(int dim, std::vector<GroupElement> generators) {
  if (generators.empty()) throw InputError("presentation needs at least one generator");
  GroupPresentation p;
  p.tag = GroupTag::AbelianN;
  p.dim = dim;
  p.ranks = {dim};
  // the set must be symmetric
  for (const auto& g : generators) {
    if (g.tag != GroupTag::AbelianN || g.dim != dim)
      throw InputError("generator tag/dimension mismatch");
    const GroupElement gi = inverse(g);
    bool found = false;
    for (const auto& h : generators)
      if (h == gi) found = true;
    if (!found) throw InputError("generating set is not symmetric");
  }
  p.generators = std::move(generators);
  return p;
}

int bass_dimension(const GroupPresentation& p) {
  int k = 0;
  for (size_t i = 0; i < p.ranks.size(); ++i) k += static_cast<int>(i + 1) * p.ranks[i];
  return k;
}

namespace {

// Dense visited array over a coordinate box sized from the BFS radius.
struct DenseVisited {
  std::array<std::int64_t, 3> lo{0, 0, 0};
  std::array<std::int64_t, 3> extent{1, 1, 1};
  int dim = 1;
  std::vector<uint8_t> bits;

  static DenseVisited for_ball(const GroupPresentation& p, int r, std::size_t budget) {
    DenseVisited v;
    v.dim = p.dim;
    std::array<std::int64_t, 3> bound{1, 1, 1};
    if (p.tag == GroupTag::AbelianN) {
      std::int64_t gmax = 1;
      for (const auto& g : p.generators)
        for (int i = 0; i < p.dim; ++i) gmax = std::max(gmax, std::abs(g.c[i]));
      for (int i = 0; i < p.dim; ++i) bound[i] = static_cast<std::int64_t>(r) * gmax + 1;
    } else {
      std::int64_t abmax = 1, cmax = 0;
      for (const auto& g : p.generators) {
        abmax = std::max({abmax, std::abs(g.c[0]), std::abs(g.c[1])});
        cmax = std::max(cmax, std::abs(g.c[2]));
      }
      bound[0] = bound[1] = static_cast<std::int64_t>(r) * abmax + 1;
      // per step |c| grows by at most |a|*|b_gen| + |c_gen|
      bound[2] = static_cast<std::int64_t>(r) * (bound[0] * abmax + cmax) + 1;
    }
    std::size_t total = 1;
    for (int i = 0; i < v.dim; ++i) {
      v.lo[i] = -bound[i];
      v.extent[i] = 2 * bound[i] + 1;
      total *= static_cast<std::size_t>(v.extent[i]);
    }
    if (total > budget)
      throw ResourceError("BFS memory budget exceeded; lower the radius or raise the budget");
    v.bits.assign(total, 0);
    return v;
  }

  bool in_range(const GroupElement& g) const {
    for (int i = 0; i < dim; ++i)
      if (g.c[i] < lo[i] || g.c[i] >= lo[i] + extent[i]) return false;
    return true;
  }

  std::size_t index(const GroupElement& g) const {
    std::size_t f = 0;
    for (int i = 0; i < dim; ++i)
      f = f * static_cast<std::size_t>(extent[i]) + static_cast<std::size_t>(g.c[i] - lo[i]);
    return f;
  }

  bool test_and_set(const GroupElement& g) {
    const std::size_t f = index(g);
    if (bits[f]) return true;
    bits[f] = 1;
    return false;
  }
};

}  // namespace

BallEnumeration enumerate_ball(const GroupPresentation& p, int r_max, std::size_t memory_budget) {
  if (r_max < 0) throw InputError("enumerate_ball: negative radius");
  DenseVisited visited = DenseVisited::for_ball(p, r_max, memory_budget);
  BallEnumeration out;
  const GroupElement e = group_identity(p.tag, p.dim);
  visited.test_and_set(e);
  out.elements.push_back(e);
  out.norms.push_back(0);
  out.counts.assign(static_cast<size_t>(r_max) + 1, 0);
  out.counts[0] = 1;

  std::vector<GroupElement> frontier{e};
  for (int r = 1; r <= r_max; ++r) {
    std::vector<GroupElement> next;
    for (const auto& g : frontier) {
      for (const auto& s : p.generators) {
        GroupElement h = multiply(g, s);
        if (!visited.in_range(h)) continue;  // cannot lie in the ball
        if (visited.test_and_set(h)) continue;
        next.push_back(h);
        out.elements.push_back(h);
        out.norms.push_back(r);
      }
    }
    out.counts[r] = out.counts[r - 1] + static_cast<std::int64_t>(next.size());
    frontier = std::move(next);
    if (frontier.empty()) {
      for (int rr = r + 1; rr <= r_max; ++rr) out.counts[rr] = out.counts[r];
      break;
    }
  }
  return out;
}

int word_norm(const GroupPresentation& p, const GroupElement& g, int radius_cap) {
  if (g.tag != p.tag || g.dim != p.dim) throw InputError("word_norm: tag mismatch");
  if (radius_cap < 0) throw InputError("word_norm: negative radius cap");
  const GroupElement e = group_identity(p.tag, p.dim);
  if (g == e) return 0;

  DenseVisited visited = DenseVisited::for_ball(p, radius_cap, std::size_t(1) << 28);
  visited.test_and_set(e);
  std::vector<GroupElement> frontier{e};
  for (int r = 1; r <= radius_cap; ++r) {
    std::vector<GroupElement> next;
    for (const auto& q : frontier) {
      for (const auto& s : p.generators) {
        GroupElement h = multiply(q, s);
        if (h == g) return r;
        if (!visited.in_range(h)) continue;
        if (visited.test_and_set(h)) continue;
        next.push_back(h);
      }
    }
    frontier = std::move(next);
    if (frontier.empty()) break;
  }
  throw ResourceError("word_norm: radius cap exceeded");
}

GrowthTable ball_growth(const GroupPresentation& p, int r_max, std::size_t memory_budget) {
  if (r_max < 2) throw InputError("ball_growth: radius too small to fit an exponent");
  const BallEnumeration ball = enumerate_ball(p, r_max, memory_budget);
  GrowthTable t;
  t.counts = ball.counts;
  t.bass_k = bass_dimension(p);

  // least squares slope of log|B(r)| vs log r over the top half of the range
  const int r_lo = r_max / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int r = r_lo; r <= r_max; ++r) {
    const double x = std::log(static_cast<double>(r));
    const double y = std::log(static_cast<double>(t.counts[r]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  t.fitted_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return t;
}

MetricOracle flat_metric() {
  return [](const Vec& a, const Vec& b) { return (a - b).norm(); };
}

double orbit_metric(const Vec& x0, const GroupElement& g1, const GroupElement& g2,
                    const MetricOracle& oracle) {
  if (g1.tag != GroupTag::AbelianN || g2.tag != GroupTag::AbelianN)
    throw InputError("orbit_metric: only the abelian cover is discretized");
  if (g1.dim != g2.dim || x0.size() != g1.dim) throw InputError("orbit_metric: dimension mismatch");
  Vec a = x0, b = x0;
  for (int i = 0; i < g1.dim; ++i) {
    a(i) += static_cast<double>(g1.c[i]);
    b(i) += static_cast<double>(g2.c[i]);
  }
  return oracle(a, b);
}

}  // namespace nilhj
