#include "toric/mwpm.hpp"

#include <cassert>
#include <cstdlib>
#include <stdexcept>

#include "toric/matching.hpp"

namespace toric {
namespace {

// Signed step count along one periodic axis: walk `steps` times in direction
// `dir` to get from a to b the short way around. Odd d rules out ties between
// the two wrap directions.
struct AxisWalk {
  int steps;
  int dir;
};

AxisWalk shortest_axis_walk(int d, int from, int to) {
  int fwd = ((to - from) % d + d) % d;
  int bwd = d - fwd;
  if (fwd == 0) return {0, +1};
  assert(fwd != bwd && "odd lattice dimension admits no wrap-direction ties");
  return fwd < bwd ? AxisWalk{fwd, +1} : AxisWalk{bwd, -1};
}

}  // namespace

int toric_distance(int d, Coord a, Coord b) {
  int dr = std::abs(a.r - b.r);
  int dc = std::abs(a.c - b.c);
  return std::min(dr, d - dr) + std::min(dc, d - dc);
}

DefectGraph build_defect_graph(const Syndrome& syn) {
  DefectGraph g;
  g.d = syn.d;
  g.nodes = syn.defect_coords();
  if (g.nodes.size() % 2 != 0) throw std::logic_error("defect count must be even");
  int n = static_cast<int>(g.nodes.size());
  g.weight.assign(n, std::vector<int64_t>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      g.weight[i][j] = g.weight[j][i] = toric_distance(g.d, g.nodes[i], g.nodes[j]);
  return g;
}

Matching min_weight_matching(const DefectGraph& g) {
  int n = static_cast<int>(g.nodes.size());
  if (n % 2 != 0) throw std::invalid_argument("perfect matching needs an even node count");
  Matching m;
  if (n == 0) return m;

  // The blossom solver maximizes, so flip the objective with a shift large
  // enough that perfect matchings dominate and cheaper ones score higher.
  int64_t w_max = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) w_max = std::max(w_max, g.weight[i][j]);
  int64_t shift = w_max * (n / 2) + 1;
  std::vector<std::vector<int64_t>> flipped(n, std::vector<int64_t>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) flipped[i][j] = shift - g.weight[i][j];

  std::vector<int> mate = max_weight_matching(n, flipped);
  for (int i = 0; i < n; ++i) {
    int j = mate[i];
    if (j < 0) throw std::logic_error("matching is not perfect");
    if (i < j) {
      m.pairs.emplace_back(i, j);
      m.total_weight += g.weight[i][j];
    }
  }
  return m;
}

ErrorState matching_to_correction(const ToricLattice& lattice, const Syndrome& syn, const Matching& m) {
  int d = lattice.d();
  ErrorState corr(d);
  std::vector<Coord> nodes = syn.defect_coords();
  for (auto [i, j] : m.pairs) {
    Coord a = nodes.at(i);
    Coord b = nodes.at(j);
    int r = a.r, c = a.c;
    AxisWalk rows = shortest_axis_walk(d, a.r, b.r);
    for (int s = 0; s < rows.steps; ++s) {
      // Crossing between plaquettes (r,c) and (r±1,c) flips their shared
      // horizontal edge.
      int flip = rows.dir > 0 ? lattice.h_index(r + 1, c) : lattice.h_index(r, c);
      corr.flips[flip] ^= 1;
      r = ((r + rows.dir) % d + d) % d;
    }
    AxisWalk cols = shortest_axis_walk(d, a.c, b.c);
    for (int s = 0; s < cols.steps; ++s) {
      int flip = cols.dir > 0 ? lattice.v_index(r, c + 1) : lattice.v_index(r, c);
      corr.flips[flip] ^= 1;
      c = ((c + cols.dir) % d + d) % d;
    }
    assert(r == b.r && c == b.c);
  }
  return corr;
}

ErrorState mwpm_decode(const ToricLattice& lattice, const Syndrome& syn) {
  DefectGraph g = build_defect_graph(syn);
  Matching m = min_weight_matching(g);
  return matching_to_correction(lattice, syn, m);
}

}  // namespace toric
