#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "toric/lattice.hpp"

namespace toric {

// Complete graph on the defects of one syndrome, with the toric Manhattan
// metric. Node order matches Syndrome::defect_coords() (row-major).
struct DefectGraph {
  int d = 0;
  std::vector<Coord> nodes;
  std::vector<std::vector<int64_t>> weight;  // weight[i][j], symmetric, zero diagonal
};

struct Matching {
  std::vector<std::pair<int, int>> pairs;  // node indices into DefectGraph::nodes
  int64_t total_weight = 0;
};

int toric_distance(int d, Coord a, Coord b);

DefectGraph build_defect_graph(const Syndrome& syn);

// Exact minimum-weight perfect matching. Throws std::invalid_argument on odd
// node count.
Matching min_weight_matching(const DefectGraph& g);

// Realizes matched pairs as flips along L-shaped shortest paths (row segment
// first, then column segment; shorter wrap direction per axis).
ErrorState matching_to_correction(const ToricLattice& lattice, const Syndrome& syn, const Matching& m);

ErrorState mwpm_decode(const ToricLattice& lattice, const Syndrome& syn);

}  // namespace toric
