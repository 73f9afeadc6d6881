#include "toric/perspectives.hpp"

#include <stdexcept>

namespace toric {

std::vector<Perspective> make_perspectives(const Syndrome& syn) {
  int d = syn.d;
  auto defects = syn.defect_coords();  // row-major order
  if (defects.empty()) {
    throw std::invalid_argument("terminal state has no perspectives");
  }
  int center = center_of(d);
  std::vector<Perspective> out;
  out.reserve(defects.size());
  for (const auto& origin : defects) {
    Perspective p;
    p.d = d;
    p.grid.assign(d * d, 0);
    p.origin = origin;
    int dr = center - origin.r, dc = center - origin.c;
    for (const auto& def : defects) {
      int r = (def.r + dr % d + d) % d;
      int c = (def.c + dc % d + d) % d;
      p.grid[r * d + c] = 1;
    }
    out.push_back(std::move(p));
  }
  return out;
}

int resolve_action(const ToricLattice& lattice, const Perspective& persp, ActionId a) {
  int idx = static_cast<int>(a);
  if (idx < 0 || idx > 3) throw std::domain_error("invalid action id");
  return lattice.plaquette_edges(persp.origin.r, persp.origin.c)[idx];
}

}  // namespace toric
