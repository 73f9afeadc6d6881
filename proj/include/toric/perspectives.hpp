#pragma once

#include <vector>

#include "toric/lattice.hpp"

namespace toric {

// A syndrome cyclically translated so one chosen defect sits at the center
// cell. The network only ever sees syndromes in this frame, which shrinks
// its action surface to the 4 edges of the central plaquette.
struct Perspective {
  int d = 0;
  std::vector<uint8_t> grid;  // d*d, row-major, grid[center] == 1
  Coord origin;               // coordinate of the centered defect in the source syndrome

  uint8_t at(int r, int c) const { return grid[r * d + c]; }
};

// Flip one of the 4 boundary edges of the centered plaquette.
enum class ActionId : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

inline int center_of(int d) { return d / 2; }

// One perspective per defect, ordered row-major by origin.
// Throws std::invalid_argument for a defect-free syndrome.
std::vector<Perspective> make_perspectives(const Syndrome& syn);

// Absolute qubit index of the boundary edge of plaquette `origin` selected
// by the action, i.e. the action mapped back out of the centered frame.
int resolve_action(const ToricLattice& lattice, const Perspective& persp, ActionId a);

}  // namespace toric
