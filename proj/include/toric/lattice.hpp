#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "toric/rng.hpp"

namespace toric {

struct Coord {
  int r = 0;
  int c = 0;
  bool operator==(const Coord&) const = default;
};

// d x d toric lattice with one qubit on every edge (2*d^2 qubits).
//
// Edge indexing: two d x d planes.
//   H(r,c) = orientation 0, index r*d + c          (top edge of plaquette (r,c))
//   V(r,c) = orientation 1, index d*d + r*d + c     (left edge of plaquette (r,c))
// H(r,c) separates plaquettes (r-1,c) and (r,c); V(r,c) separates (r,c-1)
// and (r,c). Both directions are periodic.
class ToricLattice {
 public:
  explicit ToricLattice(int d);

  int d() const { return d_; }
  int n_qubits() const { return 2 * d_ * d_; }
  int n_plaquettes() const { return d_ * d_; }

  int wrap(int x) const {
    x %= d_;
    return x < 0 ? x + d_ : x;
  }

  int h_index(int r, int c) const { return wrap(r) * d_ + wrap(c); }
  int v_index(int r, int c) const { return d_ * d_ + wrap(r) * d_ + wrap(c); }
  bool is_vertical(int qubit) const { return qubit >= d_ * d_; }

  // Boundary edges of plaquette (r,c) in action order: up, down, left, right.
  std::array<int, 4> plaquette_edges(int r, int c) const {
    return {h_index(r, c), h_index(r + 1, c), v_index(r, c), v_index(r, c + 1)};
  }

  // The two plaquettes whose stabilizer outcome a flip on `qubit` toggles.
  std::array<Coord, 2> qubit_plaquettes(int qubit) const;

  // The two lattice vertices the edge `qubit` connects.
  std::array<Coord, 2> qubit_vertices(int qubit) const;

  // The four edges meeting at lattice vertex (r,c): the support of one
  // X-type stabilizer. Flipping all four is the elementary trivial loop.
  std::array<int, 4> vertex_star(int r, int c) const {
    return {h_index(r, c), h_index(r, c - 1), v_index(r, c), v_index(r - 1, c)};
  }

 private:
  int d_;
};

// Hidden bit-flip configuration of the environment, one bit per qubit.
struct ErrorState {
  int d = 0;
  std::vector<uint8_t> flips;

  ErrorState() = default;
  explicit ErrorState(int d_) : d(d_), flips(2 * d_ * d_, 0) {}

  int weight() const;
  bool empty() const { return weight() == 0; }
  ErrorState operator^(const ErrorState& other) const;
};

// Plaquette stabilizer outcomes: defects(r,c) = 1 where the outcome is -1.
struct Syndrome {
  int d = 0;
  std::vector<uint8_t> defects;

  Syndrome() = default;
  explicit Syndrome(int d_) : d(d_), defects(d_ * d_, 0) {}
  Syndrome(int d_, std::vector<uint8_t> defects_) : d(d_), defects(std::move(defects_)) {}

  uint8_t& at(int r, int c) { return defects[r * d + c]; }
  uint8_t at(int r, int c) const { return defects[r * d + c]; }
  int defect_count() const;
  bool empty() const { return defect_count() == 0; }
  std::vector<Coord> defect_coords() const;
  bool operator==(const Syndrome&) const = default;
};

// Winding parities of a closed (syndrome-free) configuration around the two
// torus directions. (0,0) means no logical error.
struct HomologyClass {
  int h_parity = 0;
  int v_parity = 0;
  bool operator==(const HomologyClass&) const = default;
  bool trivial() const { return h_parity == 0 && v_parity == 0; }
};

// I.i.d. bit-flip noise: every qubit flips independently with probability p.
ErrorState sample_errors(const ToricLattice& lattice, double p, Rng& rng);
ErrorState sample_errors(const ToricLattice& lattice, double p, uint64_t seed);

Syndrome compute_syndrome(const ToricLattice& lattice, const ErrorState& errs);

// Returns a copy with one bit toggled; exactly two plaquette outcomes change.
ErrorState apply_flip(const ErrorState& errs, int qubit);
void apply_flip_in_place(ErrorState& errs, int qubit);

// Cyclic shift of a configuration by (dr, dc) plaquette steps.
ErrorState translate_errors(const ToricLattice& lattice, const ErrorState& errs, int dr, int dc);
Syndrome translate_syndrome(const Syndrome& syn, int dr, int dc);

// Winding parities of a closed configuration, counted across the fixed
// column-0 / row-0 cuts. Requires an empty syndrome.
HomologyClass homology_class(const ToricLattice& lattice, const ErrorState& combined);

// True iff the closed configuration carries no logical error.
bool is_success(const ToricLattice& lattice, const ErrorState& combined);

// Compact JSON forms for fixtures and debug dumps:
//   {"d": n, "flips": [qubit indices]} / {"d": n, "defects": [[r,c], ...]}
std::string to_json(const ErrorState& errs);
std::string to_json(const Syndrome& syn);
ErrorState error_state_from_json(const std::string& text);
Syndrome syndrome_from_json(const std::string& text);

}  // namespace toric
