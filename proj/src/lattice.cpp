#include "toric/lattice.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace toric {

ToricLattice::ToricLattice(int d) : d_(d) {
  if (d < 3 || d % 2 == 0) {
    throw std::invalid_argument("lattice dimension must be odd and >= 3, got " + std::to_string(d));
  }
}

std::array<Coord, 2> ToricLattice::qubit_plaquettes(int qubit) const {
  if (qubit < 0 || qubit >= n_qubits()) {
    throw std::domain_error("qubit index out of range: " + std::to_string(qubit));
  }
  int plane = qubit % (d_ * d_);
  int r = plane / d_, c = plane % d_;
  if (is_vertical(qubit)) {
    return {Coord{r, wrap(c - 1)}, Coord{r, c}};
  }
  return {Coord{wrap(r - 1), c}, Coord{r, c}};
}

std::array<Coord, 2> ToricLattice::qubit_vertices(int qubit) const {
  if (qubit < 0 || qubit >= n_qubits()) {
    throw std::domain_error("qubit index out of range: " + std::to_string(qubit));
  }
  int plane = qubit % (d_ * d_);
  int r = plane / d_, c = plane % d_;
  if (is_vertical(qubit)) {
    return {Coord{r, c}, Coord{wrap(r + 1), c}};
  }
  return {Coord{r, c}, Coord{r, wrap(c + 1)}};
}

int ErrorState::weight() const {
  return std::accumulate(flips.begin(), flips.end(), 0);
}

ErrorState ErrorState::operator^(const ErrorState& other) const {
  if (d != other.d) throw std::invalid_argument("xor of error states with different d");
  ErrorState out(d);
  for (size_t i = 0; i < flips.size(); ++i) out.flips[i] = flips[i] ^ other.flips[i];
  return out;
}

int Syndrome::defect_count() const {
  return std::accumulate(defects.begin(), defects.end(), 0);
}

std::vector<Coord> Syndrome::defect_coords() const {
  std::vector<Coord> out;
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c)
      if (at(r, c)) out.push_back({r, c});
  return out;
}

ErrorState sample_errors(const ToricLattice& lattice, double p, Rng& rng) {
  if (p < 0.0 || p > 1.0) {
    throw std::domain_error("error probability must be in [0,1], got " + std::to_string(p));
  }
  ErrorState errs(lattice.d());
  for (auto& bit : errs.flips) bit = rng.bernoulli(p) ? 1 : 0;
  return errs;
}

ErrorState sample_errors(const ToricLattice& lattice, double p, uint64_t seed) {
  Rng rng(seed);
  return sample_errors(lattice, p, rng);
}

Syndrome compute_syndrome(const ToricLattice& lattice, const ErrorState& errs) {
  int d = lattice.d();
  Syndrome syn(d);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      int parity = 0;
      for (int q : lattice.plaquette_edges(r, c)) parity ^= errs.flips[q];
      syn.at(r, c) = static_cast<uint8_t>(parity);
    }
  }
  return syn;
}

void apply_flip_in_place(ErrorState& errs, int qubit) {
  if (qubit < 0 || qubit >= 2 * errs.d * errs.d) {
    throw std::domain_error("qubit index out of range: " + std::to_string(qubit));
  }
  errs.flips[qubit] ^= 1;
}

ErrorState apply_flip(const ErrorState& errs, int qubit) {
  ErrorState out = errs;
  apply_flip_in_place(out, qubit);
  return out;
}

ErrorState translate_errors(const ToricLattice& lattice, const ErrorState& errs, int dr, int dc) {
  int d = lattice.d();
  ErrorState out(d);
  for (int o = 0; o < 2; ++o) {
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) {
        int src = o * d * d + r * d + c;
        int dst = o * d * d + lattice.wrap(r + dr) * d + lattice.wrap(c + dc);
        out.flips[dst] = errs.flips[src];
      }
    }
  }
  return out;
}

Syndrome translate_syndrome(const Syndrome& syn, int dr, int dc) {
  int d = syn.d;
  auto wrap = [d](int x) {
    x %= d;
    return x < 0 ? x + d : x;
  };
  Syndrome out(d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) out.at(wrap(r + dr), wrap(c + dc)) = syn.at(r, c);
  return out;
}

HomologyClass homology_class(const ToricLattice& lattice, const ErrorState& combined) {
  if (!compute_syndrome(lattice, combined).empty()) {
    throw std::logic_error("homology_class requires an empty syndrome");
  }
  int d = lattice.d();
  HomologyClass h;
  for (int r = 0; r < d; ++r) h.h_parity ^= combined.flips[lattice.v_index(r, 0)];
  for (int c = 0; c < d; ++c) h.v_parity ^= combined.flips[lattice.h_index(0, c)];
  return h;
}

bool is_success(const ToricLattice& lattice, const ErrorState& combined) {
  return homology_class(lattice, combined).trivial();
}

std::string to_json(const ErrorState& errs) {
  nlohmann::json j;
  j["d"] = errs.d;
  auto indices = nlohmann::json::array();
  for (size_t q = 0; q < errs.flips.size(); ++q)
    if (errs.flips[q]) indices.push_back(q);
  j["flips"] = std::move(indices);
  return j.dump();
}

std::string to_json(const Syndrome& syn) {
  nlohmann::json j;
  j["d"] = syn.d;
  auto coords = nlohmann::json::array();
  for (const auto& dc : syn.defect_coords()) coords.push_back({dc.r, dc.c});
  j["defects"] = std::move(coords);
  return j.dump();
}

ErrorState error_state_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  ErrorState errs(j.at("d").get<int>());
  for (int q : j.at("flips").get<std::vector<int>>()) {
    if (q < 0 || q >= static_cast<int>(errs.flips.size()))
      throw std::domain_error("flip index out of range in JSON");
    errs.flips[q] = 1;
  }
  return errs;
}

Syndrome syndrome_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  Syndrome syn(j.at("d").get<int>());
  for (const auto& rc : j.at("defects")) {
    syn.at(rc.at(0).get<int>(), rc.at(1).get<int>()) = 1;
  }
  return syn;
}

}  // namespace toric
