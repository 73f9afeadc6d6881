#include "toric/perspectives.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "doctest.h"
#include "toric/lattice.hpp"
#include "toric/rng.hpp"

using namespace toric;

namespace {

Syndrome nonempty_syndrome(const ToricLattice& lat, Rng& rng, double p = 0.12) {
  for (;;) {
    Syndrome syn = compute_syndrome(lat, sample_errors(lat, p, rng));
    if (syn.defect_count() > 0) return syn;
  }
}

}  // namespace

TEST_CASE("empty syndrome has no perspectives") {
  ToricLattice lat(5);
  Syndrome empty = compute_syndrome(lat, ErrorState(5));
  CHECK_THROWS_WITH_AS(make_perspectives(empty), "terminal state has no perspectives",
                       std::invalid_argument);
}

TEST_CASE("one perspective per defect, ordered row-major by origin") {
  Rng rng(99);
  for (int d : {3, 5, 7}) {
    ToricLattice lat(d);
    for (int i = 0; i < 100; ++i) {
      Syndrome syn = nonempty_syndrome(lat, rng);
      auto persps = make_perspectives(syn);
      auto coords = syn.defect_coords();
      REQUIRE(persps.size() == coords.size());
      for (size_t k = 0; k < persps.size(); ++k) {
        CHECK(persps[k].origin == coords[k]);
        if (k > 0) {
          int prev = persps[k - 1].origin.r * d + persps[k - 1].origin.c;
          int cur = persps[k].origin.r * d + persps[k].origin.c;
          CHECK(prev < cur);
        }
      }
    }
  }
}

TEST_CASE("each perspective centers its defect and preserves the count") {
  Rng rng(100);
  for (int d : {3, 5, 7}) {
    ToricLattice lat(d);
    int center = center_of(d);
    for (int i = 0; i < 100; ++i) {
      Syndrome syn = nonempty_syndrome(lat, rng);
      for (const Perspective& p : make_perspectives(syn)) {
        CHECK(p.at(center, center) == 1);
        int total = 0;
        for (int v : p.grid) total += v;
        CHECK(total == syn.defect_count());
      }
    }
  }
}

TEST_CASE("perspective grid is the syndrome translated to center") {
  Rng rng(101);
  for (int d : {3, 5}) {
    ToricLattice lat(d);
    int center = center_of(d);
    for (int i = 0; i < 100; ++i) {
      Syndrome syn = nonempty_syndrome(lat, rng);
      for (const Perspective& p : make_perspectives(syn)) {
        // Undo the centering shift; the original syndrome must come back.
        Syndrome as_syn{d, p.grid};
        Syndrome back = translate_syndrome(as_syn, p.origin.r - center, p.origin.c - center);
        CHECK(back == syn);
      }
    }
  }
}

TEST_CASE("two defects see each other at the same relative offset") {
  ToricLattice lat(5);
  ErrorState e(5);
  e.flips[lat.v_index(1, 2)] = 1;  // defects at (1,1) and (1,2)
  Syndrome syn = compute_syndrome(lat, e);
  REQUIRE(syn.defect_count() == 2);
  auto persps = make_perspectives(syn);
  REQUIRE(persps.size() == 2);
  int center = center_of(5);
  // First perspective centers (1,1); the partner sits one column right.
  CHECK(persps[0].at(center, center + 1) == 1);
  // Second centers (1,2); the partner sits one column left.
  CHECK(persps[1].at(center, center - 1) == 1);
}

TEST_CASE("a defect already at center yields the raw syndrome") {
  ToricLattice lat(5);
  int center = center_of(5);
  ErrorState e(5);
  e.flips[lat.v_index(center, center + 1)] = 1;  // defects at (2,2) and (2,3)
  Syndrome syn = compute_syndrome(lat, e);
  REQUIRE(syn.at(center, center) == 1);
  auto persps = make_perspectives(syn);
  bool found = false;
  for (const Perspective& p : persps) {
    if (p.origin == Coord{center, center}) {
      found = true;
      CHECK(p.grid == syn.defects);
    }
  }
  CHECK(found);
}

TEST_CASE("translated syndromes produce the same multiset of grids") {
  Rng rng(102);
  for (int d : {3, 5, 7}) {
    ToricLattice lat(d);
    for (int i = 0; i < 60; ++i) {
      Syndrome syn = nonempty_syndrome(lat, rng);
      int dr = rng.below(d), dc = rng.below(d);
      Syndrome moved = translate_syndrome(syn, dr, dc);
      std::multiset<std::vector<uint8_t>> a, b;
      for (const Perspective& p : make_perspectives(syn)) a.insert(p.grid);
      for (const Perspective& p : make_perspectives(moved)) b.insert(p.grid);
      CHECK(a == b);
    }
  }
}

TEST_CASE("the four actions map to four distinct edges around the origin") {
  Rng rng(103);
  for (int d : {3, 5, 7}) {
    ToricLattice lat(d);
    for (int i = 0; i < 50; ++i) {
      Syndrome syn = nonempty_syndrome(lat, rng);
      for (const Perspective& p : make_perspectives(syn)) {
        std::set<int> qubits;
        for (int a = 0; a < 4; ++a) {
          int q = resolve_action(lat, p, static_cast<ActionId>(a));
          REQUIRE(q >= 0);
          REQUIRE(q < lat.n_qubits());
          qubits.insert(q);
          auto adj = lat.qubit_plaquettes(q);
          CHECK((adj[0] == p.origin || adj[1] == p.origin));
        }
        CHECK(qubits.size() == 4);
      }
    }
  }
}

TEST_CASE("resolved actions match a brute-force adjacency table") {
  // Independent oracle: for each action direction, find by exhaustive search
  // the unique edge whose single flip lights the origin plaquette and its
  // neighbour in that direction.
  ToricLattice lat(3);
  int d = 3;
  ErrorState e(d);
  e.flips[lat.v_index(0, 1)] = 1;  // defects at (0,0) and (0,1)
  Syndrome syn = compute_syndrome(lat, e);
  auto persps = make_perspectives(syn);
  REQUIRE(persps[0].origin == Coord{0, 0});

  auto edge_for = [&](Coord a, Coord b) {
    for (int q = 0; q < lat.n_qubits(); ++q) {
      ErrorState single(d);
      single.flips[q] = 1;
      Syndrome s = compute_syndrome(lat, single);
      if (s.defect_count() == 2 && s.at(a.r, a.c) == 1 && s.at(b.r, b.c) == 1) return q;
    }
    return -1;
  };

  CHECK(resolve_action(lat, persps[0], ActionId::kUp) == edge_for({0, 0}, {2, 0}));
  CHECK(resolve_action(lat, persps[0], ActionId::kDown) == edge_for({0, 0}, {1, 0}));
  CHECK(resolve_action(lat, persps[0], ActionId::kLeft) == edge_for({0, 0}, {0, 2}));
  CHECK(resolve_action(lat, persps[0], ActionId::kRight) == edge_for({0, 0}, {0, 1}));
}

TEST_CASE("acting on a perspective toggles the two plaquettes at that edge") {
  Rng rng(104);
  ToricLattice lat(5);
  for (int i = 0; i < 100; ++i) {
    Syndrome syn = nonempty_syndrome(lat, rng);
    auto persps = make_perspectives(syn);
    const Perspective& p = persps[rng.below(static_cast<int>(persps.size()))];
    int a = rng.below(4);
    int q = resolve_action(lat, p, static_cast<ActionId>(a));
    ErrorState probe(5);
    probe.flips[q] = 1;
    Syndrome delta = compute_syndrome(lat, probe);
    auto adj = lat.qubit_plaquettes(q);
    CHECK(delta.defect_count() == 2);
    CHECK((adj[0] == p.origin || adj[1] == p.origin));
  }
}

TEST_CASE("every action stays adjacent to a live defect") {
  Rng rng(105);
  for (int d : {3, 5, 7}) {
    ToricLattice lat(d);
    for (int i = 0; i < 50; ++i) {
      Syndrome syn = nonempty_syndrome(lat, rng);
      for (const Perspective& p : make_perspectives(syn))
        for (int a = 0; a < 4; ++a) {
          int q = resolve_action(lat, p, static_cast<ActionId>(a));
          auto adj = lat.qubit_plaquettes(q);
          bool near_defect = syn.at(adj[0].r, adj[0].c) == 1 || syn.at(adj[1].r, adj[1].c) == 1;
          CHECK(near_defect);
        }
    }
  }
}

TEST_CASE("action surface is 4N and never exceeds the raw qubit count when N is small") {
  Rng rng(106);
  for (int d : {3, 5, 7}) {
    ToricLattice lat(d);
    for (int i = 0; i < 50; ++i) {
      Syndrome syn = nonempty_syndrome(lat, rng);
      int n = syn.defect_count();
      if (n <= d * d / 2) CHECK(4 * n <= 2 * d * d);
    }
  }
}
