#pragma once

// Test-side builders and brute-force oracles, independent of the library's
// algorithmic paths.

#include "latflow/dag.hpp"
#include "latflow/hn.hpp"
#include "latflow/lattice.hpp"

#include <functional>
#include <random>

namespace latflow::testsupport {

inline FinLattice make_chain(int length) {
  std::vector<std::string> names;
  std::vector<std::pair<Elem, Elem>> pairs;
  for (int i = 0; i <= length; ++i) names.push_back("c" + std::to_string(i));
  for (int i = 0; i < length; ++i) pairs.push_back({i, i + 1});
  return FinLattice::from_leq_pairs(names, pairs);
}

/// Boolean lattice on k atoms; elements = subsets in mask order.
inline FinLattice make_boolean(int k) {
  int n = 1 << k;
  std::vector<std::string> names;
  std::vector<std::pair<Elem, Elem>> pairs;
  for (int m = 0; m < n; ++m) names.push_back("s" + std::to_string(m));
  for (int m = 0; m < n; ++m)
    for (int b = 0; b < k; ++b)
      if (!(m >> b & 1)) pairs.push_back({m, m | (1 << b)});
  return FinLattice::from_leq_pairs(names, pairs);
}

/// Diamond M3: 0 < a,b,c < 1 (modular, not distributive).
inline FinLattice make_m3() {
  return FinLattice::from_leq_pairs({"0", "a", "b", "c", "1"},
                                    {{0, 1}, {0, 2}, {0, 3}, {1, 4}, {2, 4}, {3, 4}});
}

/// Pentagon N5: 0 < a < b < 1 and 0 < c < 1 (not modular).
inline FinLattice make_n5() {
  return FinLattice::from_leq_pairs({"0", "a", "b", "c", "1"},
                                    {{0, 1}, {1, 2}, {2, 4}, {0, 3}, {3, 4}});
}

inline Dag random_dag(std::mt19937_64& rng, int max_vertices, bool rational_masses = true) {
  int n = 1 + int(rng() % max_vertices);
  Dag g;
  for (int i = 0; i < n; ++i) {
    Rat mass = rational_masses ? Rat(1 + int(rng() % 6), 1 + int(rng() % 4)) : Rat(1);
    g.vertices.push_back({"v" + std::to_string(i), mass});
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng() % 100 < 35) g.edges.push_back({i, j, Rat(1 + int(rng() % 3))});
  return g;
}

/// Subspace lattice of F_2^3 (modular, non-distributive), 16 elements.
inline FinLattice make_subspace_f2_3() {
  // Subspaces encoded as bitmasks over the 7 nonzero vectors 1..7.
  auto closure = [](uint8_t vecs) {
    uint8_t s = vecs;
    for (int a = 1; a <= 7; ++a)
      for (int b = 1; b <= 7; ++b)
        if ((s >> (a - 1) & 1) && (s >> (b - 1) & 1) && a != b) s |= uint8_t(1) << ((a ^ b) - 1);
    return s;
  };
  std::vector<uint8_t> subs;
  for (int m = 0; m < 128; ++m) {
    uint8_t c = closure(uint8_t(m));
    while (c != closure(c)) c = closure(c);
    if (std::find(subs.begin(), subs.end(), c) == subs.end()) subs.push_back(c);
  }
  std::sort(subs.begin(), subs.end(), [](uint8_t a, uint8_t b) {
    int pa = __builtin_popcount(a), pb = __builtin_popcount(b);
    return pa != pb ? pa < pb : a < b;
  });
  std::vector<std::string> names;
  std::vector<std::pair<Elem, Elem>> pairs;
  for (size_t i = 0; i < subs.size(); ++i) names.push_back("u" + std::to_string(i));
  for (size_t i = 0; i < subs.size(); ++i)
    for (size_t j = 0; j < subs.size(); ++j)
      if (i != j && (subs[i] & ~subs[j]) == 0) pairs.push_back({int(i), int(j)});
  return FinLattice::from_leq_pairs(names, pairs);
}

/// Random small modular lattice: either a random DAG's subgraph lattice or a
/// random meet/join-closed subset of the subspace lattice of F_2^3.
inline FinLattice random_modular_lattice(std::mt19937_64& rng, int max_elems = 12) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    if (rng() % 2) {
      Dag g = random_dag(rng, 4);
      auto sub = subgraph_lattice(g);
      if (sub.lat.size() < 2 || sub.lat.size() > max_elems) continue;
      // Round-trip through an explicit poset so tests also exercise the
      // generic backend.
      std::vector<std::string> names;
      std::vector<std::pair<Elem, Elem>> pairs;
      for (Elem e = 0; e < sub.lat.size(); ++e) names.push_back(sub.lat.name(e));
      for (Elem a = 0; a < sub.lat.size(); ++a)
        for (Elem b = 0; b < sub.lat.size(); ++b)
          if (a != b && sub.lat.leq(a, b)) pairs.push_back({a, b});
      return FinLattice::from_leq_pairs(names, pairs);
    }
    static const FinLattice master = make_subspace_f2_3();
    std::vector<Elem> seed{master.bottom(), master.top()};
    int extra = 1 + int(rng() % 4);
    for (int i = 0; i < extra; ++i) seed.push_back(int(rng() % master.size()));
    std::vector<char> in(master.size(), 0);
    for (Elem e : seed) in[e] = 1;
    bool grew = true;
    while (grew) {
      grew = false;
      for (Elem a = 0; a < master.size(); ++a)
        for (Elem b = 0; b < master.size(); ++b)
          if (in[a] && in[b]) {
            for (Elem c : {master.meet(a, b), master.join(a, b)})
              if (!in[c]) {
                in[c] = 1;
                grew = true;
              }
          }
    }
    std::vector<Elem> chosen;
    for (Elem e = 0; e < master.size(); ++e)
      if (in[e]) chosen.push_back(e);
    if (int(chosen.size()) > max_elems || chosen.size() < 2) continue;
    std::vector<std::string> names;
    std::vector<std::pair<Elem, Elem>> pairs;
    for (size_t i = 0; i < chosen.size(); ++i) names.push_back("x" + std::to_string(i));
    for (size_t i = 0; i < chosen.size(); ++i)
      for (size_t j = 0; j < chosen.size(); ++j)
        if (i != j && master.leq(chosen[i], chosen[j])) pairs.push_back({int(i), int(j)});
    FinLattice L = FinLattice::from_leq_pairs(names, pairs);
    if (!L.modularity_counterexample()) return L;
  }
  throw std::runtime_error("random_modular_lattice: generation failed");
}

inline Polarization random_polarization(std::mt19937_64& rng, int n_classes) {
  Polarization z;
  for (int c = 0; c < n_classes; ++c) {
    Rat re(1 + int(rng() % 4), 1 + int(rng() % 3));
    Rat im(int(rng() % 7) - 3, 1 + int(rng() % 3));
    z.class_z.push_back(GaussRat(re, im));
  }
  return z;
}

/// All chains bottom = a_0 < ... < a_n = top with semistable subquotients and
/// strictly decreasing phases (brute force; the HN theorem says exactly one).
inline std::vector<std::vector<Elem>> brute_force_hn_chains(const FinLattice& L,
                                                            const Polarization& Z) {
  auto z0 = z0_values(L, Z);
  auto interval_semistable = [&](Elem lo, Elem hi) {
    GaussRat total = z0[hi] - z0[lo];
    for (Elem x = 0; x < L.size(); ++x) {
      if (x == lo || !L.leq(lo, x) || !L.leq(x, hi)) continue;
      if (phase_less(total, z0[x] - z0[lo])) return false;
    }
    return true;
  };
  std::vector<std::vector<Elem>> found;
  std::vector<Elem> chain{L.bottom()};
  std::function<void()> rec = [&]() {
    Elem cur = chain.back();
    if (cur == L.top()) {
      found.push_back(chain);
      return;
    }
    for (Elem nxt = 0; nxt < L.size(); ++nxt) {
      if (nxt == cur || !L.leq(cur, nxt)) continue;
      if (!interval_semistable(cur, nxt)) continue;
      if (chain.size() >= 2) {
        Elem prev = chain[chain.size() - 2];
        GaussRat zprev = z0[cur] - z0[prev], znext = z0[nxt] - z0[cur];
        if (!phase_less(znext, zprev)) continue;
      }
      chain.push_back(nxt);
      rec();
      chain.pop_back();
    }
  };
  rec();
  return found;
}

}  // namespace latflow::testsupport
