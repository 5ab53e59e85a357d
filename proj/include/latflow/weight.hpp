#pragma once

#include "latflow/gaussian.hpp"
#include "latflow/hn.hpp"
#include "latflow/lattice.hpp"
#include "latflow/sqrtsum.hpp"

#include <functional>

namespace latflow {

struct non_convergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Chain 0 = b_0 < b_1 < ... < b_n = 1 with strictly increasing rational
/// labels; the jump at b_k carries lambda_k. Encodes the step-function pair
/// a_plus / a_minus.
struct RFiltration {
  std::vector<Elem> chain;   // size jumps()+1
  std::vector<Rat> labels;   // size jumps()

  int jumps() const { return int(labels.size()); }
  bool trivial() const { return labels.size() <= 1; }

  /// Largest b_k with lambda_k <= t (right-continuous value).
  Elem a_plus(const Rat& t) const;
  /// Largest b_k with lambda_k < t.
  Elem a_minus(const Rat& t) const;
};

/// 1/2 min(pairwise support gaps; gaps-over-one minus one; 1).
Rat rho(const RFiltration& a);

/// All intervals [a_plus(t), a_plus(t+1)] are complemented; it suffices to
/// test t in supp(a) and supp(a) - 1.
bool is_paracomplemented(const FinLattice& L, const RFiltration& a);

/// The interpolation lattice Lambda(a): tuples x_lambda in
/// [a_minus(lambda), a_plus(lambda)] with [x_lambda, x_{lambda+1}]
/// complemented. Split into independent factors over maximal runs of
/// support points at consecutive unit gaps.
struct LambdaFactor {
  std::vector<int> jump_idx;               // indices into a.labels, unit-gap run
  std::vector<std::vector<Elem>> tuples;   // one entry per jump slot
  std::vector<GaussRat> zb;                // Z([bottom, x]) per tuple
  int bottom = -1, top = -1;               // tuple indices
};

std::vector<LambdaFactor> lambda_factors(const FinLattice& L, const std::vector<Rat>& x0,
                                         const RFiltration& a, size_t cap = 2000000);

/// Fully materialized Lambda(a) with its canonical polarization
/// Z = sum (1 + lambda i) X; for tests and small lattices.
struct MaterializedLambda {
  FinLattice lat;
  std::vector<GaussRat> z0;                // Z([bottom, x]) per element
  std::vector<std::vector<Elem>> tuples;   // full-support tuples in the base
  std::vector<Rat> slot_labels;
};

MaterializedLambda lambda_lattice(const FinLattice& L, const XFunctional& X,
                                  const RFiltration& a, size_t cap = 100000);

struct VerifyOptions {
  size_t tuple_cap = 1000000;   // above this, condition 3 falls back to sampling
  size_t samples = 200000;
  uint64_t seed = 1;
};

/// The balancing-condition check: (1) [b_{k-1}, b_l] complemented whenever
/// lambda_l - lambda_k < 1, (2) sum lambda_k X of jumps = 0, (3) the
/// inequality over all admissible interpolating tuples. `sampled` reports
/// when the tuple space exceeded the cap and condition 3 was sampled.
bool verify_weight_filtration(const FinLattice& L, const XFunctional& X, const RFiltration& a,
                              const VerifyOptions& opts = {}, bool* sampled = nullptr);

/// Mass of Lambda(a) (exact sum of square roots).
SqrtSum lambda_mass(const FinLattice& L, const std::vector<Rat>& x0, const RFiltration& a);

/// The unique paracomplemented R-filtration with Lambda(a) semistable of
/// phase 0, by event-driven mass descent from a balanced Loewy chain.
RFiltration weight_filtration(const FinLattice& L, const XFunctional& X,
                              size_t iteration_cap = 10000);
RFiltration weight_filtration_x0(const FinLattice& L, const std::vector<Rat>& x0,
                                 size_t iteration_cap = 10000);

/// Sublattice of phase-0 subobjects of the semistable Lambda(a), carried
/// with X = Re Z and the tuple realization into the base lattice.
struct DerivedLattice {
  FinLattice lat;
  std::vector<Rat> x0;                     // X'([bottom, x]) per element
  std::vector<std::vector<Elem>> tuples;   // full-support tuples in the base
  std::vector<Rat> slot_labels;
};

DerivedLattice phase_zero_sublattice(const FinLattice& L, const std::vector<Rat>& x0,
                                     const RFiltration& a, size_t cap = 100000);

struct IterLevel {
  RFiltration wf;     // weight filtration of the level's lattice
  int lattice_size;
};

struct IteratedFiltration {
  int depth = 0;
  std::vector<IterLevel> levels;
  // Flattened chain in the original lattice with lexicographic labels,
  // padded with trailing zeros to a common length max(depth, 1).
  std::vector<Elem> chain;
  std::vector<std::vector<Rat>> labels;
};

IteratedFiltration iterated_weight_filtration(const FinLattice& L, const XFunctional& X,
                                              int depth_cap = 16);

}  // namespace latflow
