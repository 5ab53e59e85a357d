#pragma once

#include "latflow/rational.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace latflow {

using Elem = int;

struct not_a_lattice : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct no_bounds : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct too_large : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct not_comparable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Finite bounded lattice with explicit order relation.
///
/// Elements are dense indices in insertion order; every "first found" rule
/// below uses that order, so results are reproducible. Two storage backends:
/// a generic one (order bitmatrix, meet/join tables when small) and a set-mask
/// one for lattices of closed vertex subsets of a DAG, where meet/join are
/// mask intersection/union and stay O(1) at any size.
class FinLattice {
 public:
  /// Builds from an explicit element list and a relation whose
  /// reflexive-transitive closure is the order; covers suffice.
  /// Verifies that every pair has a unique meet and join.
  static FinLattice from_leq_pairs(std::vector<std::string> names,
                                   const std::vector<std::pair<Elem, Elem>>& leq_pairs);

  /// Builds a lattice whose elements are the given subsets of {0..n_vertices-1},
  /// ordered by inclusion and closed under union/intersection (not re-verified).
  /// `vertex_outmask` is the DAG adjacency used by the complemented-interval
  /// fast path; may be empty when unknown.
  static FinLattice from_masks(std::vector<uint64_t> masks, int n_vertices,
                               std::vector<uint64_t> vertex_outmask,
                               std::vector<std::string> names);

  /// Builds from componentwise data: element i has key rows[i]; leq/meet/join
  /// are inherited componentwise from `base` (caller guarantees closure).
  static FinLattice from_tuples(const FinLattice& base,
                                const std::vector<std::vector<Elem>>& rows);

  int size() const { return n_; }
  const std::string& name(Elem e) const { return names_[e]; }
  Elem index_of(const std::string& name) const;
  Elem bottom() const { return bottom_; }
  Elem top() const { return top_; }

  bool leq(Elem a, Elem b) const;
  Elem meet(Elem a, Elem b) const;
  Elem join(Elem a, Elem b) const;
  Elem join_all(const std::vector<Elem>& xs) const;
  Elem meet_all(const std::vector<Elem>& xs) const;

  /// Height of e above bottom (= common maximal chain length, L modular).
  int rank(Elem e) const;
  int length() const { return rank(top_); }

  const std::vector<std::pair<Elem, Elem>>& covers() const;
  /// Index into covers() or -1.
  int cover_index(Elem lo, Elem hi) const;
  /// Perspectivity class of a covering interval.
  int cover_class(int cover_idx) const;
  int num_classes() const;

  std::vector<Elem> interval(Elem lo, Elem hi) const;
  std::vector<Elem> atoms_in(Elem lo, Elem hi) const;

  /// Common length of maximal chains in [lo,hi]; throws not_comparable.
  int jh_length(Elem lo, Elem hi) const;

  /// First y (element order) with x^y = lo and x v y = hi.
  std::optional<Elem> complement_in(Elem x, Elem lo, Elem hi) const;
  bool is_complemented_interval(Elem lo, Elem hi) const;

  /// First modular-law violation (a,b,x) with a <= b, or nullopt.
  std::optional<std::array<Elem, 3>> modularity_counterexample() const;

  /// Join of all atoms over lo inside [lo,hi] (one Loewy step).
  Elem socle_step(Elem lo, Elem hi) const;

  /// Accumulates per-cover values from bottom: out[e] = sum of vals over any
  /// maximal chain bottom -> e (consistency across paths is asserted).
  std::vector<Rat> accumulate_covers(const std::vector<Rat>& per_cover) const;

  bool has_masks() const { return backend_ == Backend::Mask; }
  uint64_t mask_of(Elem e) const { return masks_[e]; }
  int mask_vertices() const { return n_vertices_; }
  std::optional<Elem> find_mask(uint64_t m) const;

 private:
  enum class Backend { Generic, Mask };

  void build_rank_and_covers() const;
  bool leq_generic(Elem a, Elem b) const { return (leq_[size_t(a) * words_ + (b >> 6)] >> (b & 63)) & 1; }
  Elem scan_meet(Elem a, Elem b) const;
  Elem scan_join(Elem a, Elem b) const;
  void verify_lattice();
  void ensure_classes() const;

  int n_ = 0;
  Backend backend_ = Backend::Generic;
  std::vector<std::string> names_;
  Elem bottom_ = -1, top_ = -1;

  // Generic backend
  size_t words_ = 0;
  std::vector<uint64_t> leq_;                  // row a: bitset of {b : a <= b}
  std::vector<Elem> meet_tab_, join_tab_;      // n*n when small enough
  std::vector<Elem> by_rank_desc_;             // scan order for table-less meet/join

  // Mask backend
  std::vector<uint64_t> masks_;
  std::unordered_map<uint64_t, Elem> mask_index_;
  std::vector<uint64_t> vertex_outmask_;
  int n_vertices_ = 0;

  mutable std::vector<int> rank_;
  mutable std::vector<std::pair<Elem, Elem>> covers_;
  mutable std::unordered_map<uint64_t, int> cover_idx_;
  mutable std::vector<int> cover_class_;
  mutable int num_classes_ = -1;
  mutable std::unordered_map<uint64_t, bool> compl_memo_;

  static constexpr int kTableCap = 1200;
};

/// Positive weights on perspectivity classes of covering intervals.
struct XFunctional {
  std::vector<Rat> class_value;  // indexed by class id, all > 0
};

/// Per-element accumulants X([0,e]) of an X functional.
std::vector<Rat> x0_values(const FinLattice& L, const XFunctional& X);

struct IntervalClass {
  int class_id;
  std::pair<Elem, Elem> representative;
  std::vector<int> cover_indices;
};

/// Partition of all covering intervals by the equivalence generated by
/// [a, a v b] ~ [a ^ b, b]; computed with union-find over element pairs.
std::vector<IntervalClass> interval_classes(const FinLattice& L);

struct Dag;  // defined in dag.hpp

struct SubgraphLattice {
  FinLattice lat;
  XFunctional x;  // class of the cover adding vertex i gets mass m_i
};

/// Lattice of closed vertex subsets (no arrows leading out), ordered by
/// inclusion. Enumerated by recursive extension over a topological order.
SubgraphLattice subgraph_lattice(const Dag& g, size_t element_cap = 100000);

}  // namespace latflow
