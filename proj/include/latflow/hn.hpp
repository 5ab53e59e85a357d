#pragma once

#include "latflow/gaussian.hpp"
#include "latflow/lattice.hpp"
#include "latflow/sqrtsum.hpp"

namespace latflow {

struct empty_interval : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct not_semistable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Additive map on interval classes landing in a half-plane H. H is the
/// default right half-plane (arg in (-pi/2, pi/2]) rotated by `direction`;
/// values are stored as given and rotated into the default frame on use.
struct Polarization {
  std::vector<GaussRat> class_z;           // per class id
  GaussRat direction{Rat(1), Rat(0)};      // reference direction of H

  GaussRat rotated(int cls) const { return class_z[cls] * direction.conj(); }
};

/// Per-element accumulants Z([0,e]) in the rotated (default half-plane) frame.
std::vector<GaussRat> z0_values(const FinLattice& L, const Polarization& Z);

/// Throws bad_input unless every class value lies in H (checked on
/// generators; H is a convex cone so positive combinations follow).
void validate_polarization(const FinLattice& L, const Polarization& Z);

/// Arg Z([lo,hi]) as a double, in the rotated frame. Throws empty_interval.
double phase(const FinLattice& L, const Polarization& Z, Elem lo, Elem hi);

bool is_semistable(const FinLattice& L, const Polarization& Z);
bool is_stable(const FinLattice& L, const Polarization& Z);

struct HNFiltration {
  std::vector<Elem> chain;        // 0 = a_0 < ... < a_n = 1
  std::vector<GaussRat> step_z;   // Z of each subquotient, rotated frame
  std::vector<double> phases() const;
};

/// The unique chain with semistable subquotients of strictly decreasing
/// phase, via the constructive join-of-maximizers recursion.
HNFiltration hn_filtration(const FinLattice& L, const Polarization& Z);

/// Same, restricted to an interval [lo,hi] with Z given by accumulants.
HNFiltration hn_filtration_interval(const FinLattice& L, const std::vector<GaussRat>& z0,
                                    Elem lo, Elem hi);

/// Sum of |Z| over the HN subquotients, as an exact sum of square roots.
SqrtSum mass(const FinLattice& L, const Polarization& Z);
SqrtSum mass_of_chain(const std::vector<GaussRat>& step_z);

}  // namespace latflow
