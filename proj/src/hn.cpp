#include "latflow/hn.hpp"

#include <cassert>
#include <cmath>

namespace latflow {

std::vector<GaussRat> z0_values(const FinLattice& L, const Polarization& Z) {
  const auto& cv = L.covers();
  std::vector<GaussRat> rotated(Z.class_z.size());
  for (size_t c = 0; c < Z.class_z.size(); ++c) rotated[c] = Z.rotated(int(c));

  std::vector<GaussRat> out(L.size());
  std::vector<char> done(L.size(), 0);
  done[L.bottom()] = 1;
  std::vector<int> order(cv.size());
  for (size_t i = 0; i < cv.size(); ++i) order[i] = int(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return L.rank(cv[i].first) < L.rank(cv[j].first); });
  for (int i : order) {
    auto [lo, hi] = cv[i];
    if (!done[lo]) continue;
    int cls = L.cover_class(i);
    if (cls >= int(rotated.size())) throw bad_input("polarization misses a class");
    GaussRat v = out[lo] + rotated[cls];
    if (done[hi]) {
      assert(out[hi] == v && "polarization accumulation inconsistent");
    } else {
      out[hi] = v;
      done[hi] = 1;
    }
  }
  return out;
}

void validate_polarization(const FinLattice& L, const Polarization& Z) {
  if (int(Z.class_z.size()) < L.num_classes())
    throw bad_input("polarization must cover every interval class");
  for (size_t c = 0; c < Z.class_z.size(); ++c)
    if (!in_default_halfplane(Z.rotated(int(c))))
      throw bad_input("class value " + std::to_string(c) + " lies outside the half-plane");
}

double phase(const FinLattice& L, const Polarization& Z, Elem lo, Elem hi) {
  if (lo == hi) throw empty_interval("phase of an empty interval");
  if (!L.leq(lo, hi)) throw not_comparable("phase: lo must be below hi");
  auto z0 = z0_values(L, Z);
  GaussRat z = z0[hi] - z0[lo];
  return std::atan2(to_double(z.im), to_double(z.re));
}

bool is_semistable(const FinLattice& L, const Polarization& Z) {
  auto z0 = z0_values(L, Z);
  GaussRat total = z0[L.top()];
  for (Elem x = 0; x < L.size(); ++x) {
    if (x == L.bottom()) continue;
    if (phase_less(total, z0[x])) return false;
  }
  return true;
}

bool is_stable(const FinLattice& L, const Polarization& Z) {
  auto z0 = z0_values(L, Z);
  GaussRat total = z0[L.top()];
  for (Elem x = 0; x < L.size(); ++x) {
    if (x == L.bottom() || x == L.top()) continue;
    if (!phase_less(z0[x], total)) return false;
  }
  return true;
}

HNFiltration hn_filtration_interval(const FinLattice& L, const std::vector<GaussRat>& z0,
                                    Elem lo, Elem hi) {
  HNFiltration out;
  out.chain.push_back(lo);
  Elem cur = lo;
  while (cur != hi) {
    // Max phase over Z([cur, x]); the next step is the join of all maximizers.
    GaussRat best;
    bool have = false;
    for (Elem x = 0; x < L.size(); ++x) {
      if (x == cur || !L.leq(cur, x) || !L.leq(x, hi)) continue;
      GaussRat z = z0[x] - z0[cur];
      if (!have || phase_less(best, z)) {
        best = z;
        have = true;
      }
    }
    assert(have);
    Elem next = cur;
    for (Elem x = 0; x < L.size(); ++x) {
      if (x == cur || !L.leq(cur, x) || !L.leq(x, hi)) continue;
      if (phase_equal(z0[x] - z0[cur], best)) next = L.join(next, x);
    }
    out.step_z.push_back(z0[next] - z0[cur]);
#ifndef NDEBUG
    // Each step is semistable and phases strictly decrease.
    for (Elem x = 0; x < L.size(); ++x)
      if (x != cur && L.leq(cur, x) && L.leq(x, next))
        assert(!phase_less(out.step_z.back(), z0[x] - z0[cur]));
    if (out.step_z.size() >= 2)
      assert(phase_less(out.step_z.back(), out.step_z[out.step_z.size() - 2]));
#endif
    out.chain.push_back(next);
    cur = next;
  }
  return out;
}

HNFiltration hn_filtration(const FinLattice& L, const Polarization& Z) {
  auto z0 = z0_values(L, Z);
  return hn_filtration_interval(L, z0, L.bottom(), L.top());
}

std::vector<double> HNFiltration::phases() const {
  std::vector<double> out;
  out.reserve(step_z.size());
  for (const auto& z : step_z) out.push_back(std::atan2(to_double(z.im), to_double(z.re)));
  return out;
}

SqrtSum mass_of_chain(const std::vector<GaussRat>& step_z) {
  SqrtSum m;
  for (const auto& z : step_z) m.add_sqrt(z.norm2());
  return m;
}

SqrtSum mass(const FinLattice& L, const Polarization& Z) {
  if (L.size() == 1) return SqrtSum{};
  return mass_of_chain(hn_filtration(L, Z).step_z);
}

}  // namespace latflow
