#include "latflow/hn.hpp"

#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace latflow;
using namespace latflow::testsupport;

namespace {

Polarization chain2_pol() {
  // 3-chain with step values 1+i then 1-i (two classes, cover order is 0<a, a<1).
  Polarization z;
  z.class_z = {GaussRat(Rat(1), Rat(1)), GaussRat(Rat(1), Rat(-1))};
  return z;
}

}  // namespace

TEST_CASE("phases") {
  auto c = make_chain(2);
  auto z = chain2_pol();
  validate_polarization(c, z);
  CHECK(phase(c, z, 0, 2) == doctest::Approx(0.0));
  CHECK(phase(c, z, 0, 1) == doctest::Approx(std::atan2(1, 1)));
  CHECK_THROWS_AS(phase(c, z, 1, 1), empty_interval);

  Polarization real;
  real.class_z = {GaussRat(Rat(2), Rat(0)), GaussRat(Rat(1), Rat(0))};
  for (Elem lo = 0; lo < 3; ++lo)
    for (Elem hi = lo + 1; hi < 3; ++hi) CHECK(phase(c, real, lo, hi) == doctest::Approx(0.0));
}

TEST_CASE("semistability and stability") {
  auto one_step = make_chain(1);
  Polarization z;
  z.class_z = {GaussRat(Rat(1), Rat(0))};
  CHECK(is_semistable(one_step, z));
  CHECK(is_stable(one_step, z));

  auto c = make_chain(2);
  CHECK_FALSE(is_semistable(c, chain2_pol()));

  auto m3 = make_m3();
  Polarization equal;
  equal.class_z = {GaussRat(Rat(1), Rat(1))};
  CHECK(is_semistable(m3, equal));
  CHECK_FALSE(is_stable(m3, equal));
}

TEST_CASE("hn filtration on the 3-chain") {
  auto c = make_chain(2);
  auto f = hn_filtration(c, chain2_pol());
  REQUIRE(f.chain.size() == 3);
  CHECK(f.chain == std::vector<Elem>{0, 1, 2});
  CHECK(f.step_z[0] == GaussRat(Rat(1), Rat(1)));
  CHECK(f.step_z[1] == GaussRat(Rat(1), Rat(-1)));
  auto ph = f.phases();
  CHECK(ph[0] == doctest::Approx(std::atan2(1, 1)));
  CHECK(ph[1] == doctest::Approx(-std::atan2(1, 1)));

  SqrtSum m = mass(c, chain2_pol());
  SqrtSum expect;
  expect.add_sqrt(Rat(8));  // 2 sqrt 2
  CHECK(m.compare(expect) == 0);

  // Semistable lattice: mass = |Z(L)|.
  Polarization real;
  real.class_z = {GaussRat(Rat(1), Rat(0)), GaussRat(Rat(1), Rat(0))};
  SqrtSum m2 = mass(c, real);
  CHECK(m2.compare(Rat(2)) == 0);
}

TEST_CASE("hn matches brute force on random polarized lattices") {
  std::mt19937_64 rng(41);
  int done = 0;
  while (done < 25) {
    FinLattice L = random_modular_lattice(rng, 10);
    if (L.size() < 2) continue;
    Polarization z = random_polarization(rng, L.num_classes());
    auto f = hn_filtration(L, z);
    auto chains = brute_force_hn_chains(L, z);
    REQUIRE(chains.size() == 1);
    CHECK(chains[0] == f.chain);
    ++done;
  }
}

TEST_CASE("mass inequalities") {
  std::mt19937_64 rng(43);
  int done = 0;
  while (done < 20) {
    FinLattice L = random_modular_lattice(rng, 10);
    if (L.size() < 3) continue;
    Polarization z = random_polarization(rng, L.num_classes());
    auto z0 = z0_values(L, z);
    SqrtSum m = mass(L, z);

    // m(L) >= |Z(L)|, equality iff semistable.
    SqrtSum zl;
    zl.add_sqrt(z0[L.top()].norm2());
    int cmp = m.compare(zl);
    CHECK(cmp >= 0);
    CHECK((cmp == 0) == is_semistable(L, z));

    // Triangle inequality at every x.
    for (Elem x = 0; x < L.size(); ++x) {
      if (x == L.bottom() || x == L.top()) continue;
      SqrtSum lo = mass_of_chain(hn_filtration_interval(L, z0, L.bottom(), x).step_z);
      SqrtSum hi = mass_of_chain(hn_filtration_interval(L, z0, x, L.top()).step_z);
      lo.add(hi);
      CHECK(m.compare(lo) <= 0);
    }

    // Any semistable-subquotient chain dominates the mass.
    for (const auto& chain : brute_force_hn_chains(L, z)) {
      std::vector<GaussRat> steps;
      for (size_t k = 1; k < chain.size(); ++k) steps.push_back(z0[chain[k]] - z0[chain[k - 1]]);
      CHECK(m.compare(mass_of_chain(steps)) <= 0);
    }
    ++done;
  }
}

TEST_CASE("hn invariant under relabeling") {
  std::mt19937_64 rng(47);
  FinLattice L = random_modular_lattice(rng, 10);
  Polarization z = random_polarization(rng, L.num_classes());
  auto f = hn_filtration(L, z);
  // Relabel by reversing insertion order of non-extremal elements.
  std::vector<int> perm(L.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::string> names(L.size());
  std::vector<std::pair<Elem, Elem>> pairs;
  for (Elem e = 0; e < L.size(); ++e) names[perm[e]] = L.name(e);
  for (Elem a = 0; a < L.size(); ++a)
    for (Elem b = 0; b < L.size(); ++b)
      if (a != b && L.leq(a, b)) pairs.push_back({perm[a], perm[b]});
  FinLattice M = FinLattice::from_leq_pairs(names, pairs);
  // Build the matching polarization by transporting class values via names.
  Polarization zm;
  zm.class_z.assign(M.num_classes(), GaussRat());
  for (const auto& cls : interval_classes(L)) {
    auto [lo, hi] = cls.representative;
    int idx = M.cover_index(M.index_of(L.name(lo)), M.index_of(L.name(hi)));
    REQUIRE(idx >= 0);
    zm.class_z[M.cover_class(idx)] = z.class_z[cls.class_id];
  }
  auto fm = hn_filtration(M, zm);
  REQUIRE(fm.chain.size() == f.chain.size());
  for (size_t k = 0; k < f.chain.size(); ++k)
    CHECK(M.name(fm.chain[k]) == L.name(f.chain[k]));
}

TEST_CASE("general half-plane via direction") {
  auto c = make_chain(1);
  Polarization z;
  z.class_z = {GaussRat(Rat(0), Rat(1))};  // purely imaginary value
  z.direction = GaussRat(Rat(0), Rat(1));  // rotate H by pi/2
  validate_polarization(c, z);
  CHECK(is_semistable(c, z));

  Polarization bad;
  bad.class_z = {GaussRat(Rat(-1), Rat(0))};
  CHECK_THROWS_AS(validate_polarization(c, bad), bad_input);
}
