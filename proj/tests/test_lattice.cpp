#include "latflow/lattice.hpp"

#include "latflow/dag.hpp"
#include "support.hpp"

#include <doctest.h>

#include <numeric>
#include <random>
#include <set>

using namespace latflow;
using namespace latflow::testsupport;

TEST_CASE("degenerate and chain lattices build") {
  auto one = FinLattice::from_leq_pairs({"only"}, {});
  CHECK(one.bottom() == one.top());
  CHECK(one.size() == 1);

  auto c = make_chain(2);
  CHECK(c.size() == 3);
  CHECK(c.meet(0, 2) == 0);
  CHECK(c.join(1, 2) == 2);
  CHECK(c.rank(2) == 2);
}

TEST_CASE("build failures") {
  // a and b have two minimal upper bounds x, y: no unique join.
  CHECK_THROWS_AS(
      FinLattice::from_leq_pairs(
          {"0", "a", "b", "x", "y", "1"},
          {{0, 1}, {0, 2}, {1, 3}, {2, 3}, {1, 4}, {2, 4}, {3, 5}, {4, 5}}),
      not_a_lattice);
  // Two maximal elements: no top.
  CHECK_THROWS_AS(FinLattice::from_leq_pairs({"a", "b"}, {}), no_bounds);
  // Not antisymmetric.
  CHECK_THROWS_AS(FinLattice::from_leq_pairs({"a", "b"}, {{0, 1}, {1, 0}}), bad_input);
}

TEST_CASE("modular law check") {
  CHECK_FALSE(make_boolean(2).modularity_counterexample());
  CHECK_FALSE(make_m3().modularity_counterexample());
  auto n5 = make_n5();
  auto cx = n5.modularity_counterexample();
  REQUIRE(cx.has_value());
  auto [a, b, x] = *cx;
  CHECK(n5.leq(a, b));
  CHECK(n5.join(n5.meet(x, b), a) != n5.meet(n5.join(x, a), b));
}

TEST_CASE("jh lengths") {
  auto c = make_chain(2);
  CHECK(c.jh_length(1, 1) == 0);
  CHECK(c.jh_length(0, 2) == 2);
  for (int k = 1; k <= 4; ++k) {
    auto b = make_boolean(k);
    CHECK(b.jh_length(b.bottom(), b.top()) == k);
    // Oracle: exhaustive maximal-chain search.
    int longest = 0;
    std::function<void(Elem, int)> rec = [&](Elem cur, int len) {
      if (cur == b.top()) {
        longest = std::max(longest, len);
        return;
      }
      for (Elem nxt : b.atoms_in(cur, b.top())) rec(nxt, len + 1);
    };
    rec(b.bottom(), 0);
    CHECK(longest == k);
  }
  CHECK_THROWS_AS(make_boolean(2).jh_length(1, 2), not_comparable);
}

TEST_CASE("interval classes") {
  auto c = make_chain(4);
  CHECK(c.num_classes() == 4);  // chains identify nothing

  auto b = make_boolean(2);
  CHECK(b.num_classes() == 2);
  // {[0,a],[b,1]} and {[0,b],[a,1]} pair up.
  CHECK(b.cover_class(b.cover_index(0, 1)) == b.cover_class(b.cover_index(2, 3)));
  CHECK(b.cover_class(b.cover_index(0, 2)) == b.cover_class(b.cover_index(1, 3)));
  CHECK(b.cover_class(b.cover_index(0, 1)) != b.cover_class(b.cover_index(0, 2)));

  CHECK(make_m3().num_classes() == 1);

  auto classes = interval_classes(make_m3());
  CHECK(classes.size() == 1);
  CHECK(classes[0].cover_indices.size() == 6);
}

TEST_CASE("interval classes are isomorphism invariants") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    Dag g = random_dag(rng, 5);
    auto sub = subgraph_lattice(g);
    // Shuffle element labels and rebuild generically.
    std::vector<int> perm(sub.lat.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::string> names(sub.lat.size());
    std::vector<std::pair<Elem, Elem>> pairs;
    for (Elem e = 0; e < sub.lat.size(); ++e) names[perm[e]] = "p" + std::to_string(perm[e]);
    for (Elem a = 0; a < sub.lat.size(); ++a)
      for (Elem b = 0; b < sub.lat.size(); ++b)
        if (a != b && sub.lat.leq(a, b)) pairs.push_back({perm[a], perm[b]});
    auto shuffled = FinLattice::from_leq_pairs(names, pairs);
    CHECK(shuffled.num_classes() == sub.lat.num_classes());
    CHECK(shuffled.covers().size() == sub.lat.covers().size());
  }
}

TEST_CASE("complements") {
  auto c = make_chain(2);
  CHECK(c.complement_in(0, 0, 2) == 2);
  CHECK(c.complement_in(2, 0, 2) == 0);
  CHECK_FALSE(c.complement_in(1, 0, 2).has_value());

  auto m3 = make_m3();
  auto comp = m3.complement_in(1, 0, 4);
  REQUIRE(comp.has_value());
  CHECK(*comp != 1);
  // Symmetry: a complement's complement exists.
  CHECK(m3.complement_in(*comp, 0, 4).has_value());

  CHECK(make_chain(1).is_complemented_interval(0, 1));
  CHECK_FALSE(make_chain(2).is_complemented_interval(0, 2));
  auto b3 = make_boolean(3);
  CHECK(b3.is_complemented_interval(b3.bottom(), b3.top()));
}

TEST_CASE("subgraph lattices") {
  Dag point;
  point.vertices.push_back({"v", Rat(1)});
  auto sub = subgraph_lattice(point);
  CHECK(sub.lat.size() == 2);

  Dag a2;
  a2.vertices = {{"s", Rat(2)}, {"t", Rat(3)}};
  a2.edges = {{0, 1, Rat(1)}};
  auto l2 = subgraph_lattice(a2);
  CHECK(l2.lat.size() == 3);  // {}, {t}, {s,t}
  CHECK(l2.lat.length() == 2);
  CHECK(l2.x.class_value.size() == 2);

  // A path with and without its composite arrow: same closed-subgraph lattice.
  Dag path3, path3c;
  for (auto* g : {&path3, &path3c})
    g->vertices = {{"a", Rat(1)}, {"b", Rat(1)}, {"c", Rat(1)}};
  path3.edges = {{0, 1, Rat(1)}, {1, 2, Rat(1)}};
  path3c.edges = {{0, 1, Rat(1)}, {1, 2, Rat(1)}, {0, 2, Rat(1)}};
  auto s1 = subgraph_lattice(path3), s2 = subgraph_lattice(path3c);
  CHECK(s1.lat.size() == s2.lat.size());
  std::set<uint64_t> m1, m2;
  for (Elem e = 0; e < s1.lat.size(); ++e) m1.insert(s1.lat.mask_of(e));
  for (Elem e = 0; e < s2.lat.size(); ++e) m2.insert(s2.lat.mask_of(e));
  CHECK(m1 == m2);

  // Distributive, hence modular.
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    Dag g = random_dag(rng, 4);
    auto s = subgraph_lattice(g);
    std::vector<std::string> names;
    std::vector<std::pair<Elem, Elem>> pairs;
    for (Elem e = 0; e < s.lat.size(); ++e) names.push_back(s.lat.name(e));
    for (Elem a = 0; a < s.lat.size(); ++a)
      for (Elem b = 0; b < s.lat.size(); ++b)
        if (a != b && s.lat.leq(a, b)) pairs.push_back({a, b});
    CHECK_FALSE(FinLattice::from_leq_pairs(names, pairs).modularity_counterexample());
  }

  Dag big = iterated_example_graph(4);
  CHECK_THROWS_AS(subgraph_lattice(big, 100), too_large);
}

TEST_CASE("mask and generic backends agree") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 8; ++trial) {
    Dag g = random_dag(rng, 5);
    auto sub = subgraph_lattice(g);
    std::vector<std::string> names;
    std::vector<std::pair<Elem, Elem>> pairs;
    for (Elem e = 0; e < sub.lat.size(); ++e) names.push_back(sub.lat.name(e));
    for (Elem a = 0; a < sub.lat.size(); ++a)
      for (Elem b = 0; b < sub.lat.size(); ++b)
        if (a != b && sub.lat.leq(a, b)) pairs.push_back({a, b});
    auto gen = FinLattice::from_leq_pairs(names, pairs);
    REQUIRE(gen.size() == sub.lat.size());
    for (Elem a = 0; a < gen.size(); ++a)
      for (Elem b = 0; b < gen.size(); ++b) {
        CHECK(gen.meet(a, b) == sub.lat.meet(a, b));
        CHECK(gen.join(a, b) == sub.lat.join(a, b));
      }
    for (Elem a = 0; a < gen.size(); ++a)
      for (Elem b = 0; b < gen.size(); ++b) {
        if (!gen.leq(a, b)) continue;
        CHECK(gen.is_complemented_interval(a, b) == sub.lat.is_complemented_interval(a, b));
      }
    CHECK(gen.num_classes() == sub.lat.num_classes());
  }
}

TEST_CASE("random greedy chains have equal length (JHD)") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    FinLattice L = random_modular_lattice(rng);
    for (Elem lo = 0; lo < L.size(); ++lo)
      for (Elem hi = 0; hi < L.size(); ++hi) {
        if (!L.leq(lo, hi)) continue;
        int want = L.jh_length(lo, hi);
        for (int rep = 0; rep < 3; ++rep) {
          int steps = 0;
          Elem cur = lo;
          while (cur != hi) {
            auto ats = L.atoms_in(cur, hi);
            cur = ats[rng() % ats.size()];
            ++steps;
          }
          CHECK(steps == want);
        }
      }
  }
}

TEST_CASE("x functional accumulants") {
  auto m3 = make_m3();
  XFunctional x;
  x.class_value = {Rat(3, 2)};
  auto x0 = x0_values(m3, x);
  CHECK(x0[m3.bottom()] == 0);
  CHECK(x0[m3.top()] == 3);
  CHECK(x0[1] == Rat(3, 2));
}
