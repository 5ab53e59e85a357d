#include "latflow/weight.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <random>
#include <sstream>

namespace latflow {

Elem RFiltration::a_plus(const Rat& t) const {
  int k = 0;
  while (k < jumps() && labels[k] <= t) ++k;
  return chain[k];
}

Elem RFiltration::a_minus(const Rat& t) const {
  int k = 0;
  while (k < jumps() && labels[k] < t) ++k;
  return chain[k];
}

Rat rho(const RFiltration& a) {
  if (a.labels.empty()) throw bad_input("rho needs non-empty support");
  Rat best(1);
  for (size_t i = 0; i < a.labels.size(); ++i)
    for (size_t j = i + 1; j < a.labels.size(); ++j) {
      Rat gap = a.labels[j] - a.labels[i];
      if (gap < 0) gap = -gap;
      best = std::min(best, gap);                         // rho_1 term
      if (gap > 1) best = std::min(best, Rat(gap - 1));   // rho_2 term
    }
  return best / 2;
}

bool is_paracomplemented(const FinLattice& L, const RFiltration& a) {
  for (const Rat& s : a.labels)
    for (const Rat& t : {Rat(s), Rat(s - 1)}) {
      Elem lo = a.a_plus(t), hi = a.a_plus(t + 1);
      if (!L.is_complemented_interval(lo, hi)) return false;
    }
  return true;
}

namespace {

GaussRat weighted_step(const Rat& label, const Rat& xval) {
  return GaussRat(xval, label * xval);  // (1 + label i) * xval
}

// Decomposition of the support into maximal runs of consecutive unit gaps;
// only slots at exact distance 1 are coupled by the complement condition.
std::vector<std::vector<int>> support_runs(const RFiltration& a) {
  int n = a.jumps();
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::vector<std::vector<int>> runs;
  std::vector<char> used(n, 0);
  for (int i = 0; i < n; ++i) {
    if (used[i]) continue;
    std::vector<int> run{i};
    used[i] = 1;
    for (int j = 0; j < n; ++j) {
      int last = run.back();
      for (int k = 0; k < n; ++k)
        if (!used[k] && a.labels[k] - a.labels[last] == 1) {
          run.push_back(k);
          used[k] = 1;
          break;
        }
      (void)j;
      if (run.back() == last) break;
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

}  // namespace

std::vector<LambdaFactor> lambda_factors(const FinLattice& L, const std::vector<Rat>& x0,
                                         const RFiltration& a, size_t cap) {
  std::vector<LambdaFactor> out;
  for (const auto& run : support_runs(a)) {
    LambdaFactor f;
    f.jump_idx = run;
    std::vector<std::vector<Elem>> slot_elems;
    for (int k : run) slot_elems.push_back(L.interval(a.chain[k], a.chain[k + 1]));

    std::vector<Elem> cur(run.size());
    std::function<void(size_t)> rec = [&](size_t pos) {
      if (pos == run.size()) {
        f.tuples.push_back(cur);
        if (f.tuples.size() > cap) throw too_large("lambda lattice factor exceeds cap");
        return;
      }
      for (Elem x : slot_elems[pos]) {
        if (pos > 0 && !L.is_complemented_interval(cur[pos - 1], x)) continue;
        cur[pos] = x;
        rec(pos + 1);
      }
    };
    rec(0);

    // Z([bottom, x]) accumulants and the bottom/top tuple indices.
    std::vector<Elem> bot(run.size()), top(run.size());
    for (size_t s = 0; s < run.size(); ++s) {
      bot[s] = a.chain[run[s]];
      top[s] = a.chain[run[s] + 1];
    }
    f.zb.resize(f.tuples.size());
    for (size_t t = 0; t < f.tuples.size(); ++t) {
      GaussRat z;
      for (size_t s = 0; s < run.size(); ++s)
        z += weighted_step(a.labels[run[s]], x0[f.tuples[t][s]] - x0[bot[s]]);
      f.zb[t] = z;
      if (f.tuples[t] == bot) f.bottom = int(t);
      if (f.tuples[t] == top) f.top = int(t);
    }
    assert(f.bottom >= 0 && f.top >= 0);
    out.push_back(std::move(f));
  }
  return out;
}

namespace {

bool tuple_leq(const FinLattice& L, const std::vector<Elem>& a, const std::vector<Elem>& b) {
  for (size_t s = 0; s < a.size(); ++s)
    if (!L.leq(a[s], b[s])) return false;
  return true;
}

struct FactorHN {
  std::vector<int> nodes;  // tuple indices, bottom..top
  std::vector<GaussRat> step_z;
};

FactorHN factor_hn(const FinLattice& L, const LambdaFactor& f) {
  std::map<std::vector<Elem>, int> index;
  for (size_t t = 0; t < f.tuples.size(); ++t) index[f.tuples[t]] = int(t);

  FactorHN out;
  int cur = f.bottom;
  out.nodes.push_back(cur);
  while (cur != f.top) {
    GaussRat best;
    bool have = false;
    for (size_t t = 0; t < f.tuples.size(); ++t) {
      if (int(t) == cur || !tuple_leq(L, f.tuples[cur], f.tuples[t])) continue;
      GaussRat z = f.zb[t] - f.zb[cur];
      if (!have || phase_less(best, z)) {
        best = z;
        have = true;
      }
    }
    assert(have);
    std::vector<Elem> next = f.tuples[cur];
    for (size_t t = 0; t < f.tuples.size(); ++t) {
      if (int(t) == cur || !tuple_leq(L, f.tuples[cur], f.tuples[t])) continue;
      if (phase_equal(f.zb[t] - f.zb[cur], best))
        for (size_t s = 0; s < next.size(); ++s) next[s] = L.join(next[s], f.tuples[t][s]);
    }
    auto it = index.find(next);
    assert(it != index.end() && "join of maximizers left the factor");
    out.step_z.push_back(f.zb[it->second] - f.zb[cur]);
    cur = it->second;
    out.nodes.push_back(cur);
  }
  return out;
}

struct MergedHN {
  std::vector<std::vector<int>> node_pos;  // per global node: position in each factor chain
  std::vector<GaussRat> step_z;
};

MergedHN merge_hn(const std::vector<FactorHN>& fs) {
  MergedHN out;
  std::vector<int> pos(fs.size(), 0);
  out.node_pos.push_back(pos);
  while (true) {
    GaussRat best;
    bool have = false;
    for (size_t f = 0; f < fs.size(); ++f) {
      if (pos[f] + 1 >= int(fs[f].nodes.size())) continue;
      const GaussRat& z = fs[f].step_z[pos[f]];
      if (!have || phase_less(best, z)) {
        best = z;
        have = true;
      }
    }
    if (!have) break;
    GaussRat step;
    for (size_t f = 0; f < fs.size(); ++f) {
      if (pos[f] + 1 >= int(fs[f].nodes.size())) continue;
      if (phase_equal(fs[f].step_z[pos[f]], best)) {
        step += fs[f].step_z[pos[f]];
        pos[f]++;
      }
    }
    out.step_z.push_back(step);
    out.node_pos.push_back(pos);
  }
  return out;
}

}  // namespace

SqrtSum lambda_mass(const FinLattice& L, const std::vector<Rat>& x0, const RFiltration& a) {
  auto factors = lambda_factors(L, x0, a);
  std::vector<FactorHN> fhns;
  for (const auto& f : factors) fhns.push_back(factor_hn(L, f));
  return mass_of_chain(merge_hn(fhns).step_z);
}

MaterializedLambda lambda_lattice(const FinLattice& L, const XFunctional& X,
                                  const RFiltration& a, size_t cap) {
  auto x0 = x0_values(L, X);
  auto factors = lambda_factors(L, x0, a, cap);

  // Slot order: ascending label; factors own disjoint jump sets.
  int n = a.jumps();
  std::vector<std::pair<int, int>> owner(n);  // jump -> (factor, slot)
  for (size_t f = 0; f < factors.size(); ++f)
    for (size_t s = 0; s < factors[f].jump_idx.size(); ++s)
      owner[factors[f].jump_idx[s]] = {int(f), int(s)};

  size_t total = 1;
  for (const auto& f : factors) {
    total *= f.tuples.size();
    if (total > cap) throw too_large("materialized lambda lattice exceeds cap");
  }

  MaterializedLambda out;
  out.slot_labels = a.labels;
  std::vector<size_t> idx(factors.size(), 0);
  for (size_t count = 0; count < total; ++count) {
    std::vector<Elem> row(n);
    GaussRat z;
    for (int j = 0; j < n; ++j) row[j] = factors[owner[j].first].tuples[idx[owner[j].first]][owner[j].second];
    for (size_t f = 0; f < factors.size(); ++f) z += factors[f].zb[idx[f]];
    out.tuples.push_back(std::move(row));
    out.z0.push_back(z);
    for (size_t f = 0; f < factors.size(); ++f) {
      if (++idx[f] < factors[f].tuples.size()) break;
      idx[f] = 0;
    }
  }
  // Deterministic element order: by total rank, then lexicographic tuple.
  std::vector<int> order(out.tuples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  auto rank_sum = [&](int i) {
    int r = 0;
    for (Elem e : out.tuples[i]) r += L.rank(e);
    return r;
  };
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    int ri = rank_sum(i), rj = rank_sum(j);
    return ri != rj ? ri < rj : out.tuples[i] < out.tuples[j];
  });
  std::vector<std::vector<Elem>> rows;
  std::vector<GaussRat> z0;
  for (int i : order) {
    rows.push_back(out.tuples[i]);
    z0.push_back(out.z0[i]);
  }
  out.tuples = std::move(rows);
  out.z0 = std::move(z0);
  out.lat = FinLattice::from_tuples(L, out.tuples);
  return out;
}

bool verify_weight_filtration(const FinLattice& L, const XFunctional& X, const RFiltration& a,
                              const VerifyOptions& opts, bool* sampled) {
  if (sampled) *sampled = false;
  int n = a.jumps();
  if (n == 0) return L.size() == 1;
  for (int k = 0; k + 1 < n; ++k)
    if (!(a.labels[k] < a.labels[k + 1])) return false;

  auto x0 = x0_values(L, X);

  // (1) [b_{k-1}, b_l] complemented whenever lambda_l - lambda_k < 1.
  for (int k = 1; k <= n; ++k)
    for (int l = k; l <= n; ++l)
      if (a.labels[l - 1] - a.labels[k - 1] < 1 &&
          !L.is_complemented_interval(a.chain[k - 1], a.chain[l]))
        return false;

  // (2) balancing.
  Rat bal(0);
  for (int k = 0; k < n; ++k) bal += a.labels[k] * (x0[a.chain[k + 1]] - x0[a.chain[k]]);
  if (bal != 0) return false;

  // (3) sum lambda_k X([b_{k-1}, F_k]) <= 0 over admissible tuples.
  std::vector<std::vector<Elem>> ivs(n);
  size_t total = 1;
  bool enumerate = true;
  for (int k = 0; k < n; ++k) {
    ivs[k] = L.interval(a.chain[k], a.chain[k + 1]);
    if (total > opts.tuple_cap / std::max<size_t>(1, ivs[k].size())) enumerate = false;
    total *= ivs[k].size();
  }

  auto admissible_pair = [&](int k, int l, Elem fk, Elem fl) {
    // k < l; condition applies when lambda_l - lambda_k <= 1.
    if (a.labels[l] - a.labels[k] > 1) return true;
    return L.is_complemented_interval(fk, fl);
  };
  auto tuple_value = [&](const std::vector<Elem>& F) {
    Rat s(0);
    for (int k = 0; k < n; ++k) s += a.labels[k] * (x0[F[k]] - x0[a.chain[k]]);
    return s;
  };

  if (enumerate) {
    std::vector<Elem> F(n);
    std::function<bool(int)> rec = [&](int k) -> bool {
      if (k == n) return tuple_value(F) <= 0;
      for (Elem x : ivs[k]) {
        bool ok = true;
        for (int p = 0; p < k && ok; ++p) ok = admissible_pair(p, k, F[p], x);
        if (!ok) continue;
        F[k] = x;
        if (!rec(k + 1)) return false;
      }
      return true;
    };
    if (!rec(0)) return false;
  } else {
    if (sampled) *sampled = true;
    std::mt19937_64 rng(opts.seed);
    std::vector<Elem> F(n);
    for (size_t s = 0; s < opts.samples; ++s) {
      bool ok = true;
      for (int k = 0; k < n && ok; ++k) {
        F[k] = ivs[k][rng() % ivs[k].size()];
        for (int p = 0; p < k && ok; ++p) ok = admissible_pair(p, k, F[p], F[k]);
      }
      if (ok && tuple_value(F) > 0) return false;
    }
  }
  return true;
}

namespace {

bool semistable_phase_zero(const std::vector<LambdaFactor>& factors) {
  for (const auto& f : factors) {
    if (f.zb[f.top].im != 0) return false;
    for (const auto& z : f.zb)
      if (z.im > 0) return false;
  }
  return true;
}

RFiltration initial_filtration(const FinLattice& L, const std::vector<Rat>& x0) {
  RFiltration a;
  a.chain.push_back(L.bottom());
  Elem cur = L.bottom();
  while (cur != L.top()) {
    Elem next = L.socle_step(cur, L.top());
    assert(next != cur && "socle step stalled");
    a.chain.push_back(next);
    cur = next;
  }
  int n = int(a.chain.size()) - 1;
  Rat num(0), den(0);
  for (int k = 0; k < n; ++k) {
    Rat xk = x0[a.chain[k + 1]] - x0[a.chain[k]];
    num += Rat(k) * xk;
    den += xk;
  }
  Rat shift = -num / den;
  for (int k = 0; k < n; ++k) a.labels.push_back(shift + k);
  return a;
}

bool labels_strictly_increasing(const RFiltration& a) {
  for (int k = 0; k + 1 < a.jumps(); ++k)
    if (!(a.labels[k] < a.labels[k + 1])) return false;
  return true;
}

// Stationary-label candidates for the limit of the descent. The limit ties
// some gaps at exactly 1 (and may merge colliding jumps); the iterates only
// approach those ties, so detect them within a tolerance ladder, impose
// them, and balance each resulting run. Candidates are validated exactly by
// the caller, so a wrong guess is harmless.
std::vector<RFiltration> snap_candidates(const std::vector<Rat>& x0, const RFiltration& a) {
  std::vector<RFiltration> out;
  std::vector<std::string> seen;
  for (int level = 2; level <= 32; level *= 2) {
    Rat tau(1, Int(1) << level);

    // Merge adjacent jumps whose labels nearly collide.
    RFiltration m;
    m.chain.push_back(a.chain.front());
    for (int k = 0; k < a.jumps(); ++k) {
      if (!m.labels.empty() && a.labels[k] - m.labels.back() < tau) {
        m.chain.back() = a.chain[k + 1];
        continue;
      }
      m.chain.push_back(a.chain[k + 1]);
      m.labels.push_back(a.labels[k]);
    }

    // Near-unit gaps chain jumps into runs with integer offsets.
    int n = m.jumps();
    std::vector<int> comp(n, -1), off(n, 0);
    bool consistent = true;
    for (int root = 0; root < n && consistent; ++root) {
      if (comp[root] >= 0) continue;
      comp[root] = root;
      off[root] = 0;
      std::vector<int> stack{root};
      while (!stack.empty() && consistent) {
        int i = stack.back();
        stack.pop_back();
        for (int j = 0; j < n; ++j) {
          Rat d = m.labels[j] - m.labels[i];
          int tie = 0;
          if (d > 1 - tau && d < 1 + tau) tie = 1;
          if (d < tau - 1 && d > -1 - tau) tie = -1;
          if (!tie) continue;
          if (comp[j] < 0) {
            comp[j] = comp[root];
            off[j] = off[i] + tie;
            stack.push_back(j);
          } else if (comp[j] != comp[root] || off[j] != off[i] + tie) {
            consistent = false;
          }
        }
      }
    }
    if (!consistent) continue;

    RFiltration cand = m;
    for (int root = 0; root < n; ++root) {
      Rat num(0), den(0);
      for (int j = 0; j < n; ++j) {
        if (comp[j] != root) continue;
        Rat xk = x0[m.chain[j + 1]] - x0[m.chain[j]];
        num += Rat(off[j]) * xk;
        den += xk;
      }
      if (den == 0) continue;
      Rat shift = -num / den;
      for (int j = 0; j < n; ++j)
        if (comp[j] == root) cand.labels[j] = shift + off[j];
    }
    if (!labels_strictly_increasing(cand)) continue;
    std::ostringstream key;
    for (Elem e : cand.chain) key << e << ",";
    for (const Rat& l : cand.labels) key << l << ";";
    if (std::find(seen.begin(), seen.end(), key.str()) != seen.end()) continue;
    seen.push_back(key.str());
    out.push_back(std::move(cand));
  }
  return out;
}

// Keep event times at bounded denominators; undershooting an event is safe
// (the snap detects the limit ties) and stops coefficient blow-up.
Rat truncate_denominator(const Rat& t) {
  Int den = denominator(t);
  if (den <= (Int(1) << 64)) return t;
  Int scaled = (numerator(t) << 64) / den;
  if (scaled == 0) return t;
  return Rat(scaled, Int(1) << 64);
}

}  // namespace

RFiltration weight_filtration_x0(const FinLattice& L, const std::vector<Rat>& x0,
                                 size_t iteration_cap) {
  if (L.size() == 1) return RFiltration{{L.bottom()}, {}};

  Rat x_min, x_total = x0[L.top()];
  {
    const auto& cv = L.covers();
    for (size_t i = 0; i < cv.size(); ++i) {
      Rat v = x0[cv[i].second] - x0[cv[i].first];
      if (v <= 0) throw bad_input("X functional must be positive on covers");
      if (i == 0 || v < x_min) x_min = v;
    }
  }

  RFiltration a = initial_filtration(L, x0);
  assert(is_paracomplemented(L, a));

  SqrtSum prev_mass;
  bool have_prev = false;

  for (size_t iter = 0; iter < iteration_cap; ++iter) {
    auto factors = lambda_factors(L, x0, a);
    std::vector<FactorHN> fhns;
    for (const auto& f : factors) fhns.push_back(factor_hn(L, f));
    auto merged = merge_hn(fhns);

    if (merged.step_z.size() == 1 && merged.step_z[0].im == 0) return a;

    if (std::getenv("LATFLOW_DEBUG_DESCENT")) {
      fprintf(stderr, "iter %zu: jumps=%d steps=%zu labels:", iter, a.jumps(),
              merged.step_z.size());
      for (const Rat& l : a.labels) fprintf(stderr, " %.9f", to_double(l));
      fprintf(stderr, "\n");
    }

    SqrtSum m = mass_of_chain(merged.step_z);
    if (have_prev) assert(m.compare(prev_mass) < 0 && "descent mass must strictly decrease");
    prev_mass = m;
    have_prev = true;
    {
      // A-priori support bound: max |label| <= m / X_min + (length - 1).
      Rat maxl(0);
      for (const Rat& l : a.labels) maxl = std::max(maxl, l < 0 ? Rat(-l) : l);
      SqrtSum bound = m;
      bound.scale(Rat(1) / x_min);
      assert(bound.compare(maxl - (L.length() - 1)) >= 0 && "support bound violated");
    }

    for (const RFiltration& cand : snap_candidates(x0, a)) {
      if (!is_paracomplemented(L, cand)) continue;
      auto cf = lambda_factors(L, x0, cand);
      if (semistable_phase_zero(cf)) return cand;
    }

    // The rho-capped step length shrinks with the smallest structural gap,
    // so a trajectory heading into a collision or a unit tie approaches it
    // geometrically without reaching it. Hop onto the boundary once it is
    // nearly attained; the continued descent from there stays exact.
    {
      Rat tau(1, Int(1) << 16);
      RFiltration forced;
      forced.chain.push_back(a.chain.front());
      for (int k = 0; k < a.jumps(); ++k) {
        if (!forced.labels.empty() && a.labels[k] - forced.labels.back() < tau) {
          forced.chain.back() = a.chain[k + 1];
          continue;
        }
        forced.chain.push_back(a.chain[k + 1]);
        forced.labels.push_back(a.labels[k]);
      }
      for (int j = 0; j < forced.jumps(); ++j)
        for (int i = 0; i < j; ++i) {
          Rat d = forced.labels[j] - forced.labels[i];
          if (d != 1 && d > 1 - tau && d < 1 + tau) {
            forced.labels[j] = forced.labels[i] + 1;
            break;
          }
        }
      bool changed = forced.chain != a.chain || forced.labels != a.labels;
      if (changed && labels_strictly_increasing(forced) && is_paracomplemented(L, forced)) {
        a = std::move(forced);
        have_prev = false;  // the hop is not a smooth mass-descent step
        continue;
      }
    }

    // Deformation: each HN step k moves its support pieces with slope
    // s_k = Im z_k / Re z_k, advanced to the first structural event.
    int steps = int(merged.step_z.size());
    std::vector<Rat> slope(steps);
    for (int k = 0; k < steps; ++k) slope[k] = merged.step_z[k].im / merged.step_z[k].re;

    std::vector<std::pair<int, int>> owner(a.jumps());  // jump -> (factor, slot)
    for (size_t f = 0; f < factors.size(); ++f)
      for (size_t s = 0; s < factors[f].jump_idx.size(); ++s)
        owner[factors[f].jump_idx[s]] = {int(f), int(s)};
    auto slot_value = [&](int node, int jump) {
      auto [f, s] = owner[jump];
      return factors[f].tuples[fhns[f].nodes[merged.node_pos[node][f]]][s];
    };

    struct Piece {
      int step, jump;
      Rat label() const { return lbl; }
      Rat lbl, slp;
    };
    std::vector<Piece> pieces;
    for (int k = 1; k <= steps; ++k)
      for (int j = 0; j < a.jumps(); ++j)
        if (slot_value(k - 1, j) != slot_value(k, j))
          pieces.push_back({k, j, a.labels[j], slope[k - 1]});

    Rat max_slope(1);
    for (const auto& p : pieces) max_slope = std::max(max_slope, p.slp < 0 ? Rat(-p.slp) : p.slp);
    Rat t_star = rho(a) / max_slope;
    for (size_t i = 0; i < pieces.size(); ++i)
      for (size_t j = i + 1; j < pieces.size(); ++j) {
        Rat dl = pieces[i].lbl - pieces[j].lbl, ds = pieces[i].slp - pieces[j].slp;
        if (ds == 0) continue;
        for (int c : {-1, 0, 1}) {
          Rat t = (dl - c) / ds;
          if (t > 0 && t < t_star) t_star = t;
        }
      }
    t_star = truncate_denominator(t_star);

    // Reconstitute the filtration at t_star: walk pieces in chain order,
    // coalescing jumps whose deformed labels collide.
    RFiltration next;
    next.chain.push_back(L.bottom());
    std::sort(pieces.begin(), pieces.end(), [](const Piece& p, const Piece& q) {
      return p.jump != q.jump ? p.jump < q.jump : p.step < q.step;
    });
    for (size_t i = 0; i < pieces.size(); ++i) {
      Rat lbl = pieces[i].lbl - pieces[i].slp * t_star;
      Elem e = slot_value(pieces[i].step, pieces[i].jump);
      if (!next.labels.empty()) {
        assert(next.labels.back() <= lbl && "deformed labels out of order");
        if (next.labels.back() == lbl) {
          next.chain.back() = e;
          continue;
        }
      }
      next.chain.push_back(e);
      next.labels.push_back(lbl);
    }
    assert(next.chain.back() == L.top());
    assert(labels_strictly_increasing(next));
    assert(is_paracomplemented(L, next));
    a = std::move(next);
  }
  throw non_convergence("weight filtration descent exceeded iteration cap");
}

RFiltration weight_filtration(const FinLattice& L, const XFunctional& X, size_t iteration_cap) {
  for (const Rat& v : X.class_value)
    if (v <= 0) throw bad_input("X functional values must be positive");
  return weight_filtration_x0(L, x0_values(L, X), iteration_cap);
}

DerivedLattice phase_zero_sublattice(const FinLattice& L, const std::vector<Rat>& x0,
                                     const RFiltration& a, size_t cap) {
  auto factors = lambda_factors(L, x0, a);
  if (!semistable_phase_zero(factors)) throw not_semistable("lambda lattice not semistable of phase 0");

  int n = a.jumps();
  std::vector<std::pair<int, int>> owner(n);
  for (size_t f = 0; f < factors.size(); ++f)
    for (size_t s = 0; s < factors[f].jump_idx.size(); ++s)
      owner[factors[f].jump_idx[s]] = {int(f), int(s)};

  std::vector<std::vector<int>> keep(factors.size());
  size_t total = 1;
  for (size_t f = 0; f < factors.size(); ++f) {
    for (size_t t = 0; t < factors[f].tuples.size(); ++t)
      if (factors[f].zb[t].im == 0) keep[f].push_back(int(t));
    total *= keep[f].size();
    if (total > cap) throw too_large("phase-zero sublattice exceeds cap");
  }

  DerivedLattice out;
  out.slot_labels = a.labels;
  std::vector<size_t> idx(factors.size(), 0);
  for (size_t count = 0; count < total; ++count) {
    std::vector<Elem> row(n);
    Rat x(0);
    for (int j = 0; j < n; ++j)
      row[j] = factors[owner[j].first].tuples[keep[owner[j].first][idx[owner[j].first]]][owner[j].second];
    for (size_t f = 0; f < factors.size(); ++f) x += factors[f].zb[keep[f][idx[f]]].re;
    out.tuples.push_back(std::move(row));
    out.x0.push_back(x);
    for (size_t f = 0; f < factors.size(); ++f) {
      if (++idx[f] < keep[f].size()) break;
      idx[f] = 0;
    }
  }
  std::vector<int> order(out.tuples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  auto rank_sum = [&](int i) {
    int r = 0;
    for (Elem e : out.tuples[i]) r += L.rank(e);
    return r;
  };
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    int ri = rank_sum(i), rj = rank_sum(j);
    return ri != rj ? ri < rj : out.tuples[i] < out.tuples[j];
  });
  std::vector<std::vector<Elem>> rows;
  std::vector<Rat> x0p;
  for (int i : order) {
    rows.push_back(out.tuples[i]);
    x0p.push_back(out.x0[i]);
  }
  out.tuples = std::move(rows);
  out.x0 = std::move(x0p);
  // Normalize accumulants to start at the sublattice bottom.
  Rat base = out.x0.front();
  for (auto& v : out.x0) v -= base;
  out.lat = FinLattice::from_tuples(L, out.tuples);
  assert(out.lat.bottom() == 0);
  return out;
}

namespace {

IteratedFiltration iterate_x0(const FinLattice& L, const std::vector<Rat>& x0, int depth_cap) {
  IteratedFiltration out;
  if (L.size() == 1) {
    out.chain = {L.bottom()};
    return out;
  }
  if (depth_cap <= 0) throw non_convergence("iterated filtration exceeded depth cap");

  RFiltration wf = weight_filtration_x0(L, x0);
  out.levels.push_back({wf, L.size()});
  if (wf.trivial()) {
    assert(wf.labels[0] == 0);
    out.depth = 0;
    out.chain = {L.bottom(), L.top()};
    out.labels = {{Rat(0)}};
    return out;
  }

  DerivedLattice D = phase_zero_sublattice(L, x0, wf);
  IteratedFiltration sub = iterate_x0(D.lat, D.x0, depth_cap - 1);
  out.depth = 1 + sub.depth;
  for (const auto& lv : sub.levels) out.levels.push_back(lv);

  out.chain.push_back(L.bottom());
  for (int s = 0; s < wf.jumps(); ++s) {
    const std::vector<Elem>* prev = &D.tuples[sub.chain[0]];
    for (size_t j = 1; j < sub.chain.size(); ++j) {
      const std::vector<Elem>& cur = D.tuples[sub.chain[j]];
      if (cur[s] != (*prev)[s]) {
        out.chain.push_back(cur[s]);
        std::vector<Rat> lbl{wf.labels[s]};
        for (const Rat& v : sub.labels[j - 1]) lbl.push_back(v);
        out.labels.push_back(std::move(lbl));
      }
      prev = &cur;
    }
  }
  // Normalize label vectors to length max(depth, 1), trimming zero tails.
  size_t want = size_t(std::max(out.depth, 1));
  for (auto& lbl : out.labels) {
    while (lbl.size() > want) {
      assert(lbl.back() == 0);
      lbl.pop_back();
    }
    while (lbl.size() < want) lbl.push_back(Rat(0));
  }
  assert(out.chain.back() == L.top());
  return out;
}

}  // namespace

IteratedFiltration iterated_weight_filtration(const FinLattice& L, const XFunctional& X,
                                              int depth_cap) {
  for (const Rat& v : X.class_value)
    if (v <= 0) throw bad_input("X functional values must be positive");
  return iterate_x0(L, x0_values(L, X), depth_cap);
}

}  // namespace latflow
