#include "latflow/lattice.hpp"

#include "latflow/dag.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <numeric>

namespace latflow {

namespace {

uint64_t pair_key(Elem a, Elem b) { return (uint64_t(uint32_t(a)) << 32) | uint32_t(b); }

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

bool FinLattice::leq(Elem a, Elem b) const {
  if (backend_ == Backend::Mask) return (masks_[a] & ~masks_[b]) == 0;
  return leq_generic(a, b);
}

Elem FinLattice::index_of(const std::string& nm) const {
  for (Elem e = 0; e < n_; ++e)
    if (names_[e] == nm) return e;
  throw bad_input("unknown element '" + nm + "'");
}

Elem FinLattice::scan_meet(Elem a, Elem b) const {
  // Maximum of down(a) & down(b); by_rank_desc_ makes the first hit maximal.
  for (Elem e : by_rank_desc_)
    if (leq_generic(e, a) && leq_generic(e, b)) return e;
  throw not_a_lattice("no meet");
}

Elem FinLattice::scan_join(Elem a, Elem b) const {
  for (auto it = by_rank_desc_.rbegin(); it != by_rank_desc_.rend(); ++it)
    if (leq_generic(a, *it) && leq_generic(b, *it)) return *it;
  throw not_a_lattice("no join");
}

Elem FinLattice::meet(Elem a, Elem b) const {
  if (backend_ == Backend::Mask) {
    auto it = mask_index_.find(masks_[a] & masks_[b]);
    assert(it != mask_index_.end());
    return it->second;
  }
  if (!meet_tab_.empty()) return meet_tab_[size_t(a) * n_ + b];
  return scan_meet(a, b);
}

Elem FinLattice::join(Elem a, Elem b) const {
  if (backend_ == Backend::Mask) {
    auto it = mask_index_.find(masks_[a] | masks_[b]);
    assert(it != mask_index_.end());
    return it->second;
  }
  if (!join_tab_.empty()) return join_tab_[size_t(a) * n_ + b];
  return scan_join(a, b);
}

Elem FinLattice::join_all(const std::vector<Elem>& xs) const {
  Elem r = bottom_;
  for (Elem x : xs) r = join(r, x);
  return r;
}

Elem FinLattice::meet_all(const std::vector<Elem>& xs) const {
  Elem r = top_;
  for (Elem x : xs) r = meet(r, x);
  return r;
}

std::optional<Elem> FinLattice::find_mask(uint64_t m) const {
  auto it = mask_index_.find(m);
  if (it == mask_index_.end()) return std::nullopt;
  return it->second;
}

void FinLattice::build_rank_and_covers() const {
  if (!rank_.empty()) return;
  covers_.clear();
  cover_idx_.clear();
  if (backend_ == Backend::Mask) {
    for (Elem e = 0; e < n_; ++e) {
      uint64_t m = masks_[e];
      for (int v = 0; v < n_vertices_; ++v) {
        uint64_t bit = uint64_t(1) << v;
        if ((m & bit) || (vertex_outmask_[v] & ~m)) continue;
        auto it = mask_index_.find(m | bit);
        assert(it != mask_index_.end());
        covers_.push_back({e, it->second});
      }
    }
    rank_.resize(n_);
    int base = std::popcount(masks_[bottom_]);
    for (Elem e = 0; e < n_; ++e) rank_[e] = std::popcount(masks_[e]) - base;
  } else {
    // Longest-chain height; doubles as the scan order for table-less ops.
    rank_.assign(n_, 0);
    std::vector<Elem> order(n_);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Elem a, Elem b) {
      int ca = 0, cb = 0;
      for (Elem e = 0; e < n_; ++e) {
        ca += leq_generic(e, a);
        cb += leq_generic(e, b);
      }
      return ca < cb;
    });
    for (Elem e : order) {
      int r = 0;
      for (Elem d = 0; d < n_; ++d)
        if (d != e && leq_generic(d, e)) r = std::max(r, rank_[d] + 1);
      rank_[e] = r;
    }
    for (Elem lo = 0; lo < n_; ++lo)
      for (Elem hi = 0; hi < n_; ++hi) {
        if (lo == hi || !leq_generic(lo, hi)) continue;
        bool cover = true;
        for (Elem z = 0; z < n_ && cover; ++z)
          if (z != lo && z != hi && leq_generic(lo, z) && leq_generic(z, hi)) cover = false;
        if (cover) covers_.push_back({lo, hi});
      }
  }
  std::sort(covers_.begin(), covers_.end());
  for (int i = 0; i < int(covers_.size()); ++i)
    cover_idx_[pair_key(covers_[i].first, covers_[i].second)] = i;
}

const std::vector<std::pair<Elem, Elem>>& FinLattice::covers() const {
  build_rank_and_covers();
  return covers_;
}

int FinLattice::cover_index(Elem lo, Elem hi) const {
  build_rank_and_covers();
  auto it = cover_idx_.find(pair_key(lo, hi));
  return it == cover_idx_.end() ? -1 : it->second;
}

int FinLattice::rank(Elem e) const {
  build_rank_and_covers();
  return rank_[e];
}

void FinLattice::ensure_classes() const {
  if (num_classes_ >= 0) return;
  build_rank_and_covers();
  if (backend_ == Backend::Mask) {
    // In a lattice of closed subsets each covering interval adds exactly one
    // vertex, and perspectivity preserves it.
    cover_class_.resize(covers_.size());
    std::vector<int> vertex_class(n_vertices_, -1);
    int next = 0;
    for (size_t i = 0; i < covers_.size(); ++i) {
      int v = std::countr_zero(masks_[covers_[i].second] & ~masks_[covers_[i].first]);
      if (vertex_class[v] < 0) vertex_class[v] = next++;
      cover_class_[i] = vertex_class[v];
    }
    num_classes_ = next;
    return;
  }
  UnionFind uf(int(covers_.size()));
  for (Elem a = 0; a < n_; ++a)
    for (Elem b = 0; b < n_; ++b) {
      if (a == b) continue;
      Elem j = join(a, b), m = meet(a, b);
      if (j == a || j == b || m == a || m == b) continue;  // comparable pair
      int ca = cover_index(a, j), cb = cover_index(m, b);
      if (ca >= 0 && cb >= 0) uf.unite(ca, cb);
    }
  cover_class_.assign(covers_.size(), -1);
  int next = 0;
  for (size_t i = 0; i < covers_.size(); ++i) {
    int root = uf.find(int(i));
    if (cover_class_[root] < 0) cover_class_[root] = next++;
    cover_class_[i] = cover_class_[root];
  }
  num_classes_ = next;
}

int FinLattice::cover_class(int cover_idx) const {
  ensure_classes();
  return cover_class_[cover_idx];
}

int FinLattice::num_classes() const {
  ensure_classes();
  return num_classes_;
}

std::vector<Elem> FinLattice::interval(Elem lo, Elem hi) const {
  std::vector<Elem> out;
  for (Elem e = 0; e < n_; ++e)
    if (leq(lo, e) && leq(e, hi)) out.push_back(e);
  return out;
}

std::vector<Elem> FinLattice::atoms_in(Elem lo, Elem hi) const {
  build_rank_and_covers();
  std::vector<Elem> out;
  for (const auto& [a, b] : covers_)
    if (a == lo && leq(b, hi)) out.push_back(b);
  return out;
}

int FinLattice::jh_length(Elem lo, Elem hi) const {
  if (!leq(lo, hi)) throw not_comparable("jh_length: elements not comparable");
  int len = rank(hi) - rank(lo);
#ifndef NDEBUG
  // Self-check: two independently grown maximal chains agree.
  for (int pass = 0; pass < 2; ++pass) {
    int steps = 0;
    Elem cur = lo;
    while (cur != hi) {
      auto ats = atoms_in(cur, hi);
      assert(!ats.empty());
      cur = pass == 0 ? ats.front() : ats.back();
      ++steps;
    }
    assert(steps == len && "maximal chains of unequal length");
  }
#endif
  return len;
}

std::optional<Elem> FinLattice::complement_in(Elem x, Elem lo, Elem hi) const {
  for (Elem y = 0; y < n_; ++y) {
    if (!leq(lo, y) || !leq(y, hi)) continue;
    if (meet(x, y) == lo && join(x, y) == hi) return y;
  }
  return std::nullopt;
}

bool FinLattice::is_complemented_interval(Elem lo, Elem hi) const {
  uint64_t key = pair_key(lo, hi);
  auto it = compl_memo_.find(key);
  if (it != compl_memo_.end()) return it->second;
  bool ok = true;
  if (backend_ == Backend::Mask && !vertex_outmask_.empty()) {
    // Closed-subset interval [E,F] is boolean iff F \ E spans no DAG edge.
    uint64_t diff = masks_[hi] & ~masks_[lo];
    for (uint64_t rest = diff; rest;) {
      int v = std::countr_zero(rest);
      rest &= rest - 1;
      if (vertex_outmask_[v] & diff) {
        ok = false;
        break;
      }
    }
  } else {
    auto iv = interval(lo, hi);
    for (Elem x : iv) {
      if (!complement_in(x, lo, hi)) {
        ok = false;
        break;
      }
    }
  }
  compl_memo_[key] = ok;
  return ok;
}

std::optional<std::array<Elem, 3>> FinLattice::modularity_counterexample() const {
  for (Elem a = 0; a < n_; ++a)
    for (Elem b = 0; b < n_; ++b) {
      if (!leq(a, b)) continue;
      for (Elem x = 0; x < n_; ++x)
        if (join(meet(x, b), a) != meet(join(x, a), b)) return std::array<Elem, 3>{a, b, x};
    }
  return std::nullopt;
}

Elem FinLattice::socle_step(Elem lo, Elem hi) const {
  auto ats = atoms_in(lo, hi);
  Elem s = lo;
  for (Elem a : ats) s = join(s, a);
  return s;
}

std::vector<Rat> FinLattice::accumulate_covers(const std::vector<Rat>& per_cover) const {
  build_rank_and_covers();
  std::vector<Rat> out(n_);
  std::vector<char> done(n_, 0);
  done[bottom_] = 1;
  // Covers sorted by rank of the lower end give a valid sweep order.
  std::vector<int> order(covers_.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return rank_[covers_[i].first] < rank_[covers_[j].first]; });
  for (int i : order) {
    auto [lo, hi] = covers_[i];
    if (!done[lo]) continue;
    Rat v = out[lo] + per_cover[i];
    if (done[hi]) {
      assert(out[hi] == v && "cover accumulation inconsistent across chains");
    } else {
      out[hi] = v;
      done[hi] = 1;
    }
  }
  for (Elem e = 0; e < n_; ++e) assert(done[e] && "lattice not cover-connected");
  return out;
}

void FinLattice::verify_lattice() {
  // Bounds.
  bottom_ = top_ = -1;
  for (Elem e = 0; e < n_; ++e) {
    bool is_bot = true, is_top = true;
    for (Elem f = 0; f < n_; ++f) {
      is_bot &= leq_generic(e, f);
      is_top &= leq_generic(f, e);
    }
    if (is_bot && bottom_ < 0) bottom_ = e;
    if (is_top && top_ < 0) top_ = e;
  }
  if (bottom_ < 0 || top_ < 0) throw no_bounds("poset has no global bottom or top");

  build_rank_and_covers();

  // Every pair needs a unique meet and join; fill tables when small.
  bool tables = n_ <= kTableCap;
  if (tables) {
    meet_tab_.assign(size_t(n_) * n_, -1);
    join_tab_.assign(size_t(n_) * n_, -1);
  }
  for (Elem a = 0; a < n_; ++a)
    for (Elem b = a; b < n_; ++b) {
      Elem m = -1, j = -1;
      for (Elem e : by_rank_desc_) {
        if (m < 0 && leq_generic(e, a) && leq_generic(e, b)) {
          // Candidate maximum of the lower set; must dominate all of it.
          m = e;
          for (Elem d = 0; d < n_; ++d)
            if (leq_generic(d, a) && leq_generic(d, b) && !leq_generic(d, e)) {
              throw not_a_lattice("elements '" + names_[a] + "', '" + names_[b] +
                                  "' have no unique meet");
            }
        }
      }
      for (auto it = by_rank_desc_.rbegin(); it != by_rank_desc_.rend(); ++it) {
        Elem e = *it;
        if (j < 0 && leq_generic(a, e) && leq_generic(b, e)) {
          j = e;
          for (Elem d = 0; d < n_; ++d)
            if (leq_generic(a, d) && leq_generic(b, d) && !leq_generic(e, d)) {
              throw not_a_lattice("elements '" + names_[a] + "', '" + names_[b] +
                                  "' have no unique join");
            }
        }
      }
      if (tables) {
        meet_tab_[size_t(a) * n_ + b] = meet_tab_[size_t(b) * n_ + a] = m;
        join_tab_[size_t(a) * n_ + b] = join_tab_[size_t(b) * n_ + a] = j;
      }
    }
}

FinLattice FinLattice::from_leq_pairs(std::vector<std::string> names,
                                      const std::vector<std::pair<Elem, Elem>>& leq_pairs) {
  FinLattice L;
  L.n_ = int(names.size());
  if (L.n_ == 0) throw bad_input("empty element set");
  if (L.n_ > 4096) throw too_large("explicit posets capped at 4096 elements");
  L.names_ = std::move(names);
  L.words_ = size_t((L.n_ + 63) / 64);
  L.leq_.assign(size_t(L.n_) * L.words_, 0);
  auto set_bit = [&](Elem a, Elem b) { L.leq_[size_t(a) * L.words_ + (b >> 6)] |= uint64_t(1) << (b & 63); };
  for (Elem e = 0; e < L.n_; ++e) set_bit(e, e);
  for (auto [a, b] : leq_pairs) {
    if (a < 0 || b < 0 || a >= L.n_ || b >= L.n_) throw bad_input("leq pair out of range");
    set_bit(a, b);
  }
  // Transitive closure on bit rows.
  for (Elem k = 0; k < L.n_; ++k)
    for (Elem a = 0; a < L.n_; ++a)
      if (L.leq_generic(a, k))
        for (size_t w = 0; w < L.words_; ++w)
          L.leq_[size_t(a) * L.words_ + w] |= L.leq_[size_t(k) * L.words_ + w];
  for (Elem a = 0; a < L.n_; ++a)
    for (Elem b = a + 1; b < L.n_; ++b)
      if (L.leq_generic(a, b) && L.leq_generic(b, a))
        throw bad_input("relation is not antisymmetric: '" + L.names_[a] + "' ~ '" + L.names_[b] + "'");

  // rank/covers need by_rank_desc_ initialized after ranks exist; do a first
  // pass with plain ranks, then order.
  L.build_rank_and_covers();
  L.by_rank_desc_.resize(L.n_);
  std::iota(L.by_rank_desc_.begin(), L.by_rank_desc_.end(), 0);
  std::stable_sort(L.by_rank_desc_.begin(), L.by_rank_desc_.end(),
                   [&](Elem a, Elem b) { return L.rank_[a] > L.rank_[b]; });
  L.verify_lattice();
  return L;
}

FinLattice FinLattice::from_masks(std::vector<uint64_t> masks, int n_vertices,
                                  std::vector<uint64_t> vertex_outmask,
                                  std::vector<std::string> names) {
  FinLattice L;
  L.backend_ = Backend::Mask;
  L.n_ = int(masks.size());
  L.masks_ = std::move(masks);
  L.n_vertices_ = n_vertices;
  L.vertex_outmask_ = std::move(vertex_outmask);
  L.names_ = std::move(names);
  L.mask_index_.reserve(L.n_ * 2);
  for (Elem e = 0; e < L.n_; ++e) {
    if (!L.mask_index_.emplace(L.masks_[e], e).second) throw bad_input("duplicate subset");
  }
  uint64_t all = 0, common = ~uint64_t(0);
  for (uint64_t m : L.masks_) {
    all |= m;
    common &= m;
  }
  auto bot = L.find_mask(common), top = L.find_mask(all);
  if (!bot || !top) throw no_bounds("subset family lacks bottom or top");
  L.bottom_ = *bot;
  L.top_ = *top;
  return L;
}

FinLattice FinLattice::from_tuples(const FinLattice& base,
                                   const std::vector<std::vector<Elem>>& rows) {
  FinLattice L;
  L.n_ = int(rows.size());
  if (L.n_ == 0) throw bad_input("empty tuple family");
  if (L.n_ > 4096) throw too_large("derived lattices capped at 4096 elements");
  size_t slots = rows[0].size();
  L.names_.resize(L.n_);
  for (Elem e = 0; e < L.n_; ++e) {
    std::string nm;
    for (size_t s = 0; s < slots; ++s) nm += (s ? "|" : "") + base.name(rows[e][s]);
    L.names_[e] = nm;
  }
  L.words_ = size_t((L.n_ + 63) / 64);
  L.leq_.assign(size_t(L.n_) * L.words_, 0);
  for (Elem a = 0; a < L.n_; ++a)
    for (Elem b = 0; b < L.n_; ++b) {
      bool le = true;
      for (size_t s = 0; s < slots && le; ++s) le = base.leq(rows[a][s], rows[b][s]);
      if (le) L.leq_[size_t(a) * L.words_ + (b >> 6)] |= uint64_t(1) << (b & 63);
    }
  L.build_rank_and_covers();
  L.by_rank_desc_.resize(L.n_);
  std::iota(L.by_rank_desc_.begin(), L.by_rank_desc_.end(), 0);
  std::stable_sort(L.by_rank_desc_.begin(), L.by_rank_desc_.end(),
                   [&](Elem a, Elem b) { return L.rank_[a] > L.rank_[b]; });

  // Meet/join inherited componentwise; closure is the caller's contract.
  std::unordered_map<std::string, Elem> index;
  auto key_of = [&](const std::vector<Elem>& t) {
    std::string k;
    for (Elem e : t) k += std::to_string(e) + ",";
    return k;
  };
  for (Elem e = 0; e < L.n_; ++e) index[key_of(rows[e])] = e;
  bool tables = L.n_ <= kTableCap;
  if (tables) {
    L.meet_tab_.assign(size_t(L.n_) * L.n_, -1);
    L.join_tab_.assign(size_t(L.n_) * L.n_, -1);
    std::vector<Elem> tm(slots), tj(slots);
    for (Elem a = 0; a < L.n_; ++a)
      for (Elem b = a; b < L.n_; ++b) {
        for (size_t s = 0; s < slots; ++s) {
          tm[s] = base.meet(rows[a][s], rows[b][s]);
          tj[s] = base.join(rows[a][s], rows[b][s]);
        }
        auto im = index.find(key_of(tm)), ij = index.find(key_of(tj));
        if (im == index.end() || ij == index.end())
          throw not_a_lattice("tuple family not closed under meet/join");
        L.meet_tab_[size_t(a) * L.n_ + b] = L.meet_tab_[size_t(b) * L.n_ + a] = im->second;
        L.join_tab_[size_t(a) * L.n_ + b] = L.join_tab_[size_t(b) * L.n_ + a] = ij->second;
      }
  }
  // Bounds: componentwise extremes exist in a sublattice of a finite product.
  L.bottom_ = L.top_ = 0;
  for (Elem e = 1; e < L.n_; ++e) {
    if (L.leq(e, L.bottom_)) L.bottom_ = e;
    if (L.leq(L.top_, e)) L.top_ = e;
  }
  for (Elem e = 0; e < L.n_; ++e)
    if (!L.leq(L.bottom_, e) || !L.leq(e, L.top_)) throw no_bounds("tuple family not bounded");
  return L;
}

std::vector<Rat> x0_values(const FinLattice& L, const XFunctional& X) {
  const auto& cv = L.covers();
  std::vector<Rat> per_cover(cv.size());
  for (size_t i = 0; i < cv.size(); ++i) {
    int cls = L.cover_class(int(i));
    if (cls < 0 || cls >= int(X.class_value.size())) throw bad_input("class id out of range");
    per_cover[i] = X.class_value[cls];
  }
  return L.accumulate_covers(per_cover);
}

std::vector<IntervalClass> interval_classes(const FinLattice& L) {
  const auto& cv = L.covers();
  std::vector<IntervalClass> out(L.num_classes());
  for (int c = 0; c < L.num_classes(); ++c) out[c].class_id = c;
  for (size_t i = 0; i < cv.size(); ++i) {
    int c = L.cover_class(int(i));
    if (out[c].cover_indices.empty()) out[c].representative = cv[i];
    out[c].cover_indices.push_back(int(i));
  }
  return out;
}

SubgraphLattice subgraph_lattice(const Dag& g, size_t element_cap) {
  auto topo = g.validate_topo_order();
  int n = g.n();
  if (n > 63) throw too_large("subgraph lattices support at most 63 vertices");
  std::vector<uint64_t> outmask(n, 0);
  for (const auto& e : g.edges) outmask[e.src] |= uint64_t(1) << e.dst;

  // Closed subsets contain all out-neighbours of their members. Walk the
  // reverse topological order so each vertex's successors are decided first.
  std::vector<uint64_t> closed;
  closed.push_back(0);
  std::vector<int> rev(topo.rbegin(), topo.rend());
  std::vector<uint64_t> cur{0};
  for (int v : rev) {
    std::vector<uint64_t> next;
    next.reserve(cur.size() * 2);
    for (uint64_t m : cur) {
      next.push_back(m);
      if ((outmask[v] & ~m) == 0) next.push_back(m | (uint64_t(1) << v));
      if (next.size() > element_cap)
        throw too_large("closed-subgraph count exceeds cap " + std::to_string(element_cap));
    }
    cur = std::move(next);
  }
  std::sort(cur.begin(), cur.end(), [](uint64_t a, uint64_t b) {
    int pa = std::popcount(a), pb = std::popcount(b);
    return pa != pb ? pa < pb : a < b;
  });
  std::vector<std::string> names(cur.size());
  for (size_t i = 0; i < cur.size(); ++i) {
    std::string nm = "{";
    for (int v = 0; v < n; ++v)
      if (cur[i] >> v & 1) nm += (nm.size() > 1 ? "," : "") + g.vertices[v].id;
    names[i] = nm + "}";
  }
  SubgraphLattice out{FinLattice::from_masks(cur, n, outmask, std::move(names)), {}};
  // The cover adding vertex v belongs to one class; its weight is m_v.
  out.x.class_value.assign(out.lat.num_classes(), Rat(0));
  const auto& cvs = out.lat.covers();
  for (size_t i = 0; i < cvs.size(); ++i) {
    int v = std::countr_zero(out.lat.mask_of(cvs[i].second) & ~out.lat.mask_of(cvs[i].first));
    int cls = out.lat.cover_class(int(i));
    assert(out.x.class_value[cls] == 0 || out.x.class_value[cls] == g.vertices[v].mass);
    out.x.class_value[cls] = g.vertices[v].mass;
  }
  return out;
}

}  // namespace latflow
