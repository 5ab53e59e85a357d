#include "latflow/dag.hpp"

#include "latflow/simplex.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <deque>
#include <functional>
#include <set>

namespace latflow {

std::vector<int> Dag::validate_topo_order() const {
  std::set<std::pair<int, int>> seen;
  for (const auto& v : vertices)
    if (v.mass <= 0) throw bad_input("vertex mass must be positive");
  for (const auto& e : edges) {
    if (e.src < 0 || e.dst < 0 || e.src >= n() || e.dst >= n() || e.src == e.dst)
      throw bad_input("edge endpoints out of range");
    if (e.c <= 0) throw bad_input("edge constant must be positive");
    if (!seen.insert({e.src, e.dst}).second) throw bad_input("multiple edge");
  }
  std::vector<int> indeg(n(), 0), order;
  for (const auto& e : edges) indeg[e.dst]++;
  std::deque<int> q;
  for (int i = 0; i < n(); ++i)
    if (indeg[i] == 0) q.push_back(i);
  while (!q.empty()) {
    int i = q.front();
    q.pop_front();
    order.push_back(i);
    for (const auto& e : edges)
      if (e.src == i && --indeg[e.dst] == 0) q.push_back(e.dst);
  }
  if (int(order.size()) != n()) throw has_cycle("graph has a directed cycle");
  return order;
}

int Dag::vertex_index(const std::string& id) const {
  for (int i = 0; i < n(); ++i)
    if (vertices[i].id == id) return i;
  throw bad_input("unknown vertex '" + id + "'");
}

namespace {

// Offsets and per-component optimal shift for the equality-constrained
// problem: minimize sum m_i v_i^2 with v_i - v_j = 1 on the working set.
std::vector<Rat> eqp_solve(const Dag& g, const std::vector<char>& working) {
  int n = g.n();
  std::vector<std::vector<std::pair<int, int>>> adj(n);  // (other, +1 if edge leaves here)
  for (int e = 0; e < g.m(); ++e)
    if (working[e]) {
      adj[g.edges[e].src].push_back({g.edges[e].dst, +1});
      adj[g.edges[e].dst].push_back({g.edges[e].src, -1});
    }
  std::vector<Rat> v(n);
  std::vector<int> comp(n, -1), offset(n, 0);
  for (int root = 0; root < n; ++root) {
    if (comp[root] >= 0) continue;
    std::vector<int> members;
    std::deque<int> q{root};
    comp[root] = root;
    offset[root] = 0;
    while (!q.empty()) {
      int i = q.front();
      q.pop_front();
      members.push_back(i);
      for (auto [j, dir] : adj[i]) {
        int oj = offset[i] - dir;  // edge i->j (dir=+1) forces v_i = v_j + 1
        if (comp[j] < 0) {
          comp[j] = root;
          offset[j] = oj;
          q.push_back(j);
        } else {
          assert(offset[j] == oj && "working set not a consistent forest");
        }
      }
    }
    Rat num(0), den(0);
    for (int i : members) {
      num += g.vertices[i].mass * offset[i];
      den += g.vertices[i].mass;
    }
    Rat shift = -num / den;
    for (int i : members) v[i] = shift + offset[i];
  }
  return v;
}

// Unique multipliers on a forest working set, by leaf stripping.
// Returns per-edge values (0 off the working set).
std::vector<Rat> forest_multipliers(const Dag& g, const std::vector<char>& working,
                                    const std::vector<Rat>& v) {
  int n = g.n();
  std::vector<Rat> u(g.m(), Rat(0));
  std::vector<std::vector<int>> incident(n);
  std::vector<int> deg(n, 0);
  for (int e = 0; e < g.m(); ++e)
    if (working[e]) {
      incident[g.edges[e].src].push_back(e);
      incident[g.edges[e].dst].push_back(e);
      deg[g.edges[e].src]++;
      deg[g.edges[e].dst]++;
    }
  std::vector<char> resolved(g.m(), 0);
  std::deque<int> leaves;
  for (int i = 0; i < n; ++i)
    if (deg[i] == 1) leaves.push_back(i);
  while (!leaves.empty()) {
    int i = leaves.front();
    leaves.pop_front();
    if (deg[i] != 1) continue;
    int pending = -1;
    Rat acc = g.vertices[i].mass * v[i];  // must equal out-flow minus in-flow at i
    for (int e : incident[i]) {
      if (!resolved[e]) {
        pending = e;
        continue;
      }
      acc -= (g.edges[e].src == i) ? u[e] : -u[e];
    }
    assert(pending >= 0);
    u[pending] = (g.edges[pending].src == i) ? acc : -acc;
    resolved[pending] = 1;
    deg[i] = 0;
    int other = g.edges[pending].src == i ? g.edges[pending].dst : g.edges[pending].src;
    if (--deg[other] == 1) leaves.push_back(other);
  }
#ifndef NDEBUG
  for (int e = 0; e < g.m(); ++e) assert(!working[e] || resolved[e]);
  for (int i = 0; i < n; ++i) {
    Rat bal(0);
    for (int e = 0; e < g.m(); ++e) {
      if (!working[e]) continue;
      if (g.edges[e].src == i) bal += u[e];
      if (g.edges[e].dst == i) bal -= u[e];
    }
    assert(deg[i] != 0 || incident[i].empty() || bal == g.vertices[i].mass * v[i]);
  }
#endif
  return u;
}

std::vector<char> tight_edges(const Dag& g, const std::vector<Rat>& v) {
  std::vector<char> tight(g.m(), 0);
  for (int e = 0; e < g.m(); ++e)
    tight[e] = (v[g.edges[e].src] - v[g.edges[e].dst] == 1);
  return tight;
}

// Lexicographically-least feasible multiplier vector on the tight edges.
Certificate lexmin_certificate(const Dag& g, const std::vector<Rat>& v) {
  auto tight = tight_edges(g, v);
  std::vector<int> vars;
  for (int e = 0; e < g.m(); ++e)
    if (tight[e]) vars.push_back(e);
  Certificate cert;
  cert.u.assign(g.m(), Rat(0));
  if (vars.empty()) return cert;

  int n = g.n(), k = int(vars.size());
  std::vector<std::vector<Rat>> A(n, std::vector<Rat>(k, Rat(0)));
  std::vector<Rat> b(n);
  for (int i = 0; i < n; ++i) b[i] = g.vertices[i].mass * v[i];
  for (int j = 0; j < k; ++j) {
    A[g.edges[vars[j]].src][j] += 1;
    A[g.edges[vars[j]].dst][j] -= 1;
  }
  std::vector<Rat> fixed(k);
  for (int lex = 0; lex < k; ++lex) {
    auto A2 = A;
    auto b2 = b;
    for (int p = 0; p < lex; ++p) {
      std::vector<Rat> row(k, Rat(0));
      row[p] = 1;
      A2.push_back(row);
      b2.push_back(fixed[p]);
    }
    std::vector<Rat> c(k, Rat(0));
    c[lex] = -1;  // minimize u_lex
    auto res = solve_lp(A2, b2, c);
    if (res.status != LpResult::Status::Optimal)
      throw std::runtime_error("certificate LP infeasible");
    fixed[lex] = res.x[lex];
  }
  for (int j = 0; j < k; ++j) cert.u[vars[j]] = fixed[j];
  return cert;
}

}  // namespace

std::pair<Grading, Certificate> weight_grading(const Dag& g) {
  g.validate_topo_order();
  int n = g.n(), m = g.m();

  // Feasible start: longest-path heights.
  std::vector<Rat> x(n, Rat(0));
  {
    std::vector<int> h(n, 0);
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& e : g.edges)
        if (h[e.src] < h[e.dst] + 1) {
          h[e.src] = h[e.dst] + 1;
          changed = true;
        }
    }
    for (int i = 0; i < n; ++i) x[i] = h[i];
  }

  std::vector<char> working(m, 0);
  int guard = 200 * (n + m + 2) * (n + m + 2);
  while (guard-- > 0) {
    auto target = eqp_solve(g, working);
    // Longest feasible step toward the equality-constrained minimizer.
    Rat t(1);
    int blocking = -1;
    for (int e = 0; e < m; ++e) {
      if (working[e]) continue;
      Rat gx = x[g.edges[e].src] - x[g.edges[e].dst];
      Rat gt = target[g.edges[e].src] - target[g.edges[e].dst];
      Rat dp = gt - gx;
      if (dp >= 0) continue;
      Rat te = (Rat(1) - gx) / dp;  // gx + t*dp = 1
      if (te < t) {
        t = te;
        blocking = e;
      }
    }
    for (int i = 0; i < n; ++i) x[i] += t * (target[i] - x[i]);
    if (blocking >= 0) {
      working[blocking] = 1;
      continue;
    }
    auto u = forest_multipliers(g, working, x);
    int drop = -1;
    for (int e = 0; e < m && drop < 0; ++e)
      if (working[e] && u[e] < 0) drop = e;
    if (drop < 0) {
      Grading v{x};
      return {v, lexmin_certificate(g, x)};
    }
    working[drop] = 0;
  }
  throw std::runtime_error("active-set iteration guard exceeded");
}

namespace {

// DFS over vertex subsets closed under the out-adjacency `succ`, visiting
// each exactly once. Vertices are consumed in reverse topological order so a
// vertex's successors are always decided first. Stops early when the visitor
// returns false or more than `cap` subsets are seen (sets *hit_cap).
bool foreach_closed_subset(const std::vector<int>& rev_topo,
                           const std::vector<std::vector<int>>& succ, size_t cap,
                           const std::function<bool(const std::vector<char>&)>& visit,
                           bool* hit_cap) {
  std::vector<char> in(succ.size(), 0);
  size_t count = 0;
  std::function<bool(size_t)> rec = [&](size_t pos) -> bool {
    if (pos == rev_topo.size()) {
      if (++count > cap) {
        if (hit_cap) *hit_cap = true;
        return false;
      }
      return visit(in);
    }
    int v = rev_topo[pos];
    if (!rec(pos + 1)) return false;  // exclude v
    bool can = true;
    for (int w : succ[v]) can &= bool(in[w]);
    if (can) {
      in[v] = 1;
      bool r = rec(pos + 1);
      in[v] = 0;
      if (!r) return false;
    }
    return true;
  };
  return rec(0);
}

}  // namespace

bool verify_grading(const Dag& g, const Grading& v) {
  for (const auto& e : g.edges)
    if (v.v[e.src] - v.v[e.dst] < 1) return false;
  Rat bal(0);
  for (int i = 0; i < g.n(); ++i) bal += g.vertices[i].mass * v.v[i];
  if (bal != 0) return false;

  auto topo = g.validate_topo_order();
  if (g.n() > 20) return verify_grading_flow(g, v);
  std::vector<std::vector<int>> succ(g.n());
  for (int e = 0; e < g.m(); ++e)
    if (v.v[g.edges[e].src] - v.v[g.edges[e].dst] == 1)
      succ[g.edges[e].src].push_back(g.edges[e].dst);

  std::vector<int> rev(topo.rbegin(), topo.rend());
  bool ok = true, hit_cap = false;
  foreach_closed_subset(rev, succ, size_t(1) << 20,
                        [&](const std::vector<char>& in) {
                          Rat s(0);
                          for (int i = 0; i < g.n(); ++i)
                            if (in[i]) s += g.vertices[i].mass * v.v[i];
                          if (s > 0) {
                            ok = false;
                            return false;
                          }
                          return true;
                        },
                        &hit_cap);
  if (hit_cap) return verify_grading_flow(g, v);
  return ok;
}

bool verify_grading_flow(const Dag& g, const Grading& v) {
  for (const auto& e : g.edges)
    if (v.v[e.src] - v.v[e.dst] < 1) return false;
  Rat bal(0);
  for (int i = 0; i < g.n(); ++i) bal += g.vertices[i].mass * v.v[i];
  if (bal != 0) return false;

  // Max-weight closed subset via min cut (project selection).
  int n = g.n(), S = n, T = n + 1, N = n + 2;
  std::vector<std::vector<Rat>> cap(N, std::vector<Rat>(N, Rat(0)));
  Rat inf(1), pos(0);
  for (int i = 0; i < n; ++i) inf += abs(g.vertices[i].mass * v.v[i]);
  for (int i = 0; i < n; ++i) {
    Rat w = g.vertices[i].mass * v.v[i];
    if (w > 0) {
      cap[S][i] = w;
      pos += w;
    } else if (w < 0) {
      cap[i][T] = -w;
    }
  }
  for (const auto& e : g.edges)
    if (v.v[e.src] - v.v[e.dst] == 1) cap[e.src][e.dst] = inf;

  Rat flow(0);
  while (true) {  // Edmonds-Karp
    std::vector<int> prev(N, -1);
    std::deque<int> q{S};
    prev[S] = S;
    while (!q.empty() && prev[T] < 0) {
      int i = q.front();
      q.pop_front();
      for (int j = 0; j < N; ++j)
        if (prev[j] < 0 && cap[i][j] > 0) {
          prev[j] = i;
          q.push_back(j);
        }
    }
    if (prev[T] < 0) break;
    Rat aug = inf;
    for (int j = T; j != S; j = prev[j]) aug = std::min(aug, cap[prev[j]][j]);
    for (int j = T; j != S; j = prev[j]) {
      cap[prev[j]][j] -= aug;
      cap[j][prev[j]] += aug;
    }
    flow += aug;
  }
  return flow == pos;  // max closure weight pos - flow must be zero
}

std::optional<Certificate> strict_multipliers_exist(const Dag& g, const Grading& v) {
  auto tight = tight_edges(g, v.v);
  std::vector<int> vars;
  for (int e = 0; e < g.m(); ++e)
    if (tight[e]) vars.push_back(e);
  int n = g.n(), k = int(vars.size());
  if (k == 0) {
    for (int i = 0; i < n; ++i)
      if (g.vertices[i].mass * v.v[i] != 0) return std::nullopt;
    return Certificate{std::vector<Rat>(g.m(), Rat(0))};
  }
  // Variables: u_0..u_{k-1}, s, w_0..w_{k-1}; maximize s with u_e - s = w_e >= 0.
  int nv = 2 * k + 1;
  std::vector<std::vector<Rat>> A;
  std::vector<Rat> b;
  for (int i = 0; i < n; ++i) {
    std::vector<Rat> row(nv, Rat(0));
    bool touched = false;
    for (int j = 0; j < k; ++j) {
      if (g.edges[vars[j]].src == i) {
        row[j] += 1;
        touched = true;
      }
      if (g.edges[vars[j]].dst == i) {
        row[j] -= 1;
        touched = true;
      }
    }
    if (!touched && g.vertices[i].mass * v.v[i] != 0) return std::nullopt;
    if (!touched) continue;
    A.push_back(row);
    b.push_back(g.vertices[i].mass * v.v[i]);
  }
  for (int j = 0; j < k; ++j) {
    std::vector<Rat> row(nv, Rat(0));
    row[j] = 1;
    row[k] = -1;
    row[k + 1 + j] = -1;
    A.push_back(row);
    b.push_back(Rat(0));
  }
  std::vector<Rat> c(nv, Rat(0));
  c[k] = 1;
  auto res = solve_lp(A, b, c);
  if (res.status == LpResult::Status::Infeasible) return std::nullopt;
  if (res.status != LpResult::Status::Optimal)
    throw std::runtime_error("strict-multiplier LP unbounded");
  if (res.objective <= 0) return std::nullopt;
  Certificate cert{std::vector<Rat>(g.m(), Rat(0))};
  for (int j = 0; j < k; ++j) cert.u[vars[j]] = res.x[j];
  return cert;
}

std::vector<double> dag_flow_rhs(const Dag& g, const std::vector<double>& x) {
  std::vector<double> rhs(g.n(), 0.0);
  for (const auto& e : g.edges) {
    double t = to_double(e.c) * std::exp(x[e.dst] - x[e.src]);
    rhs[e.src] += t / to_double(g.vertices[e.src].mass);
    rhs[e.dst] -= t / to_double(g.vertices[e.dst].mass);
  }
  return rhs;
}

std::vector<double> dag_flow_edge_rhs(const Dag& g, const std::vector<double>& y) {
  std::vector<double> outs(g.n(), 0.0), ins(g.n(), 0.0), rhs(g.m());
  for (int e = 0; e < g.m(); ++e) {
    double p = std::exp(-y[e]);
    outs[g.edges[e].src] += p;
    ins[g.edges[e].dst] += p;
  }
  for (int e = 0; e < g.m(); ++e) {
    int i = g.edges[e].src, j = g.edges[e].dst;
    rhs[e] = (outs[i] - ins[i]) / to_double(g.vertices[i].mass) -
             (outs[j] - ins[j]) / to_double(g.vertices[j].mass);
  }
  return rhs;
}

double dag_energy(const Dag& g, const std::vector<double>& x) {
  double s = 0;
  for (const auto& e : g.edges) s += to_double(e.c) * std::exp(x[e.dst] - x[e.src]);
  return s;
}

std::vector<double> ansatz_offsets(const Dag& g, const Grading& v, const Certificate& u,
                                   double tol) {
  auto tight = tight_edges(g, v.v);
  for (int e = 0; e < g.m(); ++e) {
    if (tight[e] && u.u[e] <= 0) throw no_strict_certificate("certificate not strict on a tight edge");
    if (!tight[e] && u.u[e] != 0) throw no_strict_certificate("certificate positive on a slack edge");
  }
  int n = g.n();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  auto residual = [&](const Eigen::VectorXd& b) {
    Eigen::VectorXd F = Eigen::VectorXd::Zero(n);
    for (int e = 0; e < g.m(); ++e) {
      if (!tight[e]) continue;
      int i = g.edges[e].src, j = g.edges[e].dst;
      double t = to_double(g.edges[e].c) * std::exp(b[j] - b[i]);
      F[i] += t;
      F[j] -= t;
    }
    for (int i = 0; i < n; ++i) F[i] -= to_double(g.vertices[i].mass * v.v[i]);
    return F;
  };
  auto objective = [&](const Eigen::VectorXd& b) {
    double s = 0;
    for (int e = 0; e < g.m(); ++e) {
      if (!tight[e]) continue;
      int i = g.edges[e].src, j = g.edges[e].dst;
      s += to_double(g.edges[e].c) * std::exp(b[j] - b[i]) - to_double(u.u[e]) * (b[j] - b[i]);
    }
    return s;
  };

  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd F = residual(x);
    if (F.lpNorm<Eigen::Infinity>() < tol) break;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    for (int e = 0; e < g.m(); ++e) {
      if (!tight[e]) continue;
      int i = g.edges[e].src, j = g.edges[e].dst;
      double t = to_double(g.edges[e].c) * std::exp(x[j] - x[i]);
      H(i, i) += t;
      H(j, j) += t;
      H(i, j) -= t;
      H(j, i) -= t;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    double cut = std::max(1e-12, 1e-12 * es.eigenvalues().maxCoeff());
    Eigen::VectorXd inv = es.eigenvalues().unaryExpr(
        [cut](double l) { return l > cut ? 1.0 / l : 0.0; });
    // Newton direction on grad = -F (descent of the convex functional).
    Eigen::VectorXd p = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() * F;
    double s0 = objective(x), step = 1.0;
    while (step > 1e-16 && objective(x + step * p) > s0) step /= 2;
    x += step * p;
    if (it == 199) throw std::runtime_error("offset solve did not converge");
  }

  // Minimum-norm representative: center each tight-edge component.
  std::vector<int> comp(n, -1);
  for (int root = 0; root < n; ++root) {
    if (comp[root] >= 0) continue;
    std::deque<int> q{root};
    comp[root] = root;
    while (!q.empty()) {
      int i = q.front();
      q.pop_front();
      for (int e = 0; e < g.m(); ++e) {
        if (!tight[e]) continue;
        int o = -1;
        if (g.edges[e].src == i) o = g.edges[e].dst;
        if (g.edges[e].dst == i) o = g.edges[e].src;
        if (o >= 0 && comp[o] < 0) {
          comp[o] = root;
          q.push_back(o);
        }
      }
    }
  }
  for (int root = 0; root < n; ++root) {
    double sum = 0;
    int cnt = 0;
    for (int i = 0; i < n; ++i)
      if (comp[i] == root) {
        sum += x[i];
        ++cnt;
      }
    if (cnt)
      for (int i = 0; i < n; ++i)
        if (comp[i] == root) x[i] -= sum / cnt;
  }
  return std::vector<double>(x.data(), x.data() + n);
}

Dag iterated_example_graph(int n) {
  if (n < 0) throw bad_input("iterated_example_graph: n must be >= 0");
  Dag g;
  g.vertices.push_back({"v", Rat(1)});
  for (int step = 0; step < n; ++step) {
    Dag next;
    for (const auto& v : g.vertices) next.vertices.push_back({v.id + "0", Rat(1)});
    for (const auto& v : g.vertices) next.vertices.push_back({v.id + "1", Rat(1)});
    int half = g.n();
    for (int i = 0; i < half; ++i) next.edges.push_back({i, half + i, Rat(1)});
    for (const auto& e : g.edges) next.edges.push_back({e.src, half + e.dst, Rat(1)});
    g = std::move(next);
  }
  return g;
}

}  // namespace latflow
