#include "latflow/simplex.hpp"

#include <cassert>

namespace latflow {

namespace {

// Tableau rows: m constraint rows plus objective row (maximization, reduced
// costs negated so optimality is "no negative entry"). Bland's rule.
struct Tableau {
  int m, n;                              // constraints, variables (incl. added)
  std::vector<std::vector<Rat>> t;       // (m+1) x (n+1); last column = rhs
  std::vector<int> basis;                // basic variable per row

  bool pivot_step() {
    int col = -1;
    for (int j = 0; j < n; ++j)
      if (t[m][j] < 0) {
        col = j;
        break;
      }
    if (col < 0) return false;  // optimal
    int row = -1;
    Rat best;
    for (int i = 0; i < m; ++i) {
      if (t[i][col] <= 0) continue;
      Rat ratio = t[i][n] / t[i][col];
      if (row < 0 || ratio < best || (ratio == best && basis[i] < basis[row])) {
        row = i;
        best = ratio;
      }
    }
    if (row < 0) throw std::runtime_error("lp unbounded");
    pivot(row, col);
    return true;
  }

  void pivot(int row, int col) {
    Rat p = t[row][col];
    for (auto& v : t[row]) v /= p;
    for (int i = 0; i <= m; ++i) {
      if (i == row || t[i][col] == 0) continue;
      Rat f = t[i][col];
      for (int j = 0; j <= n; ++j) t[i][j] -= f * t[row][j];
    }
    basis[row] = col;
  }
};

}  // namespace

LpResult solve_lp(std::vector<std::vector<Rat>> A, std::vector<Rat> b, std::vector<Rat> c) {
  int m = int(A.size()), n = m ? int(A[0].size()) : int(c.size());
  for (int i = 0; i < m; ++i)
    if (b[i] < 0) {
      for (auto& v : A[i]) v = -v;
      b[i] = -b[i];
    }

  // Phase 1: artificials, minimize their sum.
  Tableau tb;
  tb.m = m;
  tb.n = n + m;
  tb.t.assign(m + 1, std::vector<Rat>(tb.n + 1, Rat(0)));
  tb.basis.resize(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) tb.t[i][j] = A[i][j];
    tb.t[i][n + i] = 1;
    tb.t[i][tb.n] = b[i];
    tb.basis[i] = n + i;
  }
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) tb.t[m][j] -= tb.t[i][j];
  for (int i = 0; i < m; ++i) tb.t[m][tb.n] -= tb.t[i][tb.n];
  while (tb.pivot_step()) {
  }
  if (tb.t[m][tb.n] != 0) return {LpResult::Status::Infeasible, Rat(0), {}};

  // Drive leftover artificials out of the basis where possible.
  for (int i = 0; i < m; ++i) {
    if (tb.basis[i] < n) continue;
    int col = -1;
    for (int j = 0; j < n; ++j)
      if (tb.t[i][j] != 0) {
        col = j;
        break;
      }
    if (col >= 0) tb.pivot(i, col);
  }

  // Phase 2: real objective on the reduced tableau (artificial columns cut).
  Tableau p2;
  p2.m = m;
  p2.n = n;
  p2.t.assign(m + 1, std::vector<Rat>(n + 1, Rat(0)));
  p2.basis = tb.basis;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) p2.t[i][j] = tb.t[i][j];
    p2.t[i][n] = tb.t[i][tb.n];
  }
  for (int j = 0; j < n; ++j) p2.t[m][j] = -c[j];
  for (int i = 0; i < m; ++i) {
    if (p2.basis[i] >= n) continue;  // redundant row stuck on an artificial
    Rat f = p2.t[m][p2.basis[i]];
    if (f == 0) continue;
    for (int j = 0; j <= n; ++j) p2.t[m][j] -= f * p2.t[i][j];
  }
  try {
    while (p2.pivot_step()) {
    }
  } catch (const std::runtime_error&) {
    return {LpResult::Status::Unbounded, Rat(0), {}};
  }

  LpResult res{LpResult::Status::Optimal, p2.t[m][n], std::vector<Rat>(n, Rat(0))};
  for (int i = 0; i < m; ++i)
    if (p2.basis[i] < n) res.x[p2.basis[i]] = p2.t[i][n];
  return res;
}

}  // namespace latflow
