#pragma once

#include "latflow/rational.hpp"

#include <vector>

namespace latflow {

/// Exact simplex for  max c.x  s.t.  A x = b, x >= 0  (dense, Bland's rule).
struct LpResult {
  enum class Status { Optimal, Infeasible, Unbounded };
  Status status;
  Rat objective;
  std::vector<Rat> x;
};

LpResult solve_lp(std::vector<std::vector<Rat>> A, std::vector<Rat> b, std::vector<Rat> c);

}  // namespace latflow
