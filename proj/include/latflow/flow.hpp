#pragma once

#include "latflow/dag.hpp"
#include "latflow/staralg.hpp"

#include <optional>

namespace latflow {

struct singular_metric : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct step_failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct positivity_lost : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct insufficient_range : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct depth_exceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// dh/dt = h (Proj([h^{-1} phi^* h, phi]) - rho); Proj is the subalgebra
/// projection for reduced quadruples, identity otherwise.
BlockDiag flow_rhs(const Quadruple& q, const BlockDiag& h);

/// S(h) = sum_arrows tr(h_i^{-1} phi^* h_j phi) + sum_i theta_i log det h_i.
double energy(const Quadruple& q, const BlockDiag& h);

struct IntegrateOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  int samples = 400;
  bool stop_at_fixed_point = false;
  double fixed_point_tol = 1e-10;  // on ||dh/ds|| / ||h||
};

struct TrajectorySample {
  double t;
  BlockDiag h;
  std::vector<std::vector<double>> eigs;  // per block, descending
  double energy;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  bool reached_fixed_point = false;
};

/// Adaptive Dormand-Prince 5(4) in s = log t on a geometric sample grid;
/// accepted states re-symmetrized and positivity-checked.
Trajectory integrate(const Quadruple& q, const BlockDiag& h0, double t0, double t1,
                     const IntegrateOptions& opts = {});

/// h2(t) - h1(t) stays PSD at every sample (within 1e-9 * scale).
bool monotonicity_check(const Quadruple& q, const BlockDiag& h10, const BlockDiag& h20,
                        double t0, double t1, const IntegrateOptions& opts = {});

/// Fixed-point metric of the flow, or nullopt when it has not settled by
/// s_max (non-polystable input).
std::optional<BlockDiag> solve_king_metric(const Quadruple& q, double tol = 1e-10,
                                           double s_max = 40.0);

/// Weight filtration data driving the asymptotic construction: per level,
/// per block, per basis vector, a label (diagonal in the given basis).
struct LevelFiltration {
  std::vector<std::vector<Rat>> diag;  // [block][coordinate]
  BlockDiag r(const StarAlgebra& a) const;
};

struct IterFiltration {
  std::vector<LevelFiltration> levels;
};

/// Iterated weight filtration of a thin representation via the lattice of
/// closed subgraphs (arrows with vanishing matrix do not constrain).
IterFiltration thin_iterated_filtration(const Quadruple& q);

/// Support DAG of a thin representation: c_alpha = |phi_alpha|^2.
Dag dag_of_thin(const Quadruple& q);

/// Closed-form asymptotic solution: per joint weight projector an exponent
/// sequence in the t, log t, log log t, ... basis, plus the bounded
/// Green's-operator correction factor at each level.
struct AsymptoticForm {
  struct Level {
    BlockDiag r;
    ModElem phi_full;  // gauge-fixed phi of this level's quadruple
    ModElem phi_low;   // degree-(-1) part, the next level's phi
    GreenOperator green;
    std::optional<Subalgebra> sub;
    double gauge_residual = 0;
  };
  struct Term {
    std::vector<Rat> exponents;
    BlockDiag projector;
    int rank = 0;
  };

  StarAlgebra alg;
  Bimodule mod;
  BlockDiag rho;
  std::vector<Level> levels;
  BlockDiag x_base;  // square root of the base fixed-point metric
  std::vector<Term> terms;

  int depth() const { return int(levels.size()); }
  /// Root-form solution and its time derivative at t.
  std::pair<BlockDiag, BlockDiag> eval_x(double t) const;
  BlockDiag eval_h(double t) const;
};

/// Recursive construction: gauge-fix, split off the degree-(-1) part, reduce,
/// recurse until a fixed point exists; unwind through t^{r/2} x(log t) with
/// the Green's-operator correction at each level. The filtration is computed
/// for thin representations and must be supplied otherwise.
AsymptoticForm build_asymptotic_solution(const Quadruple& q,
                                         const IterFiltration* supplied = nullptr,
                                         int depth_cap = 8);

struct ResidualProfile {
  std::vector<double> t, norm;
  double decay_exponent = 0;   // least-squares slope of log||s|| vs log t
  double loglog_coeff = 0;     // from the extended {log t, log log t} fit
  bool tail_integrable = false;
  bool identically_zero = false;
};

/// Defect s(t) = xdot x^{-1} + (xdot x^{-1})^* - [(x phi x^{-1})^*, x phi x^{-1}] + rho
/// of the closed form, sampled geometrically, with a fitted decay exponent.
ResidualProfile residual_l1(const AsymptoticForm& form, double t0, double t1,
                            int samples = 200);

struct BranchFit {
  std::vector<double> coeffs;  // per basis fn {log t, loglog t, ..., 1}
  std::vector<double> stderr_boot;
  double condition = 0;
};

struct FitResult {
  std::vector<std::vector<BranchFit>> by_block;  // [block][branch]
};

/// Regression of log eigenvalue branches against iterated-log basis functions
/// over the trailing window of the trajectory, with bootstrap error bars.
FitResult fit_exponents(const Trajectory& traj, int depth_max, double window_decades = 2.0,
                        uint64_t seed = 1, int bootstrap = 32);

}  // namespace latflow
