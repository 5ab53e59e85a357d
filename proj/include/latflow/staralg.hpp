#pragma once

#include "latflow/rational.hpp"

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace latflow {

struct shape_mismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct not_central : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct not_harmonic : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Block C*-algebra B = prod End(E_i) with trace tau(b) = sum m_i tr(b_i)
/// and central stability element rho_i = theta_i / m_i.
struct StarAlgebra {
  struct Block {
    std::string id;
    int dim = 1;
    double mass = 1.0;   // > 0
    double theta = 0.0;
    Rat mass_exact = Rat(1);   // exact copies feeding the lattice machinery
    Rat theta_exact = Rat(0);
  };
  std::vector<Block> blocks;

  static Block make_block(std::string id, int dim, const Rat& mass, const Rat& theta) {
    Block b;
    b.id = std::move(id);
    b.dim = dim;
    b.mass_exact = mass;
    b.theta_exact = theta;
    b.mass = to_double(mass);
    b.theta = to_double(theta);
    return b;
  }

  int n_blocks() const { return int(blocks.size()); }
  int dim_b() const {  // complex dimension of B
    int d = 0;
    for (const auto& b : blocks) d += b.dim * b.dim;
    return d;
  }
};

/// Element of B: one matrix per block.
using BlockDiag = std::vector<Eigen::MatrixXcd>;

/// *-bimodule of quiver shape; elements assign a d_dst x d_src matrix per arrow.
struct Bimodule {
  struct Arrow {
    int src, dst;
  };
  std::vector<Arrow> arrows;
  int dim_m(const StarAlgebra& a) const {
    int d = 0;
    for (const auto& ar : arrows) d += a.blocks[ar.dst].dim * a.blocks[ar.src].dim;
    return d;
  }
};

using ModElem = std::vector<Eigen::MatrixXcd>;

// --- element constructors and linear algebra on B ------------------------

BlockDiag b_zero(const StarAlgebra& a);
BlockDiag b_identity(const StarAlgebra& a);
BlockDiag b_rho(const StarAlgebra& a);  // theta_i/m_i per block
BlockDiag b_adjoint(const BlockDiag& b);
BlockDiag b_add(const BlockDiag& x, const BlockDiag& y);
BlockDiag b_sub(const BlockDiag& x, const BlockDiag& y);
BlockDiag b_scale(const BlockDiag& x, std::complex<double> s);
BlockDiag b_mul(const BlockDiag& x, const BlockDiag& y);
BlockDiag b_inverse(const BlockDiag& x);
BlockDiag b_sqrt_psd(const BlockDiag& x);  // Hermitian positive square root
std::complex<double> b_trace(const StarAlgebra& a, const BlockDiag& b);
std::complex<double> b_inner(const StarAlgebra& a, const BlockDiag& x, const BlockDiag& y);
double b_norm(const StarAlgebra& a, const BlockDiag& x);
double b_min_eigenvalue(const BlockDiag& x);

ModElem m_zero(const StarAlgebra& a, const Bimodule& m);
ModElem m_add(const ModElem& x, const ModElem& y);
ModElem m_sub(const ModElem& x, const ModElem& y);
ModElem m_scale(const ModElem& x, std::complex<double> s);
std::complex<double> m_inner(const ModElem& x, const ModElem& y);  // sum tr(x_a^* y_a)
double m_norm(const ModElem& x);
/// Two-sided action: per arrow i->j, (b.m)_a = b_j m_a and (m.b)_a = m_a b_i.
ModElem m_conjugate(const StarAlgebra& a, const Bimodule& mod, const BlockDiag& g,
                    const BlockDiag& g_inv, const ModElem& phi);  // g phi g^{-1}

// --- pairings and commutators --------------------------------------------

/// phi psi^*: per block j, (1/m_j) sum_{a: i->j} phi_a psi_a^*.
BlockDiag pair_m_nstar(const StarAlgebra& a, const Bimodule& mod, const ModElem& x,
                       const ModElem& y);
/// phi^* psi: per block i, (1/m_i) sum_{a: i->j} phi_a^* psi_a.
BlockDiag pair_mstar_n(const StarAlgebra& a, const Bimodule& mod, const ModElem& x,
                       const ModElem& y);

/// [phi, b] in M: per arrow i->j, phi_a b_i - b_j phi_a.
ModElem commutator_phi_b(const Bimodule& mod, const ModElem& phi, const BlockDiag& b);
/// [phi^*, m] in B: phi^* m - m phi^* assembled with the 1/m weights.
BlockDiag commutator_phistar_m(const StarAlgebra& a, const Bimodule& mod, const ModElem& phi,
                               const ModElem& m);
/// [phi^*, phi] = phi^* phi - phi phi^*.
BlockDiag moment_bracket(const StarAlgebra& a, const Bimodule& mod, const ModElem& phi);
/// [h^{-1} phi^* h, phi].
BlockDiag metric_bracket(const StarAlgebra& a, const Bimodule& mod, const ModElem& phi,
                         const BlockDiag& h, const BlockDiag& h_inv);

/// Delta(b) = [phi0^*, [phi0, b]].
BlockDiag laplacian(const StarAlgebra& a, const Bimodule& mod, const ModElem& phi0,
                    const BlockDiag& b);

// --- coordinates (tau-orthonormal) for operator-level work ----------------

Eigen::VectorXcd b_coords(const StarAlgebra& a, const BlockDiag& b);
BlockDiag b_from_coords(const StarAlgebra& a, const Eigen::VectorXcd& v);

/// P = orthogonal projection onto ker Delta, G = Moore-Penrose pseudoinverse;
/// 1 = P + Delta G = P + G Delta and PG = GP = 0. Requires [phi0^*, phi0]
/// central within `central_tol`.
struct GreenOperator {
  Eigen::MatrixXcd P, G;
  BlockDiag apply_p(const StarAlgebra& a, const BlockDiag& b) const;
  BlockDiag apply_g(const StarAlgebra& a, const BlockDiag& b) const;
};

GreenOperator green_operator(const StarAlgebra& a, const Bimodule& mod, const ModElem& phi0,
                             double central_tol = 1e-10);

/// Orthonormal (tau-inner-product) basis of a subalgebra of B, with its
/// orthogonal projection.
struct Subalgebra {
  std::vector<BlockDiag> basis;
  Eigen::MatrixXcd proj;  // in tau-orthonormal coordinates
  BlockDiag project(const StarAlgebra& a, const BlockDiag& b) const;
  int dim() const { return int(basis.size()); }
};

/// Basis of {b : constraints_k(b) = 0} intersected with an optional ambient
/// subalgebra; each constraint is a linear map given by its action.
Subalgebra nullspace_subalgebra(const StarAlgebra& a,
                                const std::vector<std::function<Eigen::VectorXcd(const BlockDiag&)>>& constraints,
                                const Subalgebra* within = nullptr);

// --- the quadruple and its reduction --------------------------------------

struct Quadruple {
  StarAlgebra alg;
  Bimodule mod;
  ModElem phi;
  BlockDiag rho;                    // central self-adjoint
  std::optional<Subalgebra> sub;    // metrics constrained to exp(sub) when set

  static Quadruple from_parts(StarAlgebra a, Bimodule m, ModElem p);
};

/// Splits phi into components of r-degree: for arrow i->j the (mu, nu)
/// eigenspace pair contributes degree nu - mu. Degrees are clustered within
/// `tol`. Returns matched (degree, component) pairs, degrees descending.
std::vector<std::pair<double, ModElem>> degree_components(const StarAlgebra& a,
                                                          const Bimodule& mod,
                                                          const ModElem& phi,
                                                          const BlockDiag& r,
                                                          double tol = 1e-9);

struct ReduceResult {
  Quadruple reduced;        // B' as sub of the same ambient algebra, rho' = r, phi' = phi_{-1}
  Subalgebra b_prime;
  int module_dim;           // dim M' = {m : [r,m] = -m, [phi0^*, m] = 0}
};

/// Harmonic degree-0 reduction: B' = {[r,b] = 0, [phi0,b] = 0},
/// M' = {[r,m] = -m, [phi0^*,m] = 0}; requires [phi0^*,phi0] central and
/// phi_{-1} harmonic.
ReduceResult reduce(const Quadruple& q, const BlockDiag& r, double tol = 1e-8);

struct GaugeFixResult {
  Quadruple gauged;         // same algebra, conjugated phi
  BlockDiag g;              // conjugating element (phi_new = g phi g^{-1})
  ModElem phi0, phi_low;    // degree-0 and degree-(-1) components after fixing
  double residual;          // worst gauge-equation residual
};

/// Conjugates phi so that (a) no components in degrees (-1,0) or above 0,
/// (b) [phi0^*, phi0] = rho via the metric flow on the degree-0 part,
/// (c) [phi0^*, phi_lambda] = 0 for lambda <= -1 via Green-operator steps.
GaugeFixResult gauge_fix(const Quadruple& q, const BlockDiag& r, double tol = 1e-8);

}  // namespace latflow
