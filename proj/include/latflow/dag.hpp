#pragma once

#include "latflow/rational.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace latflow {

struct has_cycle : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct no_strict_certificate : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Directed acyclic graph with vertex masses and edge flow constants.
struct Dag {
  struct Vertex {
    std::string id;
    Rat mass = Rat(1);
  };
  struct Edge {
    int src, dst;
    Rat c = Rat(1);  // flow constant, > 0
  };

  std::vector<Vertex> vertices;
  std::vector<Edge> edges;

  int n() const { return int(vertices.size()); }
  int m() const { return int(edges.size()); }

  /// Validates: positive masses/constants, no multi-edges, acyclic.
  /// Returns a topological order (edges go from earlier to later).
  std::vector<int> validate_topo_order() const;

  int vertex_index(const std::string& id) const;
};

/// Vertex grading with v_i - v_j >= 1 on every edge i -> j.
struct Grading {
  std::vector<Rat> v;
};

/// KKT multipliers certifying a weight grading: u_alpha >= 0, zero on slack
/// edges, and m_i v_i equals outflow minus inflow at every vertex.
struct Certificate {
  std::vector<Rat> u;  // per edge
};

/// The unique minimizer of sum m_i v_i^2 over gradings, by exact active-set
/// QP with Bland-style anti-cycling, plus one valid certificate.
std::pair<Grading, Certificate> weight_grading(const Dag& g);

/// Characterization check: balance sum m_i v_i = 0 and, for every vertex set
/// closed under tight edges, sum_E m_i v_i <= 0. Enumerates closed sets up to
/// 2^20 of them; larger instances use a max-flow closure bound.
bool verify_grading(const Dag& g, const Grading& v);
/// Force the max-flow path regardless of size (agreement testing hook).
bool verify_grading_flow(const Dag& g, const Grading& v);

/// Certificate with u > 0 on every tight edge, when one exists
/// (LP: maximize the minimal tight-edge multiplier).
std::optional<Certificate> strict_multipliers_exist(const Dag& g, const Grading& v);

/// m_i xdot_i = sum_out c e^{x_j - x_i} - sum_in c e^{x_i - x_k}.
std::vector<double> dag_flow_rhs(const Dag& g, const std::vector<double>& x);

/// Edge-variable form in y_alpha = -(x_j - x_i + log c_alpha).
std::vector<double> dag_flow_edge_rhs(const Dag& g, const std::vector<double>& y);

/// Energy S(x) = sum c_alpha e^{x_j - x_i}.
double dag_energy(const Dag& g, const std::vector<double>& x);

/// Minimizer offsets b of the tight-edge convex functional; the critical set
/// is affine and the minimum-norm representative is returned. Requires a
/// strict certificate; Newton with backtracking, residual below `tol`.
std::vector<double> ansatz_offsets(const Dag& g, const Grading& v, const Certificate& u,
                                   double tol = 1e-12);

/// Doubling family: G(0) = point; G(n+1) has vertices G(n) x {0,1}, arrows
/// (i,0)->(i,1) and (i,0)->(j,1) for each arrow i->j. Unit masses.
Dag iterated_example_graph(int n);

}  // namespace latflow
