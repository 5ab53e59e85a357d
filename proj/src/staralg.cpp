#include "latflow/staralg.hpp"

#include <cassert>
#include <cmath>

namespace latflow {

using Cx = std::complex<double>;

BlockDiag b_zero(const StarAlgebra& a) {
  BlockDiag b;
  for (const auto& bl : a.blocks) b.push_back(Eigen::MatrixXcd::Zero(bl.dim, bl.dim));
  return b;
}

BlockDiag b_identity(const StarAlgebra& a) {
  BlockDiag b;
  for (const auto& bl : a.blocks) b.push_back(Eigen::MatrixXcd::Identity(bl.dim, bl.dim));
  return b;
}

BlockDiag b_rho(const StarAlgebra& a) {
  BlockDiag b;
  for (const auto& bl : a.blocks)
    b.push_back((bl.theta / bl.mass) * Eigen::MatrixXcd::Identity(bl.dim, bl.dim));
  return b;
}

BlockDiag b_adjoint(const BlockDiag& b) {
  BlockDiag r;
  for (const auto& m : b) r.push_back(m.adjoint());
  return r;
}

BlockDiag b_add(const BlockDiag& x, const BlockDiag& y) {
  BlockDiag r = x;
  for (size_t i = 0; i < r.size(); ++i) r[i] += y[i];
  return r;
}

BlockDiag b_sub(const BlockDiag& x, const BlockDiag& y) {
  BlockDiag r = x;
  for (size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
  return r;
}

BlockDiag b_scale(const BlockDiag& x, Cx s) {
  BlockDiag r = x;
  for (auto& m : r) m *= s;
  return r;
}

BlockDiag b_mul(const BlockDiag& x, const BlockDiag& y) {
  BlockDiag r;
  for (size_t i = 0; i < x.size(); ++i) r.push_back(x[i] * y[i]);
  return r;
}

BlockDiag b_inverse(const BlockDiag& x) {
  BlockDiag r;
  for (const auto& m : x) r.push_back(m.inverse());
  return r;
}

BlockDiag b_sqrt_psd(const BlockDiag& x) {
  BlockDiag r;
  for (const auto& m : x) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    r.push_back(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint());
  }
  return r;
}

Cx b_trace(const StarAlgebra& a, const BlockDiag& b) {
  Cx t = 0;
  for (size_t i = 0; i < b.size(); ++i) t += a.blocks[i].mass * b[i].trace();
  return t;
}

Cx b_inner(const StarAlgebra& a, const BlockDiag& x, const BlockDiag& y) {
  Cx t = 0;
  for (size_t i = 0; i < x.size(); ++i) t += a.blocks[i].mass * (x[i].adjoint() * y[i]).trace();
  return t;
}

double b_norm(const StarAlgebra& a, const BlockDiag& x) {
  return std::sqrt(std::abs(b_inner(a, x, x)));
}

double b_min_eigenvalue(const BlockDiag& x) {
  double mn = std::numeric_limits<double>::infinity();
  for (const auto& m : x) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    mn = std::min(mn, es.eigenvalues().minCoeff());
  }
  return mn;
}

ModElem m_zero(const StarAlgebra& a, const Bimodule& m) {
  ModElem r;
  for (const auto& ar : m.arrows)
    r.push_back(Eigen::MatrixXcd::Zero(a.blocks[ar.dst].dim, a.blocks[ar.src].dim));
  return r;
}

ModElem m_add(const ModElem& x, const ModElem& y) {
  ModElem r = x;
  for (size_t i = 0; i < r.size(); ++i) r[i] += y[i];
  return r;
}

ModElem m_sub(const ModElem& x, const ModElem& y) {
  ModElem r = x;
  for (size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
  return r;
}

ModElem m_scale(const ModElem& x, Cx s) {
  ModElem r = x;
  for (auto& m : r) m *= s;
  return r;
}

Cx m_inner(const ModElem& x, const ModElem& y) {
  Cx t = 0;
  for (size_t i = 0; i < x.size(); ++i) t += (x[i].adjoint() * y[i]).trace();
  return t;
}

double m_norm(const ModElem& x) { return std::sqrt(std::abs(m_inner(x, x))); }

ModElem m_conjugate(const StarAlgebra&, const Bimodule& mod, const BlockDiag& g,
                    const BlockDiag& g_inv, const ModElem& phi) {
  ModElem r = phi;
  for (size_t a = 0; a < mod.arrows.size(); ++a)
    r[a] = g[mod.arrows[a].dst] * phi[a] * g_inv[mod.arrows[a].src];
  return r;
}

BlockDiag pair_m_nstar(const StarAlgebra& a, const Bimodule& mod, const ModElem& x,
                       const ModElem& y) {
  BlockDiag r = b_zero(a);
  for (size_t k = 0; k < mod.arrows.size(); ++k) {
    int j = mod.arrows[k].dst;
    r[j] += (1.0 / a.blocks[j].mass) * (x[k] * y[k].adjoint());
  }
  return r;
}

BlockDiag pair_mstar_n(const StarAlgebra& a, const Bimodule& mod, const ModElem& x,
                       const ModElem& y) {
  BlockDiag r = b_zero(a);
  for (size_t k = 0; k < mod.arrows.size(); ++k) {
    int i = mod.arrows[k].src;
    r[i] += (1.0 / a.blocks[i].mass) * (x[k].adjoint() * y[k]);
  }
  return r;
}

ModElem commutator_phi_b(const Bimodule& mod, const ModElem& phi, const BlockDiag& b) {
  ModElem r = phi;
  for (size_t k = 0; k < mod.arrows.size(); ++k)
    r[k] = phi[k] * b[mod.arrows[k].src] - b[mod.arrows[k].dst] * phi[k];
  return r;
}

BlockDiag commutator_phistar_m(const StarAlgebra& a, const Bimodule& mod, const ModElem& phi,
                               const ModElem& m) {
  return b_sub(pair_mstar_n(a, mod, phi, m), pair_m_nstar(a, mod, m, phi));
}

BlockDiag moment_bracket(const StarAlgebra& a, const Bimodule& mod, const ModElem& phi) {
  return b_sub(pair_mstar_n(a, mod, phi, phi), pair_m_nstar(a, mod, phi, phi));
}

BlockDiag metric_bracket(const StarAlgebra& a, const Bimodule& mod, const ModElem& phi,
                         const BlockDiag& h, const BlockDiag& h_inv) {
  BlockDiag r = b_zero(a);
  for (size_t k = 0; k < mod.arrows.size(); ++k) {
    int i = mod.arrows[k].src, j = mod.arrows[k].dst;
    r[i] += (1.0 / a.blocks[i].mass) * (h_inv[i] * phi[k].adjoint() * h[j] * phi[k]);
    r[j] -= (1.0 / a.blocks[j].mass) * (phi[k] * h_inv[i] * phi[k].adjoint() * h[j]);
  }
  return r;
}

BlockDiag laplacian(const StarAlgebra& a, const Bimodule& mod, const ModElem& phi0,
                    const BlockDiag& b) {
  return commutator_phistar_m(a, mod, phi0, commutator_phi_b(mod, phi0, b));
}

Eigen::VectorXcd b_coords(const StarAlgebra& a, const BlockDiag& b) {
  Eigen::VectorXcd v(a.dim_b());
  int at = 0;
  for (size_t i = 0; i < b.size(); ++i) {
    double w = std::sqrt(a.blocks[i].mass);
    for (int c = 0; c < b[i].cols(); ++c)
      for (int r = 0; r < b[i].rows(); ++r) v[at++] = w * b[i](r, c);
  }
  return v;
}

BlockDiag b_from_coords(const StarAlgebra& a, const Eigen::VectorXcd& v) {
  BlockDiag b = b_zero(a);
  int at = 0;
  for (size_t i = 0; i < b.size(); ++i) {
    double w = 1.0 / std::sqrt(a.blocks[i].mass);
    for (int c = 0; c < b[i].cols(); ++c)
      for (int r = 0; r < b[i].rows(); ++r) b[i](r, c) = w * v[at++];
  }
  return b;
}

BlockDiag GreenOperator::apply_p(const StarAlgebra& a, const BlockDiag& b) const {
  return b_from_coords(a, P * b_coords(a, b));
}

BlockDiag GreenOperator::apply_g(const StarAlgebra& a, const BlockDiag& b) const {
  return b_from_coords(a, G * b_coords(a, b));
}

GreenOperator green_operator(const StarAlgebra& a, const Bimodule& mod, const ModElem& phi0,
                             double central_tol) {
  // Centrality of [phi0^*, phi0]: each block a scalar.
  BlockDiag mb = moment_bracket(a, mod, phi0);
  double scale = 0;
  for (const auto& m : mb) scale = std::max(scale, m.norm());
  for (auto& m : mb) {
    Cx mean = m.trace() / double(m.rows());
    m -= mean * Eigen::MatrixXcd::Identity(m.rows(), m.cols());
    if (m.norm() > central_tol * std::max(1.0, scale))
      throw not_central("[phi0^*, phi0] is not central");
  }

  int d = a.dim_b();
  Eigen::MatrixXcd D(d, d);
  for (int k = 0; k < d; ++k) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(d);
    e[k] = 1;
    D.col(k) = b_coords(a, laplacian(a, mod, phi0, b_from_coords(a, e)));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es((D + D.adjoint()) / 2.0);
  double cut = 1e-9 * std::max(1e-30, es.eigenvalues().maxCoeff());
  GreenOperator out;
  out.P = Eigen::MatrixXcd::Zero(d, d);
  out.G = Eigen::MatrixXcd::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    Eigen::VectorXcd u = es.eigenvectors().col(k);
    if (es.eigenvalues()[k] <= cut)
      out.P += u * u.adjoint();
    else
      out.G += (1.0 / es.eigenvalues()[k]) * (u * u.adjoint());
  }
  return out;
}

BlockDiag Subalgebra::project(const StarAlgebra& a, const BlockDiag& b) const {
  return b_from_coords(a, proj * b_coords(a, b));
}

Subalgebra nullspace_subalgebra(
    const StarAlgebra& a,
    const std::vector<std::function<Eigen::VectorXcd(const BlockDiag&)>>& constraints,
    const Subalgebra* within) {
  int d = a.dim_b();
  Eigen::MatrixXcd C(0, d);
  for (const auto& con : constraints) {
    Eigen::VectorXcd probe = con(b_from_coords(a, Eigen::VectorXcd::Zero(d)));
    int rows = int(probe.size());
    Eigen::MatrixXcd block(rows, d);
    for (int k = 0; k < d; ++k) {
      Eigen::VectorXcd e = Eigen::VectorXcd::Zero(d);
      e[k] = 1;
      block.col(k) = con(b_from_coords(a, e));
    }
    Eigen::MatrixXcd merged(C.rows() + rows, d);
    merged << C, block;
    C = std::move(merged);
  }
  if (within) {
    Eigen::MatrixXcd extra = Eigen::MatrixXcd::Identity(d, d) - within->proj;
    Eigen::MatrixXcd merged(C.rows() + d, d);
    merged << C, extra;
    C = std::move(merged);
  }

  Subalgebra out;
  if (C.rows() == 0) {
    out.proj = Eigen::MatrixXcd::Identity(d, d);
    for (int k = 0; k < d; ++k) {
      Eigen::VectorXcd e = Eigen::VectorXcd::Zero(d);
      e[k] = 1;
      out.basis.push_back(b_from_coords(a, e));
    }
    return out;
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(C, Eigen::ComputeFullV);
  double cut = 1e-10 * std::max(1e-300, double(svd.singularValues()(0)));
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > cut) ++rank;
  int null_dim = d - rank;
  out.proj = Eigen::MatrixXcd::Zero(d, d);
  for (int k = 0; k < null_dim; ++k) {
    Eigen::VectorXcd v = svd.matrixV().col(rank + k);
    out.basis.push_back(b_from_coords(a, v));
    out.proj += v * v.adjoint();
  }
  return out;
}

Quadruple Quadruple::from_parts(StarAlgebra a, Bimodule m, ModElem p) {
  Quadruple q;
  q.rho = b_rho(a);
  q.alg = std::move(a);
  q.mod = std::move(m);
  q.phi = std::move(p);
  return q;
}

std::vector<std::pair<double, ModElem>> degree_components(const StarAlgebra& a,
                                                          const Bimodule& mod,
                                                          const ModElem& phi,
                                                          const BlockDiag& r, double tol) {
  // Spectral projectors of r per block.
  struct Spec {
    std::vector<double> vals;
    std::vector<Eigen::MatrixXcd> projs;
  };
  std::vector<Spec> spec(a.n_blocks());
  for (int i = 0; i < a.n_blocks(); ++i) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r[i]);
    for (int k = 0; k < es.eigenvalues().size(); ++k) {
      double v = es.eigenvalues()[k];
      int found = -1;
      for (size_t s = 0; s < spec[i].vals.size(); ++s)
        if (std::abs(spec[i].vals[s] - v) < tol) found = int(s);
      Eigen::MatrixXcd pr =
          es.eigenvectors().col(k) * es.eigenvectors().col(k).adjoint();
      if (found < 0) {
        spec[i].vals.push_back(v);
        spec[i].projs.push_back(pr);
      } else {
        spec[i].projs[found] += pr;
      }
    }
  }
  std::vector<std::pair<double, ModElem>> out;
  for (size_t k = 0; k < mod.arrows.size(); ++k) {
    int i = mod.arrows[k].src, j = mod.arrows[k].dst;
    for (size_t si = 0; si < spec[i].vals.size(); ++si)
      for (size_t sj = 0; sj < spec[j].vals.size(); ++sj) {
        Eigen::MatrixXcd comp = spec[j].projs[sj] * phi[k] * spec[i].projs[si];
        if (comp.norm() < 1e-14) continue;
        double deg = spec[j].vals[sj] - spec[i].vals[si];
        int found = -1;
        for (size_t o = 0; o < out.size(); ++o)
          if (std::abs(out[o].first - deg) < tol) found = int(o);
        if (found < 0) {
          out.push_back({deg, m_zero(a, mod)});
          found = int(out.size()) - 1;
        }
        out[found].second[k] += comp;
      }
  }
  std::sort(out.begin(), out.end(),
            [](const auto& x, const auto& y) { return x.first > y.first; });
  return out;
}

ReduceResult reduce(const Quadruple& q, const BlockDiag& r, double tol) {
  auto comps = degree_components(q.alg, q.mod, q.phi, r);
  ModElem phi0 = m_zero(q.alg, q.mod), phi_low = m_zero(q.alg, q.mod);
  for (const auto& [deg, c] : comps) {
    if (std::abs(deg) < 1e-9) phi0 = c;
    if (std::abs(deg + 1) < 1e-9) phi_low = c;
  }
  // Preconditions: [phi0^*, phi0] central (checked by green_operator) and
  // phi_{-1} harmonic.
  green_operator(q.alg, q.mod, phi0);
  if (b_norm(q.alg, commutator_phistar_m(q.alg, q.mod, phi0, phi_low)) > tol)
    throw not_harmonic("phi_{-1} is not harmonic for phi_0");

  std::vector<std::function<Eigen::VectorXcd(const BlockDiag&)>> cons;
  cons.push_back([&](const BlockDiag& b) {
    BlockDiag c = b_sub(b_mul(r, b), b_mul(b, r));
    return b_coords(q.alg, c);
  });
  cons.push_back([&](const BlockDiag& b) {
    ModElem c = commutator_phi_b(q.mod, phi0, b);
    int dim = 0;
    for (const auto& m : c) dim += int(m.size());
    Eigen::VectorXcd w(dim);
    int at = 0;
    for (const auto& m : c)
      for (int col = 0; col < m.cols(); ++col)
        for (int row = 0; row < m.rows(); ++row) w[at++] = m(row, col);
    return w;
  });
  Subalgebra bprime = nullspace_subalgebra(q.alg, cons, q.sub ? &*q.sub : nullptr);

  // dim M' = {m : [r,m] = -m, [phi0^*, m] = 0}.
  int dm = q.mod.dim_m(q.alg);
  Eigen::MatrixXcd MC(dm + q.alg.dim_b(), dm);
  auto m_from = [&](const Eigen::VectorXcd& v) {
    ModElem m = m_zero(q.alg, q.mod);
    int at = 0;
    for (auto& mm : m)
      for (int col = 0; col < mm.cols(); ++col)
        for (int row = 0; row < mm.rows(); ++row) mm(row, col) = v[at++];
    return m;
  };
  auto m_flat = [&](const ModElem& m) {
    Eigen::VectorXcd v(dm);
    int at = 0;
    for (const auto& mm : m)
      for (int col = 0; col < mm.cols(); ++col)
        for (int row = 0; row < mm.rows(); ++row) v[at++] = mm(row, col);
    return v;
  };
  for (int k = 0; k < dm; ++k) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(dm);
    e[k] = 1;
    ModElem m = m_from(e);
    ModElem rm = m;  // [r, m] + m per arrow
    for (size_t arw = 0; arw < q.mod.arrows.size(); ++arw)
      rm[arw] = r[q.mod.arrows[arw].dst] * m[arw] - m[arw] * r[q.mod.arrows[arw].src] + m[arw];
    Eigen::VectorXcd top = m_flat(rm);
    Eigen::VectorXcd bot = b_coords(q.alg, commutator_phistar_m(q.alg, q.mod, phi0, m));
    MC.col(k) << top, bot;
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(MC);
  double cut = 1e-10 * std::max(1e-300, double(svd.singularValues()(0)));
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > cut) ++rank;

  ReduceResult out{q, std::move(bprime), dm - rank};
  out.reduced.rho = r;
  out.reduced.phi = phi_low;
  out.reduced.sub = out.b_prime;
  return out;
}

}  // namespace latflow
