#include "latflow/flow.hpp"

#include "latflow/lattice.hpp"
#include "latflow/weight.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <random>

namespace latflow {

using Cx = std::complex<double>;

BlockDiag flow_rhs(const Quadruple& q, const BlockDiag& h) {
  if (b_min_eigenvalue(h) <= 0) throw singular_metric("metric not positive definite");
  BlockDiag bracket = metric_bracket(q.alg, q.mod, q.phi, h, b_inverse(h));
  if (q.sub) bracket = q.sub->project(q.alg, bracket);
  return b_mul(h, b_sub(bracket, q.rho));
}

double energy(const Quadruple& q, const BlockDiag& h) {
  BlockDiag h_inv = b_inverse(h);
  double s = 0;
  for (size_t k = 0; k < q.mod.arrows.size(); ++k) {
    int i = q.mod.arrows[k].src, j = q.mod.arrows[k].dst;
    s += (h_inv[i] * q.phi[k].adjoint() * h[j] * q.phi[k]).trace().real();
  }
  for (size_t i = 0; i < h.size(); ++i) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h[i]);
    s += q.alg.blocks[i].theta * es.eigenvalues().array().log().sum();
  }
  return s;
}

namespace {

void resymmetrize(BlockDiag& h) {
  for (auto& m : h) m = ((m + m.adjoint()) / 2.0).eval();
}

std::vector<std::vector<double>> sorted_eigs(const BlockDiag& h) {
  std::vector<std::vector<double>> out;
  for (const auto& m : h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    std::vector<double> v(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(v.rbegin(), v.rend());
    out.push_back(std::move(v));
  }
  return out;
}

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

Trajectory integrate(const Quadruple& q, const BlockDiag& h0, double t0, double t1,
                     const IntegrateOptions& opts) {
  if (t0 <= 0 || t1 <= t0) throw bad_input("need 0 < t0 < t1");
  double s0 = std::log(t0), s1 = std::log(t1);

  auto f = [&](double s, const BlockDiag& h) {
    return b_scale(flow_rhs(q, h), std::exp(s));  // dh/ds = t dh/dt
  };
  auto err_norm = [&](const BlockDiag& e, const BlockDiag& y0, const BlockDiag& y1) {
    double acc = 0;
    size_t cnt = 0;
    for (size_t i = 0; i < e.size(); ++i)
      for (int r = 0; r < e[i].rows(); ++r)
        for (int c = 0; c < e[i].cols(); ++c) {
          double sc = opts.atol + opts.rtol * std::max(std::abs(y0[i](r, c)), std::abs(y1[i](r, c)));
          acc += std::norm(e[i](r, c)) / (sc * sc);
          ++cnt;
        }
    return std::sqrt(acc / double(cnt));
  };

  Trajectory out;
  std::vector<double> grid(opts.samples + 1);
  for (int i = 0; i <= opts.samples; ++i)
    grid[i] = s0 + (s1 - s0) * double(i) / double(opts.samples);

  BlockDiag h = h0;
  resymmetrize(h);
  double s = s0, ds = std::min(1e-2, (s1 - s0) / 10);
  size_t next = 0;
  int settled = 0;

  auto record = [&](double at_s, const BlockDiag& hh) {
    out.samples.push_back({std::exp(at_s), hh, sorted_eigs(hh), energy(q, hh)});
  };
  record(s, h);
  next = 1;

  BlockDiag k1 = f(s, h);
  while (next <= size_t(opts.samples)) {
    bool clipped = false;
    double step = ds;
    if (s + step >= grid[next]) {
      step = grid[next] - s;
      clipped = true;
    }
    auto stage = [&](double frac, const std::vector<std::pair<double, const BlockDiag*>>& terms) {
      BlockDiag y = h;
      for (auto [w, kk] : terms)
        for (size_t i = 0; i < y.size(); ++i) y[i] += step * w * (*kk)[i];
      return f(s + frac * step, y);
    };
    try {
      BlockDiag k2 = stage(c2, {{a21, &k1}});
      BlockDiag k3 = stage(c3, {{a31, &k1}, {a32, &k2}});
      BlockDiag k4 = stage(c4, {{a41, &k1}, {a42, &k2}, {a43, &k3}});
      BlockDiag k5 = stage(c5, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
      BlockDiag k6 = stage(1.0, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
      BlockDiag ynew = h;
      for (size_t i = 0; i < h.size(); ++i)
        ynew[i] += step * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
      BlockDiag k7 = f(s + step, ynew);
      BlockDiag errv = b_zero(q.alg);
      for (size_t i = 0; i < h.size(); ++i)
        errv[i] = step * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                          e7 * k7[i]);
      double err = err_norm(errv, h, ynew);
      if (err <= 1.0) {
        s += step;
        h = std::move(ynew);
        resymmetrize(h);
        if (b_min_eigenvalue(h) <= 0) throw positivity_lost("metric lost positivity");
        k1 = std::move(k7);  // FSAL
        double rel = b_norm(q.alg, k1) / std::max(1e-300, b_norm(q.alg, h));
        settled = rel < opts.fixed_point_tol ? settled + 1 : 0;
        if (clipped) {
          record(s, h);
          ++next;
        }
        if (opts.stop_at_fixed_point && settled >= 10) {
          out.reached_fixed_point = true;
          while (next <= size_t(opts.samples)) record(grid[next++], h);
          break;
        }
      }
      double fac = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
      ds = step * std::clamp(fac, 0.2, 5.0);
      if (ds < 1e-14 * std::max(1.0, std::abs(s))) throw step_failure("step size underflow");
    } catch (const singular_metric&) {
      ds /= 4;
      if (ds < 1e-14) throw step_failure("step size underflow at singular metric");
    }
  }
  return out;
}

bool monotonicity_check(const Quadruple& q, const BlockDiag& h10, const BlockDiag& h20,
                        double t0, double t1, const IntegrateOptions& opts) {
  Trajectory tr1 = integrate(q, h10, t0, t1, opts);
  Trajectory tr2 = integrate(q, h20, t0, t1, opts);
  for (size_t i = 0; i < tr1.samples.size(); ++i) {
    BlockDiag d = b_sub(tr2.samples[i].h, tr1.samples[i].h);
    double scale = std::max(b_norm(q.alg, tr1.samples[i].h), b_norm(q.alg, tr2.samples[i].h));
    if (b_min_eigenvalue(d) < -1e-9 * scale) return false;
  }
  return true;
}

std::optional<BlockDiag> solve_king_metric(const Quadruple& q, double tol, double s_max) {
  IntegrateOptions opts;
  opts.stop_at_fixed_point = true;
  opts.fixed_point_tol = tol;
  opts.samples = 200;
  Trajectory tr = integrate(q, b_identity(q.alg), 1.0, std::exp(s_max), opts);
  if (!tr.reached_fixed_point) return std::nullopt;
  return tr.samples.back().h;
}

Dag dag_of_thin(const Quadruple& q) {
  Dag g;
  for (const auto& b : q.alg.blocks) {
    if (b.dim != 1) throw bad_input("representation is not thin");
    g.vertices.push_back({b.id, b.mass_exact});
  }
  for (size_t k = 0; k < q.mod.arrows.size(); ++k) {
    double c = std::norm(q.phi[k](0, 0));
    if (c == 0) continue;  // vanishing arrows impose no subobject constraint
    Rat cr(c);             // doubles are dyadic rationals
    g.edges.push_back({q.mod.arrows[k].src, q.mod.arrows[k].dst, cr});
  }
  return g;
}

BlockDiag LevelFiltration::r(const StarAlgebra& a) const {
  BlockDiag out = b_zero(a);
  for (int i = 0; i < a.n_blocks(); ++i)
    for (int k = 0; k < a.blocks[i].dim; ++k) out[i](k, k) = to_double(diag[i][k]);
  return out;
}

IterFiltration thin_iterated_filtration(const Quadruple& q) {
  Dag g = dag_of_thin(q);
  auto sub = subgraph_lattice(g);

  // King semistability w.r.t. theta: total zero, every closed subgraph <= 0.
  Rat total(0);
  for (const auto& b : q.alg.blocks) total += b.theta_exact;
  if (total != 0) throw not_semistable("theta(E) must vanish");
  std::vector<Elem> zero_elems;
  for (Elem e = 0; e < sub.lat.size(); ++e) {
    Rat th(0);
    uint64_t m = sub.lat.mask_of(e);
    for (int v = 0; v < g.n(); ++v)
      if (m >> v & 1) th += q.alg.blocks[v].theta_exact;
    if (th > 0) throw not_semistable("a subrepresentation violates King semistability");
    if (th == 0) zero_elems.push_back(e);
  }

  // Iterate the weight filtration inside the theta-zero sublattice.
  const FinLattice* L = &sub.lat;
  FinLattice restricted;
  std::vector<uint64_t> rmasks;
  if (zero_elems.size() != size_t(sub.lat.size())) {
    std::vector<std::string> names;
    std::vector<uint64_t> outmask(g.n(), 0);
    for (const auto& e : g.edges) outmask[e.src] |= uint64_t(1) << e.dst;
    for (Elem e : zero_elems) {
      rmasks.push_back(sub.lat.mask_of(e));
      names.push_back(sub.lat.name(e));
    }
    restricted = FinLattice::from_masks(rmasks, g.n(), outmask, names);
    L = &restricted;
  }
  XFunctional X;
  X.class_value.assign(L->num_classes(), Rat(0));
  {
    const auto& cvs = L->covers();
    for (size_t i = 0; i < cvs.size(); ++i) {
      uint64_t diff = L->mask_of(cvs[i].second) & ~L->mask_of(cvs[i].first);
      Rat m(0);
      for (int v = 0; v < g.n(); ++v)
        if (diff >> v & 1) m += g.vertices[v].mass;
      int cls = L->cover_class(int(i));
      assert(X.class_value[cls] == 0 || X.class_value[cls] == m);
      X.class_value[cls] = m;
    }
  }

  IteratedFiltration it = iterated_weight_filtration(*L, X);

  // Vertex label vectors from the flattened chain.
  int depth = std::max(it.depth, 1);
  std::vector<std::vector<Rat>> vertex_label(g.n(), std::vector<Rat>(depth, Rat(0)));
  uint64_t prev = L->mask_of(it.chain.front());
  for (size_t j = 1; j < it.chain.size(); ++j) {
    uint64_t cur = L->mask_of(it.chain[j]);
    uint64_t diff = cur & ~prev;
    for (int v = 0; v < g.n(); ++v)
      if (diff >> v & 1) vertex_label[v] = it.labels[j - 1];
    prev = cur;
  }

  IterFiltration out;
  for (int lvl = 0; lvl < it.depth; ++lvl) {
    LevelFiltration lf;
    for (int i = 0; i < q.alg.n_blocks(); ++i) lf.diag.push_back({vertex_label[i][lvl]});
    out.levels.push_back(std::move(lf));
  }
  return out;
}

// --- gauge fixing (declared in staralg.hpp; needs the metric flow) ---------

GaugeFixResult gauge_fix(const Quadruple& q, const BlockDiag& r, double tol) {
  GaugeFixResult out;
  out.gauged = q;
  out.g = b_identity(q.alg);

  double phi_scale = std::max(1e-12, m_norm(q.phi));
  auto check_degrees = [&](const ModElem& phi) {
    auto comps = degree_components(q.alg, q.mod, phi, r);
    ModElem phi0 = m_zero(q.alg, q.mod), low = m_zero(q.alg, q.mod);
    for (const auto& [deg, c] : comps) {
      if (deg > 1e-9 || (deg > -1 + 1e-9 && deg < -1e-9)) {
        if (m_norm(c) > tol * phi_scale)
          throw bad_input("phi has components in forbidden degrees for this filtration");
      } else if (std::abs(deg) <= 1e-9) {
        phi0 = c;
      } else if (std::abs(deg + 1) <= 1e-9) {
        low = c;
      }
    }
    return std::pair{phi0, low};
  };

  auto [phi0, low0] = check_degrees(out.gauged.phi);

  // (b) flow the degree-0 part to its King metric and absorb it.
  Quadruple q0 = q;
  q0.phi = phi0;
  auto king = solve_king_metric(q0);
  if (!king) throw not_semistable("degree-0 part does not flow to a fixed point");
  BlockDiag g1 = b_sqrt_psd(*king);
  BlockDiag g1_inv = b_inverse(g1);
  out.gauged.phi = m_conjugate(q.alg, q.mod, g1, g1_inv, out.gauged.phi);
  out.g = g1;

  // (c) harmonic representatives in degrees <= -1, highest first.
  auto [p0, pl] = check_degrees(out.gauged.phi);
  GreenOperator green = green_operator(q.alg, q.mod, p0);
  for (int pass = 0; pass < 3; ++pass) {
    auto comps = degree_components(q.alg, q.mod, out.gauged.phi, r);
    bool changed = false;
    for (const auto& [deg, c] : comps) {
      if (deg > -1 + 1e-9) continue;
      BlockDiag defect = commutator_phistar_m(q.alg, q.mod, p0, c);
      if (b_norm(q.alg, defect) <= tol * 1e-2 * phi_scale) continue;
      BlockDiag eps = green.apply_g(q.alg, defect);
      BlockDiag gc = b_add(b_identity(q.alg), eps);
      BlockDiag gc_inv = b_inverse(gc);
      out.gauged.phi = m_conjugate(q.alg, q.mod, gc, gc_inv, out.gauged.phi);
      out.g = b_mul(gc, out.g);
      changed = true;
    }
    if (!changed) break;
  }

  // A-posteriori residuals of the three gauge equations.
  auto comps = degree_components(q.alg, q.mod, out.gauged.phi, r);
  out.phi0 = m_zero(q.alg, q.mod);
  out.phi_low = m_zero(q.alg, q.mod);
  double res = 0;
  for (const auto& [deg, c] : comps) {
    if (std::abs(deg) <= 1e-9)
      out.phi0 = c;
    else if (std::abs(deg + 1) <= 1e-9)
      out.phi_low = c;
    else if (deg > -1 + 1e-9)
      res = std::max(res, m_norm(c));
  }
  BlockDiag mb = moment_bracket(q.alg, q.mod, out.phi0);
  res = std::max(res, b_norm(q.alg, b_sub(mb, q.rho)));
  for (const auto& [deg, c] : comps)
    if (deg <= -1 + 1e-9)
      res = std::max(res, b_norm(q.alg, commutator_phistar_m(q.alg, q.mod, out.phi0, c)));
  out.residual = res;
  return out;
}

// --- asymptotic form -------------------------------------------------------

AsymptoticForm build_asymptotic_solution(const Quadruple& q, const IterFiltration* supplied,
                                         int depth_cap) {
  IterFiltration filt = supplied ? *supplied : thin_iterated_filtration(q);
  if (int(filt.levels.size()) > depth_cap)
    throw depth_exceeded("filtration depth exceeds the recursion cap");

  AsymptoticForm form;
  form.alg = q.alg;
  form.mod = q.mod;
  form.rho = q.rho;

  Quadruple cur = q;
  size_t level = 0;
  while (true) {
    auto king = solve_king_metric(cur);
    if (king) {
      form.x_base = b_sqrt_psd(*king);
      break;
    }
    if (level >= filt.levels.size())
      throw not_semistable("no fixed point and the filtration has no further levels");
    BlockDiag r = filt.levels[level].r(q.alg);
    GaugeFixResult gf = gauge_fix(cur, r);
    GreenOperator green = green_operator(q.alg, q.mod, gf.phi0);
    ReduceResult red = reduce(gf.gauged, r);
    form.levels.push_back({r, gf.gauged.phi, red.reduced.phi, std::move(green), cur.sub,
                           gf.residual});
    cur = red.reduced;
    ++level;
  }

  // Terms: coordinates grouped by their joint label vector across the used levels.
  size_t used = form.levels.size();
  std::map<std::vector<Rat>, std::vector<std::pair<int, int>>> groups;  // label -> (block, coord)
  for (int i = 0; i < q.alg.n_blocks(); ++i)
    for (int k = 0; k < q.alg.blocks[i].dim; ++k) {
      std::vector<Rat> lbl;
      for (size_t l = 0; l < used; ++l) lbl.push_back(filt.levels[l].diag[i][k]);
      if (lbl.empty()) lbl.push_back(Rat(0));
      groups[lbl].push_back({i, k});
    }
  for (const auto& [lbl, coords] : groups) {
    AsymptoticForm::Term term;
    term.exponents = lbl;
    term.projector = b_zero(q.alg);
    for (auto [i, k] : coords) term.projector[i](k, k) = 1;
    term.rank = int(coords.size());
    form.terms.push_back(std::move(term));
  }
  return form;
}

namespace {

struct DualB {
  BlockDiag v, d;
};
struct DualM {
  ModElem v, d;
};

DualB dmul(const DualB& a, const DualB& b) {
  DualB r{a.v, a.d};
  for (size_t i = 0; i < a.v.size(); ++i) {
    r.v[i] = a.v[i] * b.v[i];
    r.d[i] = a.d[i] * b.v[i] + a.v[i] * b.d[i];
  }
  return r;
}

DualB dinv(const DualB& a) {
  DualB r = a;
  for (size_t i = 0; i < a.v.size(); ++i) {
    r.v[i] = a.v[i].inverse();
    r.d[i] = -r.v[i] * a.d[i] * r.v[i];
  }
  return r;
}

// y phi y^{-1} with derivatives.
DualM dconj(const Bimodule& mod, const DualB& y, const DualB& y_inv, const ModElem& phi) {
  DualM r;
  r.v.resize(mod.arrows.size());
  r.d.resize(mod.arrows.size());
  for (size_t k = 0; k < mod.arrows.size(); ++k) {
    int i = mod.arrows[k].src, j = mod.arrows[k].dst;
    r.v[k] = y.v[j] * phi[k] * y_inv.v[i];
    r.d[k] = y.d[j] * phi[k] * y_inv.v[i] + y.v[j] * phi[k] * y_inv.d[i];
  }
  return r;
}

DualB dbracket(const StarAlgebra& alg, const Bimodule& mod, const DualM& psi) {
  auto at = [&](const ModElem& x, const ModElem& y) {
    return b_sub(pair_mstar_n(alg, mod, x, y), pair_m_nstar(alg, mod, y, x));
  };
  DualB r;
  r.v = at(psi.v, psi.v);
  r.d = b_add(at(psi.d, psi.v), at(psi.v, psi.d));
  return r;
}

}  // namespace

std::pair<BlockDiag, BlockDiag> AsymptoticForm::eval_x(double t) const {
  std::function<DualB(size_t, double)> rec = [&](size_t level, double tt) -> DualB {
    if (level == levels.size()) {
      BlockDiag zero = b_zero(alg);
      return {x_base, zero};
    }
    const Level& lv = levels[level];
    if (std::log(tt) <= 0) throw insufficient_range("iterated logarithm not defined here");
    DualB xs = rec(level + 1, std::log(tt));
    for (auto& m : xs.d) m /= tt;  // d/dt of x(log t)

    // t^{r/2} with derivative (r/2t) t^{r/2}.
    DualB pw;
    pw.v.resize(alg.n_blocks());
    pw.d.resize(alg.n_blocks());
    for (int i = 0; i < alg.n_blocks(); ++i) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(lv.r[i]);
      Eigen::VectorXd lam = es.eigenvalues();
      Eigen::VectorXcd p(lam.size()), pd(lam.size());
      for (int k = 0; k < lam.size(); ++k) {
        p[k] = std::pow(tt, lam[k] / 2);
        pd[k] = (lam[k] / 2) * std::pow(tt, lam[k] / 2 - 1);
      }
      pw.v[i] = es.eigenvectors() * p.asDiagonal() * es.eigenvectors().adjoint();
      pw.d[i] = es.eigenvectors() * pd.asDiagonal() * es.eigenvectors().adjoint();
    }

    DualB y = dmul(pw, xs);
    DualB y_inv = dinv(y);
    DualM psi = dconj(mod, y, y_inv, lv.phi_low);
    DualB k = dbracket(alg, mod, psi);
    DualB w = dmul(dmul(y_inv, k), y);
    DualB c;
    c.v = lv.green.apply_g(alg, b_scale(w.v, 0.5));
    c.d = lv.green.apply_g(alg, b_scale(w.d, 0.5));
    DualB one_c = c;
    for (size_t i = 0; i < c.v.size(); ++i)
      one_c.v[i] = c.v[i] + Eigen::MatrixXcd::Identity(c.v[i].rows(), c.v[i].cols());
    return dmul(y, one_c);
  };
  DualB x = rec(0, t);
  return {x.v, x.d};
}

BlockDiag AsymptoticForm::eval_h(double t) const {
  auto [x, xd] = eval_x(t);
  BlockDiag h = x;
  for (size_t i = 0; i < h.size(); ++i) h[i] = x[i].adjoint() * x[i];
  return h;
}

ResidualProfile residual_l1(const AsymptoticForm& form, double t0, double t1, int samples) {
  ResidualProfile out;
  const ModElem& phi = form.levels.empty() ? ModElem{} : form.levels.front().phi_full;
  for (int i = 0; i <= samples; ++i) {
    double t = t0 * std::pow(t1 / t0, double(i) / samples);
    auto [x, xd] = form.eval_x(t);
    BlockDiag x_inv = b_inverse(x);
    BlockDiag a = b_mul(xd, x_inv);
    BlockDiag s = b_add(a, b_adjoint(a));
    if (!form.levels.empty()) {
      ModElem psi = m_conjugate(form.alg, form.mod, x, x_inv, phi);
      s = b_sub(s, moment_bracket(form.alg, form.mod, psi));
    }
    s = b_add(s, form.rho);
    out.t.push_back(t);
    out.norm.push_back(b_norm(form.alg, s));
  }

  double mx = *std::max_element(out.norm.begin(), out.norm.end());
  if (mx < 1e-13) {
    out.identically_zero = true;
    out.decay_exponent = -std::numeric_limits<double>::infinity();
    out.tail_integrable = true;
    return out;
  }
  // log||s|| ~ p log t + const; extended fit adds a log log t column.
  int n = int(out.t.size());
  Eigen::MatrixXd A(n, 2), A3(n, 3);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    double lt = std::log(out.t[i]);
    A(i, 0) = lt;
    A(i, 1) = 1;
    A3(i, 0) = lt;
    A3(i, 1) = std::log(lt);
    A3(i, 2) = 1;
    y[i] = std::log(std::max(out.norm[i], 1e-300));
  }
  Eigen::VectorXd sol = A.colPivHouseholderQr().solve(y);
  out.decay_exponent = sol[0];
  Eigen::VectorXd sol3 = A3.colPivHouseholderQr().solve(y);
  out.loglog_coeff = sol3[1];
  out.tail_integrable = out.decay_exponent < -1.0;
  return out;
}

FitResult fit_exponents(const Trajectory& traj, int depth_max, double window_decades,
                        uint64_t seed, int bootstrap) {
  if (traj.samples.empty()) throw bad_input("empty trajectory");
  double t_max = traj.samples.back().t;
  double t_lo = t_max / std::pow(10.0, window_decades);
  std::vector<int> rows;
  for (size_t i = 0; i < traj.samples.size(); ++i)
    if (traj.samples[i].t >= t_lo) rows.push_back(int(i));
  if (rows.size() < size_t(depth_max + 3))
    throw insufficient_range("too few samples in the fit window");

  // Basis {log t, loglog t, ..., log^(depth) t, 1} must be defined on the window.
  auto iter_log = [](double t, int k) {
    for (int i = 0; i < k; ++i) {
      t = std::log(t);
      if (t <= 0) throw insufficient_range("t_max too small for the requested depth");
    }
    return t;
  };
  int nb = depth_max + 1;
  Eigen::MatrixXd A(rows.size(), nb);
  for (size_t ri = 0; ri < rows.size(); ++ri) {
    double t = traj.samples[rows[ri]].t;
    for (int k = 0; k < depth_max; ++k) A(ri, k) = iter_log(t, k + 1);
    A(ri, nb - 1) = 1;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> asvd(A);
  double cond = asvd.singularValues()(0) /
                std::max(1e-300, double(asvd.singularValues()(asvd.singularValues().size() - 1)));

  std::mt19937_64 rng(seed);
  FitResult out;
  int n_blocks = int(traj.samples[0].eigs.size());
  for (int b = 0; b < n_blocks; ++b) {
    int branches = int(traj.samples[0].eigs[b].size());
    std::vector<BranchFit> fits;
    for (int br = 0; br < branches; ++br) {
      Eigen::VectorXd y(rows.size());
      for (size_t ri = 0; ri < rows.size(); ++ri)
        y[ri] = std::log(std::max(traj.samples[rows[ri]].eigs[b][br], 1e-300));
      Eigen::VectorXd sol = A.colPivHouseholderQr().solve(y);
      BranchFit bf;
      bf.coeffs.assign(sol.data(), sol.data() + nb);
      bf.condition = cond;
      // Bootstrap by resampling rows.
      Eigen::MatrixXd coef(bootstrap, nb);
      for (int s = 0; s < bootstrap; ++s) {
        Eigen::MatrixXd Ab(rows.size(), nb);
        Eigen::VectorXd yb(rows.size());
        for (size_t ri = 0; ri < rows.size(); ++ri) {
          size_t pick = rng() % rows.size();
          Ab.row(ri) = A.row(pick);
          yb[ri] = y[pick];
        }
        Eigen::VectorXd sb = Ab.colPivHouseholderQr().solve(yb);
        coef.row(s) = sb.transpose();
      }
      bf.stderr_boot.resize(nb);
      for (int k = 0; k < nb; ++k) {
        double mean = coef.col(k).mean();
        bf.stderr_boot[k] = std::sqrt((coef.col(k).array() - mean).square().mean());
      }
      fits.push_back(std::move(bf));
    }
    out.by_block.push_back(std::move(fits));
  }
  return out;
}

}  // namespace latflow
