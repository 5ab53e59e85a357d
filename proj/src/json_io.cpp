#include "latflow/json_io.hpp"

#include <cstdio>
#include <sstream>

namespace latflow {

uint64_t fnv1a(const std::string& data) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hash_hex(const std::string& data) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)fnv1a(data));
  return buf;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void require_keys(const Json& j, std::initializer_list<const char*> allowed,
                  const std::string& where) {
  if (!j.is_object()) throw bad_input(where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok |= (it.key() == k);
    if (!ok) throw bad_input(where + ": unknown field '" + it.key() + "'");
  }
}

FinLattice lattice_from_json(const Json& j) {
  require_keys(j, {"elements", "leq"}, "lattice");
  if (!j.contains("elements") || !j.contains("leq")) throw bad_input("lattice: missing fields");
  std::vector<std::string> names = j["elements"].get<std::vector<std::string>>();
  std::map<std::string, int> index;
  for (size_t i = 0; i < names.size(); ++i) {
    if (index.count(names[i])) throw bad_input("lattice: duplicate element '" + names[i] + "'");
    index[names[i]] = int(i);
  }
  std::vector<std::pair<Elem, Elem>> pairs;
  for (const auto& p : j["leq"]) {
    if (!p.is_array() || p.size() != 2) throw bad_input("lattice: leq entries are pairs");
    auto a = index.find(p[0].get<std::string>()), b = index.find(p[1].get<std::string>());
    if (a == index.end() || b == index.end()) throw bad_input("lattice: leq names unknown");
    pairs.push_back({a->second, b->second});
  }
  return FinLattice::from_leq_pairs(std::move(names), pairs);
}

XFunctional xfunctional_from_json(const Json& j, int n_classes) {
  require_keys(j, {"class_weights"}, "x functional");
  XFunctional x;
  x.class_value.assign(n_classes, Rat(0));
  for (auto it = j.at("class_weights").begin(); it != j.at("class_weights").end(); ++it) {
    int c = std::stoi(it.key());
    if (c < 0 || c >= n_classes) throw bad_input("x functional: class id out of range");
    x.class_value[c] = parse_rational(it.value().get<std::string>());
  }
  for (const Rat& v : x.class_value)
    if (v <= 0) throw bad_input("x functional: every class needs a positive weight");
  return x;
}

Polarization polarization_from_json(const Json& j, int n_classes) {
  require_keys(j, {"class_z", "direction"}, "polarization");
  Polarization z;
  z.class_z.assign(n_classes, GaussRat());
  std::vector<char> seen(n_classes, 0);
  for (auto it = j.at("class_z").begin(); it != j.at("class_z").end(); ++it) {
    int c = std::stoi(it.key());
    if (c < 0 || c >= n_classes) throw bad_input("polarization: class id out of range");
    const auto& pair = it.value();
    if (!pair.is_array() || pair.size() != 2) throw bad_input("polarization: values are [re, im]");
    z.class_z[c] = GaussRat(parse_rational(pair[0].get<std::string>()),
                            parse_rational(pair[1].get<std::string>()));
    seen[c] = 1;
  }
  for (int c = 0; c < n_classes; ++c)
    if (!seen[c]) throw bad_input("polarization: class " + std::to_string(c) + " missing");
  if (j.contains("direction")) {
    const auto& d = j["direction"];
    z.direction = GaussRat(parse_rational(d.at(0).get<std::string>()),
                           parse_rational(d.at(1).get<std::string>()));
    if (z.direction.is_zero()) throw bad_input("polarization: zero direction");
  }
  return z;
}

Dag dag_from_json(const Json& j) {
  require_keys(j, {"vertices", "edges"}, "dag");
  Dag g;
  std::map<std::string, int> index;
  for (const auto& v : j.at("vertices")) {
    require_keys(v, {"id", "mass"}, "dag vertex");
    Dag::Vertex vx;
    vx.id = v.at("id").get<std::string>();
    if (v.contains("mass")) vx.mass = parse_rational(v["mass"].get<std::string>());
    if (index.count(vx.id)) throw bad_input("dag: duplicate vertex '" + vx.id + "'");
    index[vx.id] = g.n();
    g.vertices.push_back(std::move(vx));
  }
  if (j.contains("edges"))
    for (const auto& e : j["edges"]) {
      require_keys(e, {"src", "dst", "c"}, "dag edge");
      Dag::Edge ed;
      auto s = index.find(e.at("src").get<std::string>());
      auto d = index.find(e.at("dst").get<std::string>());
      if (s == index.end() || d == index.end()) throw bad_input("dag: edge names unknown");
      ed.src = s->second;
      ed.dst = d->second;
      if (e.contains("c")) ed.c = parse_rational(e["c"].get<std::string>());
      g.edges.push_back(std::move(ed));
    }
  g.validate_topo_order();
  return g;
}

Json dag_to_json(const Dag& g) {
  Json out;
  out["vertices"] = Json::array();
  for (const auto& v : g.vertices)
    out["vertices"].push_back({{"id", v.id}, {"mass", rat_to_string(v.mass)}});
  out["edges"] = Json::array();
  for (const auto& e : g.edges)
    out["edges"].push_back({{"src", g.vertices[e.src].id},
                            {"dst", g.vertices[e.dst].id},
                            {"c", rat_to_string(e.c)}});
  return out;
}

Quadruple quadruple_from_json(const Json& j) {
  require_keys(j, {"vertices", "arrows", "filtration"}, "representation");
  StarAlgebra alg;
  std::map<std::string, int> index;
  for (const auto& v : j.at("vertices")) {
    require_keys(v, {"id", "dim", "mass", "theta"}, "representation vertex");
    std::string id = v.at("id").get<std::string>();
    int dim = v.contains("dim") ? v["dim"].get<int>() : 1;
    Rat mass = v.contains("mass") ? parse_rational(v["mass"].get<std::string>()) : Rat(1);
    Rat theta = v.contains("theta") ? parse_rational(v["theta"].get<std::string>()) : Rat(0);
    if (dim < 1) throw bad_input("representation: dim must be >= 1");
    if (mass <= 0) throw bad_input("representation: mass must be positive");
    if (index.count(id)) throw bad_input("representation: duplicate vertex '" + id + "'");
    index[id] = alg.n_blocks();
    alg.blocks.push_back(StarAlgebra::make_block(id, dim, mass, theta));
  }
  Bimodule mod;
  ModElem phi;
  if (j.contains("arrows"))
    for (const auto& a : j["arrows"]) {
      require_keys(a, {"src", "dst", "matrix"}, "representation arrow");
      auto s = index.find(a.at("src").get<std::string>());
      auto d = index.find(a.at("dst").get<std::string>());
      if (s == index.end() || d == index.end()) throw bad_input("representation: arrow names unknown");
      int di = alg.blocks[s->second].dim, dj = alg.blocks[d->second].dim;
      const auto& m = a.at("matrix");
      if (int(m.size()) != dj) throw bad_input("representation: matrix rows must equal dst dim");
      Eigen::MatrixXcd mat(dj, di);
      for (int r = 0; r < dj; ++r) {
        if (int(m[r].size()) != di) throw bad_input("representation: matrix cols must equal src dim");
        for (int c = 0; c < di; ++c) {
          const auto& cell = m[r][c];
          if (!cell.is_array() || cell.size() != 2)
            throw bad_input("representation: entries are [re, im] strings");
          mat(r, c) = std::complex<double>(std::stod(cell[0].get<std::string>()),
                                           std::stod(cell[1].get<std::string>()));
        }
      }
      mod.arrows.push_back({s->second, d->second});
      phi.push_back(std::move(mat));
    }
  return Quadruple::from_parts(std::move(alg), std::move(mod), std::move(phi));
}

std::optional<IterFiltration> filtration_from_json(const Json& j, const StarAlgebra& alg) {
  if (!j.contains("filtration")) return std::nullopt;
  IterFiltration f;
  for (const auto& lvl : j["filtration"]) {
    if (int(lvl.size()) != alg.n_blocks())
      throw bad_input("filtration: one label list per vertex required");
    LevelFiltration lf;
    for (int b = 0; b < alg.n_blocks(); ++b) {
      std::vector<Rat> diag;
      for (const auto& s : lvl[b]) diag.push_back(parse_rational(s.get<std::string>()));
      if (int(diag.size()) != alg.blocks[b].dim)
        throw bad_input("filtration: label count must match the block dimension");
      lf.diag.push_back(std::move(diag));
    }
    f.levels.push_back(std::move(lf));
  }
  return f;
}

Json result_header(const std::string& kind, const std::string& input_text, const Json& options) {
  Json out;
  out["kind"] = kind;
  out["version"] = kVersion;
  out["input_hash"] = hash_hex(input_text);
  out["options"] = options;
  return out;
}

Json grading_to_json(const Dag& g, const Grading& v, const Certificate& u,
                     const std::optional<Certificate>& strict) {
  Json out;
  Json vv = Json::object(), fl = Json::object();
  for (int i = 0; i < g.n(); ++i) {
    vv[g.vertices[i].id] = rat_to_string(v.v[i]);
    fl[g.vertices[i].id] = format_double(to_double(v.v[i]));
  }
  out["v"] = vv;
  out["v_float"] = fl;
  Json uu = Json::array();
  for (int e = 0; e < g.m(); ++e)
    uu.push_back({{"src", g.vertices[g.edges[e].src].id},
                  {"dst", g.vertices[g.edges[e].dst].id},
                  {"u", rat_to_string(u.u[e])}});
  out["certificate"] = uu;
  if (strict) {
    Json su = Json::array();
    for (int e = 0; e < g.m(); ++e)
      su.push_back({{"src", g.vertices[g.edges[e].src].id},
                    {"dst", g.vertices[g.edges[e].dst].id},
                    {"u", rat_to_string(strict->u[e])}});
    out["strict_certificate"] = su;
  } else {
    out["strict_certificate"] = nullptr;
  }
  return out;
}

Json classes_to_json(const FinLattice& L) {
  Json out = Json::array();
  for (const auto& c : interval_classes(L))
    out.push_back({{"id", c.class_id},
                   {"representative", {L.name(c.representative.first), L.name(c.representative.second)}},
                   {"covers", int(c.cover_indices.size())}});
  return out;
}

Json hn_to_json(const FinLattice& L, const HNFiltration& f, const SqrtSum& m) {
  Json out;
  Json chain = Json::array();
  for (Elem e : f.chain) chain.push_back(L.name(e));
  out["chain"] = chain;
  Json zs = Json::array(), ph = Json::array();
  for (const auto& z : f.step_z) zs.push_back({rat_to_string(z.re), rat_to_string(z.im)});
  for (double p : f.phases()) ph.push_back(format_double(p));
  out["step_z"] = zs;
  out["phases"] = ph;
  out["mass"] = format_double(m.to_double());
  return out;
}

Json rfiltration_to_json(const FinLattice& L, const RFiltration& a) {
  Json out;
  Json chain = Json::array(), labels = Json::array(), lf = Json::array();
  for (Elem e : a.chain) chain.push_back(L.name(e));
  for (const Rat& l : a.labels) {
    labels.push_back(rat_to_string(l));
    lf.push_back(format_double(to_double(l)));
  }
  out["chain"] = chain;
  out["labels"] = labels;
  out["labels_float"] = lf;
  return out;
}

Json iterated_to_json(const FinLattice& L, const IteratedFiltration& it) {
  Json out;
  out["depth"] = it.depth;
  Json chain = Json::array(), labels = Json::array();
  for (Elem e : it.chain) chain.push_back(L.name(e));
  for (const auto& lbl : it.labels) {
    Json v = Json::array();
    for (const Rat& x : lbl) v.push_back(rat_to_string(x));
    labels.push_back(v);
  }
  out["chain"] = chain;
  out["labels"] = labels;
  Json levels = Json::array();
  for (const auto& lv : it.levels) {
    Json l;
    l["lattice_size"] = lv.lattice_size;
    Json ll = Json::array();
    for (const Rat& x : lv.wf.labels) ll.push_back(rat_to_string(x));
    l["labels"] = ll;
    levels.push_back(l);
  }
  out["levels"] = levels;
  return out;
}

Json asymptotic_to_json(const AsymptoticForm& form) {
  Json out;
  out["depth"] = form.depth();
  Json terms = Json::array();
  for (const auto& t : form.terms) {
    Json exps = Json::array();
    for (const Rat& e : t.exponents) exps.push_back(rat_to_string(e));
    Json blocks = Json::array();
    for (int i = 0; i < form.alg.n_blocks(); ++i)
      if (t.projector[i].norm() > 0.5) blocks.push_back(form.alg.blocks[i].id);
    terms.push_back({{"exponents", exps}, {"projector_rank", t.rank}, {"blocks", blocks}});
  }
  out["terms"] = terms;
  double res = 0;
  for (const auto& lv : form.levels) res = std::max(res, lv.gauge_residual);
  out["gauge_residual"] = format_double(res);
  return out;
}

Json fit_to_json(const FitResult& fit, const std::vector<std::string>& block_ids) {
  Json out;
  Json blocks = Json::array();
  for (size_t b = 0; b < fit.by_block.size(); ++b) {
    Json branches = Json::array();
    for (const auto& br : fit.by_block[b]) {
      Json coeffs = Json::array(), err = Json::array();
      for (double c : br.coeffs) coeffs.push_back(format_double(c));
      for (double c : br.stderr_boot) err.push_back(format_double(c));
      branches.push_back({{"coeffs", coeffs}, {"stderr", err},
                          {"condition", format_double(br.condition)}});
    }
    blocks.push_back({{"id", block_ids[b]}, {"branches", branches}});
  }
  out["blocks"] = blocks;
  return out;
}

std::string trajectory_to_csv(const Quadruple& q, const Trajectory& tr,
                              const std::string& header_comment) {
  std::ostringstream os;
  os << "# " << header_comment << "\n";
  os << "t";
  for (int b = 0; b < q.alg.n_blocks(); ++b)
    for (int k = 0; k < q.alg.blocks[b].dim; ++k)
      os << ",b" << b << "e" << k;
  os << ",energy\n";
  for (const auto& s : tr.samples) {
    os << format_double(s.t);
    for (const auto& eigs : s.eigs)
      for (double e : eigs) os << "," << format_double(e);
    os << "," << format_double(s.energy) << "\n";
  }
  return os.str();
}

Trajectory trajectory_from_csv(const std::string& text) {
  Trajectory tr;
  std::istringstream is(text);
  std::string line;
  std::vector<std::pair<int, int>> columns;  // (block, eig index)
  bool header_done = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!header_done) {
      if (cells.empty() || cells[0] != "t") throw bad_input("trajectory csv: bad header");
      for (size_t c = 1; c < cells.size(); ++c) {
        if (cells[c] == "energy") continue;
        int b, k;
        if (std::sscanf(cells[c].c_str(), "b%de%d", &b, &k) != 2)
          throw bad_input("trajectory csv: bad column '" + cells[c] + "'");
        columns.push_back({b, k});
      }
      header_done = true;
      continue;
    }
    TrajectorySample s;
    s.t = std::stod(cells[0]);
    int nb = 0;
    for (const auto& [b, k] : columns) nb = std::max(nb, b + 1);
    s.eigs.assign(nb, {});
    for (size_t c = 0; c < columns.size(); ++c)
      s.eigs[columns[c].first].push_back(std::stod(cells[c + 1]));
    s.energy = cells.size() > columns.size() + 1 ? std::stod(cells.back()) : 0;
    tr.samples.push_back(std::move(s));
  }
  if (tr.samples.empty()) throw bad_input("trajectory csv: no samples");
  return tr;
}

}  // namespace latflow
