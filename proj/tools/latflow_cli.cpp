#include "latflow/json_io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace latflow;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw bad_input("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw bad_input("cannot write '" + path + "'");
  out << text;
}

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const std::exception& e) {
    throw bad_input(what + ": " + e.what());
  }
}

// Inputs for the lattice-side commands: either an explicit lattice with an
// X functional / polarization, or a DAG whose closed-subgraph lattice is used.
struct LatticeInput {
  FinLattice lat;
  std::optional<XFunctional> x;
  std::optional<Polarization> z;
};

LatticeInput lattice_input(const Json& j) {
  require_keys(j, {"lattice", "x", "polarization", "dag"}, "input");
  LatticeInput in;
  if (j.contains("dag")) {
    if (j.contains("lattice")) throw bad_input("give either 'dag' or 'lattice', not both");
    auto sub = subgraph_lattice(dag_from_json(j["dag"]));
    in.lat = std::move(sub.lat);
    in.x = std::move(sub.x);
  } else if (j.contains("lattice")) {
    in.lat = lattice_from_json(j["lattice"]);
    if (j.contains("x")) in.x = xfunctional_from_json(j["x"], in.lat.num_classes());
  } else {
    throw bad_input("input needs a 'lattice' or a 'dag'");
  }
  if (j.contains("polarization"))
    in.z = polarization_from_json(j["polarization"], in.lat.num_classes());
  return in;
}

const char* kSchemas = R"(input schemas (JSON unless noted)

dag:            {"vertices": [{"id": "a", "mass": "2"}],
                 "edges": [{"src": "a", "dst": "b", "c": "1"}]}
lattice:        {"elements": ["e0", ...], "leq": [["e0", "e1"], ...]}   (covers suffice)
x functional:   {"class_weights": {"0": "3/2", ...}}                    (per interval class)
polarization:   {"class_z": {"0": ["1", "1"], ...}, "direction": ["1","0"]}
representation: {"vertices": [{"id": "1", "dim": 1, "mass": "1", "theta": "0"}],
                 "arrows": [{"src": "1", "dst": "2", "matrix": [[["0.7071", "0"]]]}],
                 "filtration": [[["1/2"], ["-1/2"]], ...]}              (optional; per level,
                                                                         per vertex, per coordinate)
command inputs
  grade-dag:  a dag object
  hn:         {"lattice": ..., "polarization": ...}  or  {"dag": ..., "polarization": ...}
  weight:     {"lattice": ..., "x": ...}  or  {"dag": ...}   (dag supplies X from masses)
  iterate:    same as weight
  simulate:   a representation object; output is CSV (t, per-block eigenvalues, energy)
  asymptotic: a representation object
  fit:        a trajectory CSV produced by simulate
  verify:     a result JSON produced by this tool, plus --input with the original input

rationals are strings "p/q" or "n"; matrix entries are [re, im] decimal strings.
exit codes: 0 ok, 1 bad input, 2 computation failure.
)";

int dispatch(int argc, char** argv) {
  CLI::App app{"weight filtrations, Harder-Narasimhan chains, and metric-flow asymptotics"};
  app.require_subcommand(0, 1);

  bool show_schema = false;
  int threads = 1;
  app.add_flag("--schema", show_schema, "print the input/output schemas and exit");
  app.add_option("--threads", threads, "worker thread cap for parallel sections");

  std::string in_path, out_path = "-", aux_input;
  double t0 = 1.0, t_max = 1e6, rtol = 1e-9, atol = 1e-12;
  int samples = 400, depth = 1;
  uint64_t seed = 1;
  bool exact_only = false;

  auto add_io = [&](CLI::App* c, bool needs_input = true) {
    if (needs_input) c->add_option("input", in_path, "input file")->required();
    c->add_option("-o,--output", out_path, "output file (default stdout)");
    c->add_flag("--exact", exact_only, "emit only exact rational values");
  };

  auto* grade = app.add_subcommand("grade-dag", "weight grading of a DAG with KKT certificate");
  add_io(grade);
  auto* hn_cmd = app.add_subcommand("hn", "Harder-Narasimhan filtration and mass");
  add_io(hn_cmd);
  auto* weight_cmd = app.add_subcommand("weight", "weight filtration of a modular lattice");
  add_io(weight_cmd);
  auto* iter_cmd = app.add_subcommand("iterate", "iterated weight filtration");
  add_io(iter_cmd);
  auto* sim = app.add_subcommand("simulate", "integrate the metric gradient flow");
  add_io(sim);
  sim->add_option("--t0", t0, "start time (> 0)");
  sim->add_option("--t-max", t_max, "end time");
  sim->add_option("--samples", samples, "geometric sample count");
  sim->add_option("--rtol", rtol, "relative tolerance");
  sim->add_option("--atol", atol, "absolute tolerance");
  auto* asym = app.add_subcommand("asymptotic", "closed-form asymptotic solution");
  add_io(asym);
  auto* fit = app.add_subcommand("fit", "iterated-log exponent fit of a trajectory");
  add_io(fit);
  fit->add_option("--depth", depth, "number of iterated-log basis functions");
  fit->add_option("--seed", seed, "bootstrap seed");
  auto* verify = app.add_subcommand("verify", "re-verify a result file");
  add_io(verify);
  verify->add_option("--input", aux_input, "original input file")->required();

  CLI11_PARSE(app, argc, argv);

  if (show_schema) {
    std::cout << kSchemas;
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cout << app.help();
    return 0;
  }
#ifdef _OPENMP
  omp_set_num_threads(std::max(1, threads));
#endif

  Json options{{"threads", threads}, {"exact", exact_only}};
  auto strip_floats = [&](Json& j) {
    if (!exact_only) return;
    for (const char* k : {"v_float", "labels_float"})
      if (j.contains(k)) j.erase(k);
  };

  if (*grade) {
    std::string text = read_file(in_path);
    Dag g = dag_from_json(parse_json(text, "dag"));
    auto [v, u] = weight_grading(g);
    auto strict = strict_multipliers_exist(g, v);
    Json out = result_header("grading", text, options);
    out.update(grading_to_json(g, v, u, strict));
    strip_floats(out);
    write_output(out_path, out.dump(2) + "\n");
    return 0;
  }
  if (*hn_cmd) {
    std::string text = read_file(in_path);
    auto in = lattice_input(parse_json(text, "input"));
    if (!in.z) throw bad_input("hn needs a polarization");
    validate_polarization(in.lat, *in.z);
    auto f = hn_filtration(in.lat, *in.z);
    Json out = result_header("hn", text, options);
    out.update(hn_to_json(in.lat, f, mass_of_chain(f.step_z)));
    out["classes"] = classes_to_json(in.lat);
    out["semistable"] = is_semistable(in.lat, *in.z);
    out["stable"] = is_stable(in.lat, *in.z);
    write_output(out_path, out.dump(2) + "\n");
    return 0;
  }
  if (*weight_cmd || *iter_cmd) {
    std::string text = read_file(in_path);
    auto in = lattice_input(parse_json(text, "input"));
    if (!in.x) throw bad_input("weight filtrations need an x functional");
    Json out;
    if (*weight_cmd) {
      RFiltration a = weight_filtration(in.lat, *in.x);
      out = result_header("weight", text, options);
      out.update(rfiltration_to_json(in.lat, a));
    } else {
      IteratedFiltration it = iterated_weight_filtration(in.lat, *in.x);
      out = result_header("iterated", text, options);
      out.update(iterated_to_json(in.lat, it));
    }
    out["classes"] = classes_to_json(in.lat);
    strip_floats(out);
    write_output(out_path, out.dump(2) + "\n");
    return 0;
  }
  if (*sim) {
    std::string text = read_file(in_path);
    Quadruple q = quadruple_from_json(parse_json(text, "representation"));
    IntegrateOptions opts;
    opts.rtol = rtol;
    opts.atol = atol;
    opts.samples = samples;
    Trajectory tr = integrate(q, b_identity(q.alg), t0, t_max, opts);
    std::ostringstream hdr;
    hdr << "latflow " << kVersion << " simulate input=" << hash_hex(text) << " t0=" << t0
        << " t_max=" << t_max << " rtol=" << rtol << " atol=" << atol
        << " samples=" << samples;
    write_output(out_path, trajectory_to_csv(q, tr, hdr.str()));
    return 0;
  }
  if (*asym) {
    std::string text = read_file(in_path);
    Json j = parse_json(text, "representation");
    Quadruple q = quadruple_from_json(j);
    auto supplied = filtration_from_json(j, q.alg);
    AsymptoticForm form = build_asymptotic_solution(q, supplied ? &*supplied : nullptr);
    Json out = result_header("asymptotic", text, options);
    out.update(asymptotic_to_json(form));
    write_output(out_path, out.dump(2) + "\n");
    return 0;
  }
  if (*fit) {
    std::string text = read_file(in_path);
    Trajectory tr = trajectory_from_csv(text);
    FitResult fr = fit_exponents(tr, depth, 2.0, seed);
    std::vector<std::string> ids;
    for (size_t b = 0; b < tr.samples[0].eigs.size(); ++b) ids.push_back("b" + std::to_string(b));
    Json out = result_header("fit", text, options);
    out["depth"] = depth;
    out.update(fit_to_json(fr, ids));
    write_output(out_path, out.dump(2) + "\n");
    return 0;
  }
  if (*verify) {
    std::string rtext = read_file(in_path), itext = read_file(aux_input);
    Json res = parse_json(rtext, "result");
    std::string kind = res.at("kind").get<std::string>();
    bool ok = false;
    if (kind == "grading") {
      Dag g = dag_from_json(parse_json(itext, "dag"));
      Grading v;
      for (int i = 0; i < g.n(); ++i)
        v.v.push_back(parse_rational(res.at("v").at(g.vertices[i].id).get<std::string>()));
      ok = verify_grading(g, v);
    } else if (kind == "weight") {
      auto in = lattice_input(parse_json(itext, "input"));
      if (!in.x) throw bad_input("verify weight: input lacks an x functional");
      RFiltration a;
      for (const auto& nm : res.at("chain")) a.chain.push_back(in.lat.index_of(nm.get<std::string>()));
      for (const auto& s : res.at("labels")) a.labels.push_back(parse_rational(s.get<std::string>()));
      ok = verify_weight_filtration(in.lat, *in.x, a);
    } else if (kind == "hn") {
      auto in = lattice_input(parse_json(itext, "input"));
      if (!in.z) throw bad_input("verify hn: input lacks a polarization");
      auto f = hn_filtration(in.lat, *in.z);
      Json again = hn_to_json(in.lat, f, mass_of_chain(f.step_z));
      ok = again.at("chain") == res.at("chain") && again.at("step_z") == res.at("step_z");
    } else if (kind == "iterated") {
      auto in = lattice_input(parse_json(itext, "input"));
      if (!in.x) throw bad_input("verify iterated: input lacks an x functional");
      IteratedFiltration it = iterated_weight_filtration(in.lat, *in.x);
      Json again = iterated_to_json(in.lat, it);
      ok = again.at("chain") == res.at("chain") && again.at("labels") == res.at("labels") &&
           again.at("depth") == res.at("depth");
    } else if (kind == "asymptotic") {
      Json j = parse_json(itext, "representation");
      Quadruple q = quadruple_from_json(j);
      auto supplied = filtration_from_json(j, q.alg);
      AsymptoticForm form = build_asymptotic_solution(q, supplied ? &*supplied : nullptr);
      ok = asymptotic_to_json(form).at("terms") == res.at("terms");
    } else if (kind == "fit") {
      Trajectory tr = trajectory_from_csv(itext);
      FitResult fr = fit_exponents(tr, res.at("depth").get<int>(), 2.0, seed);
      std::vector<std::string> ids;
      for (size_t b = 0; b < tr.samples[0].eigs.size(); ++b) ids.push_back("b" + std::to_string(b));
      ok = fit_to_json(fr, ids).at("blocks") == res.at("blocks");
    } else {
      throw bad_input("verify: unknown result kind '" + kind + "'");
    }
    std::cout << (ok ? "verified" : "FAILED") << "\n";
    return ok ? 0 : 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const latflow::bad_input& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
