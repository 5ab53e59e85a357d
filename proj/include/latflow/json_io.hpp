#pragma once

#include "latflow/dag.hpp"
#include "latflow/flow.hpp"
#include "latflow/hn.hpp"
#include "latflow/lattice.hpp"
#include "latflow/weight.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace latflow {

using Json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

uint64_t fnv1a(const std::string& data);
std::string hash_hex(const std::string& data);

/// Fixed-precision float formatting so emitted files are byte-stable.
std::string format_double(double v);

/// Throws bad_input when `j` is not an object or carries unknown keys.
void require_keys(const Json& j, std::initializer_list<const char*> allowed,
                  const std::string& where);

// ---- input schemas --------------------------------------------------------

// {"elements": ["e0", ...], "leq": [["e0","e1"], ...]}   (covers suffice)
FinLattice lattice_from_json(const Json& j);

// {"class_weights": {"0": "3/2", ...}}
XFunctional xfunctional_from_json(const Json& j, int n_classes);

// {"class_z": {"0": ["1","1"], ...}}  (re, im rationals as strings)
Polarization polarization_from_json(const Json& j, int n_classes);

// {"vertices": [{"id":"a","mass":"2"}], "edges": [{"src":"a","dst":"b","c":"1"}]}
Dag dag_from_json(const Json& j);
Json dag_to_json(const Dag& g);

// {"vertices":[{"id":"1","dim":1,"mass":"1","theta":"0"}],
//  "arrows":[{"src":"1","dst":"2","matrix":[[["0.7071","0"]]]}],
//  "filtration": [[["1/2"],["-1/2"]], ...]}          (optional, per level/block/coord)
Quadruple quadruple_from_json(const Json& j);
std::optional<IterFiltration> filtration_from_json(const Json& j, const StarAlgebra& alg);

// ---- result emission ------------------------------------------------------

Json result_header(const std::string& kind, const std::string& input_text, const Json& options);
Json grading_to_json(const Dag& g, const Grading& v, const Certificate& u,
                     const std::optional<Certificate>& strict);
Json hn_to_json(const FinLattice& L, const HNFiltration& f, const SqrtSum& m);
Json classes_to_json(const FinLattice& L);
Json rfiltration_to_json(const FinLattice& L, const RFiltration& a);
Json iterated_to_json(const FinLattice& L, const IteratedFiltration& it);
Json asymptotic_to_json(const AsymptoticForm& form);
Json fit_to_json(const FitResult& fit, const std::vector<std::string>& block_ids);

std::string trajectory_to_csv(const Quadruple& q, const Trajectory& tr,
                              const std::string& header_comment);

/// Parses a trajectory CSV produced by trajectory_to_csv (eigenvalues only).
Trajectory trajectory_from_csv(const std::string& text);

}  // namespace latflow
