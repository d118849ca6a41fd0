#pragma once

// Problem files and set serialization (JSON). Unknown keys are rejected so that
// typos surface as errors instead of silently ignored data.

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "margsub/model.hpp"

namespace margsub {

using json = nlohmann::ordered_json;

namespace detail {

inline void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ParseError(where + "." + it.key() + ": unknown key");
}

inline const json& require_key(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ParseError(where + "." + key + ": missing");
  return j.at(key);
}

inline double read_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + ": expected a number");
  return j.get<double>();
}

inline Vector read_vector(const json& j, const std::string& where, Eigen::Index expected = -1) {
  if (!j.is_array()) throw ParseError(where + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = read_number(j[i], where + "[" + std::to_string(i) + "]");
  if (expected >= 0 && v.size() != expected)
    throw ValidationError(where + ": expected length " + std::to_string(expected) + ", got " + std::to_string(v.size()));
  return v;
}

inline Matrix read_matrix(const json& j, const std::string& where, Eigen::Index cols) {
  if (!j.is_array()) throw ParseError(where + ": expected an array of rows");
  Matrix M(static_cast<Eigen::Index>(j.size()), cols);
  for (size_t i = 0; i < j.size(); ++i)
    M.row(static_cast<Eigen::Index>(i)) = read_vector(j[i], where + "[" + std::to_string(i) + "]", cols).transpose();
  return M;
}

inline std::vector<Vector> read_vector_list(const json& j, const std::string& where, Eigen::Index dim) {
  if (!j.is_array()) throw ParseError(where + ": expected an array of vectors");
  std::vector<Vector> out;
  for (size_t i = 0; i < j.size(); ++i) out.push_back(read_vector(j[i], where + "[" + std::to_string(i) + "]", dim));
  return out;
}

inline json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline json matrix_json(const Matrix& M) {
  json a = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) a.push_back(vector_json(M.row(i).transpose()));
  return a;
}

} // namespace detail

inline json set_to_json(const GeneratedConvexSet& S) {
  json j;
  j["vertices"] = json::array();
  for (const auto& v : S.vertices) j["vertices"].push_back(detail::vector_json(v));
  j["rays"] = json::array();
  for (const auto& r : S.rays) j["rays"].push_back(detail::vector_json(r));
  return j;
}

/// Reads {"vertices": [...], "rays": [...]} ("rays" optional).
inline GeneratedConvexSet set_from_json(const json& j, Eigen::Index dim, const std::string& where = "set") {
  detail::reject_unknown_keys(j, {"vertices", "rays"}, where);
  auto verts = detail::read_vector_list(detail::require_key(j, "vertices", where), where + ".vertices", dim);
  std::vector<Vector> rays;
  if (j.contains("rays")) rays = detail::read_vector_list(j.at("rays"), where + ".rays", dim);
  for (size_t i = 0; i < rays.size(); ++i)
    if (rays[i].norm() == 0.0) throw ValidationError(where + ".rays[" + std::to_string(i) + "]: ray must be nonzero");
  if (verts.empty() && !rays.empty()) throw ValidationError(where + ".vertices: empty set cannot carry rays");
  return GeneratedConvexSet(dim, std::move(verts), std::move(rays));
}

inline json polyhedron_to_json(const HPolyhedron& P) {
  json j;
  j["A"] = detail::matrix_json(P.A);
  j["b"] = detail::vector_json(P.b);
  if (P.E.rows() > 0) {
    j["E"] = detail::matrix_json(P.E);
    j["e"] = detail::vector_json(P.e);
  }
  return j;
}

inline HPolyhedron polyhedron_from_json(const json& j, Eigen::Index dim, const std::string& where) {
  detail::reject_unknown_keys(j, {"A", "b", "E", "e"}, where);
  Matrix A = detail::read_matrix(detail::require_key(j, "A", where), where + ".A", dim);
  Vector b = detail::read_vector(detail::require_key(j, "b", where), where + ".b", A.rows());
  Matrix E(0, dim);
  Vector e(0);
  if (j.contains("E") || j.contains("e")) {
    E = detail::read_matrix(detail::require_key(j, "E", where), where + ".E", dim);
    e = detail::read_vector(detail::require_key(j, "e", where), where + ".e", E.rows());
  }
  return HPolyhedron(std::move(A), std::move(b), std::move(E), std::move(e));
}

inline SmoothComponent component_from_json(const json& j, Eigen::Index n, Eigen::Index m, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  const json& kind = detail::require_key(j, "kind", where);
  if (!kind.is_string()) throw ParseError(where + ".kind: expected a string");
  std::string id;
  if (j.contains("id")) {
    if (!j.at("id").is_string()) throw ParseError(where + ".id: expected a string");
    id = j.at("id").get<std::string>();
  }
  const std::string k = kind.get<std::string>();
  if (k == "affine") {
    detail::reject_unknown_keys(j, {"kind", "id", "a", "b", "c"}, where);
    Vector a = detail::read_vector(detail::require_key(j, "a", where), where + ".a", n);
    Vector b = detail::read_vector(detail::require_key(j, "b", where), where + ".b", m);
    const double c = j.contains("c") ? detail::read_number(j.at("c"), where + ".c") : 0.0;
    return SmoothComponent::affine(std::move(a), std::move(b), c, id);
  }
  if (k == "quadratic") {
    detail::reject_unknown_keys(j, {"kind", "id", "Q", "q", "c"}, where);
    Matrix Q = detail::read_matrix(detail::require_key(j, "Q", where), where + ".Q", n + m);
    if (Q.rows() != n + m) throw ValidationError(where + ".Q: expected " + std::to_string(n + m) + " rows");
    if ((Q - Q.transpose()).lpNorm<Eigen::Infinity>() > 1e-12) throw ValidationError(where + ".Q: must be symmetric");
    Vector q = detail::read_vector(detail::require_key(j, "q", where), where + ".q", n + m);
    const double c = j.contains("c") ? detail::read_number(j.at("c"), where + ".c") : 0.0;
    return SmoothComponent::quadratic(std::move(Q), std::move(q), c, n, id);
  }
  if (k == "blackbox") throw ValidationError(where + ".kind: blackbox components cannot be loaded from files");
  throw ParseError(where + ".kind: unknown component kind '" + k + "'");
}

inline SetValuedMapRep map_from_json(const json& j, Eigen::Index n, Eigen::Index m) {
  const std::string where = "map";
  if (!j.is_object()) throw ParseError("map: expected an object");
  const json& type = detail::require_key(j, "type", where);
  if (!type.is_string()) throw ParseError("map.type: expected a string");
  const std::string t = type.get<std::string>();
  if (t == "whole_space") {
    detail::reject_unknown_keys(j, {"type"}, where);
    return WholeSpace{};
  }
  if (t == "constant") {
    detail::reject_unknown_keys(j, {"type", "vertices", "rays"}, where);
    json inner;
    inner["vertices"] = detail::require_key(j, "vertices", where);
    if (j.contains("rays")) inner["rays"] = j.at("rays");
    auto set = set_from_json(inner, m, where);
    if (set.is_empty()) throw ValidationError("map.vertices: constant set must be nonempty");
    return ConstantSet{std::move(set)};
  }
  if (t == "graph_union") {
    detail::reject_unknown_keys(j, {"type", "pieces"}, where);
    const json& pieces = detail::require_key(j, "pieces", where);
    if (!pieces.is_array()) throw ParseError("map.pieces: expected an array");
    PolyhedralUnionGraph g;
    for (size_t i = 0; i < pieces.size(); ++i)
      g.pieces.push_back(polyhedron_from_json(pieces[i], n + m, "map.pieces[" + std::to_string(i) + "]"));
    return g;
  }
  throw ParseError("map.type: unknown map type '" + t + "'");
}

/// Builds and validates a problem from parsed JSON.
inline MarginalProblem parse_problem(const json& j) {
  detail::reject_unknown_keys(j, {"n", "m", "objective", "map", "lipschitz_y", "penalty_excess"}, "problem");
  const json& jn = detail::require_key(j, "n", "problem");
  const json& jm = detail::require_key(j, "m", "problem");
  if (!jn.is_number_integer() || jn.get<long>() < 1) throw ValidationError("n: expected an integer >= 1");
  if (!jm.is_number_integer() || jm.get<long>() < 1) throw ValidationError("m: expected an integer >= 1");
  MarginalProblem p;
  p.n = jn.get<long>();
  p.m = jm.get<long>();
  const json& obj = detail::require_key(j, "objective", "problem");
  if (!obj.is_array()) throw ParseError("objective: expected an array of component records");
  if (obj.empty()) throw ValidationError("objective: at least one component is required (s >= 1)");
  std::vector<SmoothComponent> comps;
  for (size_t i = 0; i < obj.size(); ++i)
    comps.push_back(component_from_json(obj[i], p.n, p.m, "objective[" + std::to_string(i) + "]"));
  p.objective = MaxSmoothObjective(std::move(comps));
  p.map = map_from_json(detail::require_key(j, "map", "problem"), p.n, p.m);
  p.lipschitz_y = detail::read_number(detail::require_key(j, "lipschitz_y", "problem"), "lipschitz_y");
  p.penalty_excess = detail::read_number(detail::require_key(j, "penalty_excess", "problem"), "penalty_excess");
  p.validate();
  return p;
}

inline MarginalProblem parse_problem_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("problem: malformed JSON: ") + e.what());
  }
  return parse_problem(j);
}

inline MarginalProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open problem file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_problem_text(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

inline json problem_to_json(const MarginalProblem& p) {
  json j;
  j["n"] = p.n;
  j["m"] = p.m;
  j["objective"] = json::array();
  for (const auto& c : p.objective.components()) {
    json r;
    switch (c.kind()) {
    case SmoothComponent::Kind::affine:
      r["kind"] = "affine";
      if (!c.id().empty()) r["id"] = c.id();
      r["a"] = detail::vector_json(c.linear().head(p.n));
      r["b"] = detail::vector_json(c.linear().tail(p.m));
      r["c"] = c.constant();
      break;
    case SmoothComponent::Kind::quadratic:
      r["kind"] = "quadratic";
      if (!c.id().empty()) r["id"] = c.id();
      r["Q"] = detail::matrix_json(c.hessian());
      r["q"] = detail::vector_json(c.linear());
      r["c"] = c.constant();
      break;
    default: throw ValidationError("problem_to_json: blackbox components cannot be serialized");
    }
    j["objective"].push_back(r);
  }
  json mj;
  mj["type"] = map_type_name(p.map);
  if (const auto* c = std::get_if<ConstantSet>(&p.map)) {
    const json s = set_to_json(c->set);
    mj["vertices"] = s["vertices"];
    mj["rays"] = s["rays"];
  } else if (const auto* g = std::get_if<PolyhedralUnionGraph>(&p.map)) {
    mj["pieces"] = json::array();
    for (const auto& Q : g->pieces) mj["pieces"].push_back(polyhedron_to_json(Q));
  }
  j["map"] = mj;
  j["lipschitz_y"] = p.lipschitz_y;
  j["penalty_excess"] = p.penalty_excess;
  return j;
}

} // namespace margsub
