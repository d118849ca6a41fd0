#pragma once

#include <string>
#include <vector>

#include "margsub/clarke.hpp"
#include "margsub/marginal.hpp"

namespace margsub {

struct MultiplierPolytope {
  std::vector<size_t> active;
  Matrix grad_y;                ///< m x |I|, columns are grad_y f_i for active i
  std::vector<Vector> vertices; ///< in R^|I|
};

/// {mu >= 0, sum mu = 1, sum mu_i grad_y f_i = 0} and its vertices.
inline MultiplierPolytope multiplier_polytope(const MaxSmoothObjective& obj, const Vector& xbar, const Vector& ybar,
                                              double tol_active = kDefaultTolActive) {
  MultiplierPolytope out;
  out.active = active_indices(obj, xbar, ybar, tol_active).indices;
  const Eigen::Index k = static_cast<Eigen::Index>(out.active.size());
  if (k > 12) throw ScaleLimitError("multiplier_polytope: more than 12 active components");
  const Eigen::Index m = obj.m();
  out.grad_y.resize(m, k);
  for (Eigen::Index j = 0; j < k; ++j)
    out.grad_y.col(j) = obj.components()[out.active[j]].gradient(xbar, ybar).tail(m);
  Matrix M(m + 1, k);
  M.row(0).setOnes();
  M.bottomRows(m) = out.grad_y;
  Vector c = Vector::Zero(m + 1);
  c(0) = 1.0;
  out.vertices = standard_form_vertices(M, c);
  return out;
}

enum class EstimateForm { unconstrained, coderivative, supplied };

inline const char* to_string(EstimateForm f) {
  switch (f) {
  case EstimateForm::unconstrained: return "unconstrained";
  case EstimateForm::coderivative: return "coderivative";
  default: return "supplied";
  }
}

enum class EstimateStatus { ok, empty };

struct Provenance {
  Vector ybar;
  GeneratedConvexSet contribution;
};

struct EstimateSet {
  EstimateForm form = EstimateForm::unconstrained;
  EstimateStatus status = EstimateStatus::ok;
  GeneratedConvexSet value;
  SupportOracle oracle;
  std::vector<Provenance> provenance;
  std::vector<Vector> unbounded_directions; ///< filled by verification sweeps

  bool empty() const { return status == EstimateStatus::empty; }
};

namespace detail {

/// Support of { sum lambda_i g_ix : lambda in simplex, sum lambda_i g_iy = 0 } at u.
inline Extended multiplier_support_lp(const std::vector<Vector>& grads, Eigen::Index n, const Vector& u) {
  const Eigen::Index k = static_cast<Eigen::Index>(grads.size());
  const Eigen::Index m = grads.front().size() - n;
  HPolyhedron P(k);
  for (Eigen::Index j = 0; j < k; ++j) P.add_inequality(-Vector::Unit(k, j), 0.0);
  P.add_equality(Vector::Ones(k), 1.0);
  for (Eigen::Index i = 0; i < m; ++i) {
    Vector row(k);
    for (Eigen::Index j = 0; j < k; ++j) row(j) = grads[j](n + i);
    P.add_equality(row, 0.0);
  }
  Vector obj(k);
  for (Eigen::Index j = 0; j < k; ++j) obj(j) = grads[j].head(n).dot(u);
  auto r = lp_solve(obj, P, Sense::maximize);
  if (r.status == LpStatus::infeasible) return Extended::minus_infinity();
  if (r.status == LpStatus::unbounded) return Extended::plus_infinity();
  return Extended::finite(r.value);
}

/// Support of { x* + d : (x*, y*) in conv(grads), (d, -y*) in N } at u, where N
/// is the polar of the tangent generators.
inline Extended coderivative_support_lp(const std::vector<Vector>& grads, const std::vector<Vector>& tangent,
                                        Eigen::Index n, const Vector& u) {
  const Eigen::Index k = static_cast<Eigen::Index>(grads.size());
  const Eigen::Index m = grads.front().size() - n;
  // Variables (lambda in R^k, d in R^n).
  HPolyhedron P(k + n);
  for (Eigen::Index j = 0; j < k; ++j) P.add_inequality(-Vector::Unit(k + n, j), 0.0);
  Vector sum = Vector::Zero(k + n);
  sum.head(k).setOnes();
  P.add_equality(sum, 1.0);
  for (const auto& t : tangent) {
    Vector row(k + n);
    for (Eigen::Index j = 0; j < k; ++j) row(j) = -grads[j].tail(m).dot(t.tail(m));
    row.tail(n) = t.head(n);
    P.add_inequality(row, 0.0);
  }
  Vector obj(k + n);
  for (Eigen::Index j = 0; j < k; ++j) obj(j) = grads[j].head(n).dot(u);
  obj.tail(n) = u;
  auto r = lp_solve(obj, P, Sense::maximize);
  if (r.status == LpStatus::infeasible) return Extended::minus_infinity();
  if (r.status == LpStatus::unbounded) return Extended::plus_infinity();
  return Extended::finite(r.value);
}

inline std::vector<Vector> grid_directions_2n(Eigen::Index n) {
  std::vector<Vector> out;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.push_back(Vector::Unit(n, i));
    out.push_back(-Vector::Unit(n, i));
  }
  return out;
}

inline bool support_close(const Extended& a, const Extended& b, double tol) {
  if (a.kind() != b.kind()) return false;
  if (!a.is_finite()) return true;
  return std::abs(a.value() - b.value()) <= tol * std::max(1.0, std::abs(a.value()));
}

inline EstimateSet finish_estimate(EstimateForm form, Eigen::Index n, std::vector<Provenance> prov,
                                   std::function<Extended(const Vector&)> oracle) {
  EstimateSet out;
  out.form = form;
  out.provenance = std::move(prov);
  std::vector<GeneratedConvexSet> parts;
  for (const auto& pv : out.provenance)
    if (!pv.contribution.is_empty()) parts.push_back(pv.contribution);
  if (parts.empty()) {
    out.status = EstimateStatus::empty;
    out.value = GeneratedConvexSet::empty(n);
  } else {
    out.value = hull_union(parts);
  }
  out.oracle = SupportOracle{n, std::move(oracle)};
  return out;
}

} // namespace detail

/// Multiplier form over an explicit candidate list: hull over ybar of the
/// images sum mu_i grad_x f_i at multiplier vertices. Each image set is
/// cross-checked against the zero slice of the Clarke subdifferential.
inline EstimateSet unconstrained_estimate_from(const MaxSmoothObjective& obj, const Vector& xbar,
                                               const std::vector<Vector>& candidates,
                                               double tol_active = kDefaultTolActive) {
  if (candidates.empty()) throw PreconditionError("unconstrained_estimate: empty candidate set");
  const Eigen::Index n = obj.n();
  std::vector<Provenance> prov;
  std::vector<std::vector<Vector>> grad_lists;
  for (const auto& ybar : candidates) {
    const auto mp = multiplier_polytope(obj, xbar, ybar, tol_active);
    std::vector<Vector> grads;
    for (size_t i : mp.active) grads.push_back(obj.components()[i].gradient(xbar, ybar));
    std::vector<Vector> images;
    for (const auto& mu : mp.vertices) {
      Vector img = Vector::Zero(n);
      for (size_t j = 0; j < grads.size(); ++j) img += mu(static_cast<Eigen::Index>(j)) * grads[j].head(n);
      if (!detail::near_duplicate(images, img, 1e-12)) images.push_back(img);
    }
    GeneratedConvexSet contrib(n, std::move(images));
    const auto slice = slice_at_zero(GeneratedConvexSet(n + obj.m(), grads), n);
    for (const auto& u : detail::grid_directions_2n(n)) {
      const Extended a = support(contrib, u), b = support(slice, u);
      if (!detail::support_close(a, b, 1e-9))
        throw NumericalError("unconstrained_estimate: multiplier images disagree with the gradient-hull slice (" +
                             to_string(a) + " vs " + to_string(b) + ")");
    }
    prov.push_back({ybar, std::move(contrib)});
    grad_lists.push_back(std::move(grads));
  }
  auto oracle = [grad_lists, n](const Vector& u) {
    Extended best = Extended::minus_infinity();
    for (const auto& g : grad_lists) best = max(best, detail::multiplier_support_lp(g, n, u));
    return best;
  };
  return detail::finish_estimate(EstimateForm::unconstrained, n, std::move(prov), oracle);
}

inline EstimateSet unconstrained_estimate(const MarginalProblem& p, const Vector& xbar,
                                          double tol_active = kDefaultTolActive, double tol_sol = kDefaultTolSol) {
  if (!std::holds_alternative<WholeSpace>(p.map))
    throw PreconditionError("unconstrained_estimate: map must be whole_space");
  const auto cands = solution_set(p, xbar, tol_sol);
  return unconstrained_estimate_from(p.objective, xbar, cands.points, tol_active);
}

/// Coderivative form over an explicit candidate list: hull over ybar of
/// { x* + d : (x*, y*) in the Clarke subdifferential, (d, -y*) in N_C(gph F) }.
inline EstimateSet coderivative_estimate_from(const MarginalProblem& p, const Vector& xbar,
                                              const std::vector<Vector>& candidates,
                                              double tol_active = kDefaultTolActive) {
  if (candidates.empty()) throw PreconditionError("coderivative_estimate: empty candidate set");
  const Eigen::Index n = p.n;
  const auto pieces = graph_pieces(p);
  std::vector<Provenance> prov;
  std::vector<std::pair<std::vector<Vector>, std::vector<Vector>>> data;
  for (const auto& ybar : candidates) {
    const Vector z = concat(xbar, ybar);
    const auto G = clarke_subdiff_max(p.objective, xbar, ybar, tol_active);
    const auto nc = normal_cone(pieces, z);
    GeneratedConvexSet sum(n + p.m, G.vertices, nc.cone.rays);
    prov.push_back({ybar, slice_at_zero(sum, n)});
    data.emplace_back(G.vertices, nc.tangent.all());
  }
  auto oracle = [data, n](const Vector& u) {
    Extended best = Extended::minus_infinity();
    for (const auto& [g, t] : data) best = max(best, detail::coderivative_support_lp(g, t, n, u));
    return best;
  };
  return detail::finish_estimate(EstimateForm::coderivative, n, std::move(prov), oracle);
}

inline EstimateSet coderivative_estimate(const MarginalProblem& p, const Vector& xbar,
                                         double tol_active = kDefaultTolActive, double tol_sol = kDefaultTolSol) {
  const auto cands = solution_set(p, xbar, tol_sol);
  return coderivative_estimate_from(p, xbar, cands.points, tol_active);
}

/// Wraps a user-given set (for example a deliberately shrunken one) so it can
/// be put through the same inclusion check.
inline EstimateSet supplied_estimate(const GeneratedConvexSet& S) {
  EstimateSet out;
  out.form = EstimateForm::supplied;
  out.value = S;
  out.status = S.is_empty() ? EstimateStatus::empty : EstimateStatus::ok;
  out.oracle = SupportOracle{S.dim, [S](const Vector& u) { return support(S, u); }};
  return out;
}

struct ClaimIdentities {
  Extended lhs;            ///< support of {x : (x, 0) in G} at u
  Extended rhs;            ///< min over v of max over vertices of <a_j,u> + <b_j,v>
  bool slice_nonempty = false;
  bool zero_in_y_projection = false;
  std::optional<double> gap; ///< |lhs - rhs| when both are finite
};

/// Both sides of the strong-duality identity behind the slice support, plus the
/// three conditions that must agree on emptiness.
inline ClaimIdentities claim_identities(const GeneratedConvexSet& G, const Vector& ubar) {
  if (G.is_empty() || !G.is_bounded()) throw PreconditionError("claim_identities: G must be a nonempty polytope");
  const Eigen::Index n = ubar.size();
  const Eigen::Index m = G.dim - n;
  if (m < 1) throw DimensionError("claim_identities: G must have a y-block");
  ClaimIdentities out;
  const auto slice = slice_at_zero(G, n);
  out.slice_nonempty = !slice.is_empty();
  out.lhs = support(slice, ubar);

  // min t subject to <a_j,u> + <b_j,v> <= t for every vertex; variables (v, t).
  HPolyhedron P(m + 1);
  for (const auto& g : G.vertices) {
    Vector row(m + 1);
    row.head(m) = g.tail(m);
    row(m) = -1.0;
    P.add_inequality(row, -g.head(n).dot(ubar));
  }
  auto r = lp_solve(Vector::Unit(m + 1, m), P, Sense::minimize);
  out.rhs = r.status == LpStatus::unbounded ? Extended::minus_infinity() : Extended::finite(r.value);

  // 0 in the y-projection: lambda in simplex with sum lambda_j b_j = 0.
  const Eigen::Index k = static_cast<Eigen::Index>(G.vertices.size());
  HPolyhedron Q(k);
  for (Eigen::Index j = 0; j < k; ++j) Q.add_inequality(-Vector::Unit(k, j), 0.0);
  Q.add_equality(Vector::Ones(k), 1.0);
  for (Eigen::Index i = 0; i < m; ++i) {
    Vector row(k);
    for (Eigen::Index j = 0; j < k; ++j) row(j) = G.vertices[j](n + i);
    Q.add_equality(row, 0.0);
  }
  out.zero_in_y_projection = !is_empty(Q);
  if (out.lhs.is_finite() && out.rhs.is_finite()) out.gap = std::abs(out.lhs.value() - out.rhs.value());
  return out;
}

} // namespace margsub
