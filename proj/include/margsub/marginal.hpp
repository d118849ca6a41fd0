#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "margsub/clarke.hpp"
#include "margsub/model.hpp"

namespace margsub {

constexpr double kDefaultTolSol = 1e-7;

struct PhiOptions {
  int grid = 64;          ///< points per axis for non-affine objectives
  int refine_rounds = 2;  ///< local refinement rounds around the best grid point
  int refine_factor = 8;  ///< spacing shrink per round
  long max_grid_points = 400000;
};

struct PhiResult {
  Extended value;
  std::vector<Vector> witnesses; ///< minimizers (empty when the value is -inf)
  bool exact = true;             ///< false for the grid path
};

namespace detail {

struct Slice {
  size_t piece = 0;
  HPolyhedron set;
};

inline std::vector<Slice> nonempty_slices(const MarginalProblem& p, const Vector& x) {
  require_dim(x, p.n, "x");
  std::vector<Slice> out;
  const auto pieces = graph_pieces(p);
  for (size_t i = 0; i < pieces.size(); ++i) {
    HPolyhedron S = piece_slice(pieces[i], p.n, x);
    if (!is_empty(S)) out.push_back({i, std::move(S)});
  }
  if (out.empty()) throw DomainError("x is outside dom F (every piece slice is empty)");
  return out;
}

/// min_y max_i (a_i.x + b_i.y + c_i) over the slice, as an LP in (y, t).
inline LpResult affine_slice_lp(const MaxSmoothObjective& obj, const HPolyhedron& S, const Vector& x) {
  const Eigen::Index m = S.dim;
  HPolyhedron P(m + 1);
  for (Eigen::Index i = 0; i < S.A.rows(); ++i) {
    Vector row = Vector::Zero(m + 1);
    row.head(m) = S.A.row(i).transpose();
    P.add_inequality(row, S.b(i));
  }
  for (Eigen::Index i = 0; i < S.E.rows(); ++i) {
    Vector row = Vector::Zero(m + 1);
    row.head(m) = S.E.row(i).transpose();
    P.add_equality(row, S.e(i));
  }
  const Eigen::Index n = x.size();
  for (const auto& c : obj.components()) {
    Vector row(m + 1);
    row.head(m) = c.linear().tail(m);
    row(m) = -1.0;
    P.add_inequality(row, -c.linear().head(n).dot(x) - c.constant());
  }
  return lp_solve(Vector::Unit(m + 1, m), P, Sense::minimize);
}

/// Coordinate bounds of a slice; nullopt if unbounded.
inline std::optional<std::pair<Vector, Vector>> slice_box(const HPolyhedron& S) {
  Vector lo(S.dim), hi(S.dim);
  for (Eigen::Index i = 0; i < S.dim; ++i) {
    auto rmin = lp_solve(Vector::Unit(S.dim, i), S, Sense::minimize);
    auto rmax = lp_solve(Vector::Unit(S.dim, i), S, Sense::maximize);
    if (!rmin.optimal() || !rmax.optimal()) return std::nullopt;
    lo(i) = rmin.value;
    hi(i) = rmax.value;
  }
  return std::make_pair(lo, hi);
}

/// Calls fn on every point of the tensor grid with `per_axis` points per axis
/// spanning [lo, hi].
template <class Fn>
void for_each_grid_point(const Vector& lo, const Vector& hi, int per_axis, Fn&& fn) {
  const Eigen::Index m = lo.size();
  std::vector<int> idx(static_cast<size_t>(m), 0);
  Vector y(m);
  while (true) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const double t = per_axis > 1 ? static_cast<double>(idx[i]) / (per_axis - 1) : 0.5;
      y(i) = lo(i) + t * (hi(i) - lo(i));
    }
    fn(y);
    Eigen::Index k = 0;
    while (k < m && ++idx[k] == per_axis) idx[k++] = 0;
    if (k == m) break;
  }
}

struct GridSearch {
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, Vector>> points; ///< every feasible point evaluated
};

inline void grid_minimize_slice(const MaxSmoothObjective& obj, const HPolyhedron& S, const Vector& x,
                                const PhiOptions& opt, GridSearch& out) {
  auto box = slice_box(S);
  if (!box) throw PreconditionError("eval_phi: unbounded slice with a non-affine objective is not supported");
  const auto& [lo, hi] = *box;
  const Eigen::Index m = S.dim;
  int per_axis = opt.grid;
  while (per_axis > 2 && std::pow(static_cast<double>(per_axis), static_cast<double>(m)) > opt.max_grid_points)
    --per_axis;

  auto visit = [&](const Vector& y) {
    if (!S.contains(y, 1e-9)) return;
    const double v = obj.value(x, y);
    out.points.emplace_back(v, y);
    out.best = std::min(out.best, v);
  };
  // Vertices and edge samples cover lower-dimensional slices the grid misses.
  const auto V = to_generators(S).vertices;
  for (const auto& v : V) visit(v);
  for (size_t a = 0; a < V.size(); ++a)
    for (size_t b = a + 1; b < V.size(); ++b)
      for (int k = 1; k < opt.grid; ++k) visit(V[a] + (static_cast<double>(k) / opt.grid) * (V[b] - V[a]));
  for_each_grid_point(lo, hi, per_axis, visit);

  Vector spacing = (hi - lo) / std::max(1, per_axis - 1);
  for (int round = 0; round < opt.refine_rounds; ++round) {
    if (out.points.empty()) break;
    const Vector centre =
        std::min_element(out.points.begin(), out.points.end(), [](const auto& l, const auto& r) {
          return l.first < r.first;
        })->second;
    const Vector rlo = (centre - spacing).cwiseMax(lo);
    const Vector rhi = (centre + spacing).cwiseMin(hi);
    for_each_grid_point(rlo, rhi, 2 * opt.refine_factor + 1, visit);
    spacing /= opt.refine_factor;
  }
}

} // namespace detail

/// phi(x) = inf over F(x) of f(x, .). Exact (one LP per piece) for affine
/// objectives; grid plus local refinement on bounded slices otherwise.
inline PhiResult eval_phi(const MarginalProblem& p, const Vector& x, const PhiOptions& opt = {}) {
  const auto slices = detail::nonempty_slices(p, x);
  PhiResult out;
  if (p.objective.all_affine()) {
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, Vector>> found;
    for (const auto& s : slices) {
      auto r = detail::affine_slice_lp(p.objective, s.set, x);
      if (r.status == LpStatus::unbounded) {
        out.value = Extended::minus_infinity();
        return out;
      }
      if (!r.optimal()) continue;
      const Vector y = r.point.head(p.m);
      const double v = p.objective.value(x, y);
      found.emplace_back(v, y);
      best = std::min(best, v);
    }
    out.value = Extended::finite(best);
    for (auto& [v, y] : found)
      if (v <= best + 1e-9 * std::max(1.0, std::abs(best)) &&
          std::none_of(out.witnesses.begin(), out.witnesses.end(), [&](const Vector& w) { return (w - y).norm() <= 1e-9; }))
        out.witnesses.push_back(y);
    return out;
  }
  detail::GridSearch gs;
  for (const auto& s : slices) detail::grid_minimize_slice(p.objective, s.set, x, opt, gs);
  if (gs.points.empty()) throw NumericalError("eval_phi: grid search found no feasible point");
  out.exact = false;
  out.value = Extended::finite(gs.best);
  for (auto& [v, y] : gs.points)
    if (v == gs.best) {
      out.witnesses.push_back(y);
      break;
    }
  return out;
}

/// Scalar phi(x) for use as a sampling oracle; throws if phi(x) = -inf.
inline double phi_value(const MarginalProblem& p, const Vector& x, const PhiOptions& opt = {}) {
  const auto r = eval_phi(p, x, opt);
  if (!r.value.is_finite()) throw DomainError("phi is -inf at the requested point");
  return r.value.value();
}

struct SolutionCandidates {
  std::vector<Vector> points;
  double tol_sol = kDefaultTolSol;
  double phi = 0.0;
  bool exact = true;
};

namespace detail {

inline void push_unique(std::vector<Vector>& list, const Vector& y, double radius) {
  for (const auto& w : list)
    if ((w - y).norm() <= radius) return;
  list.push_back(y);
}

} // namespace detail

/// Near-optimal points of F(x̄): vertices of each optimal face for affine
/// data, refined grid points within tol_sol otherwise. Deduplicated at 1e-7.
inline SolutionCandidates solution_set(const MarginalProblem& p, const Vector& xbar, double tol_sol = kDefaultTolSol,
                                       const PhiOptions& opt = {}) {
  if (!(tol_sol > 0.0)) throw PreconditionError("solution_set: tol_sol must be positive");
  const auto slices = detail::nonempty_slices(p, xbar);
  SolutionCandidates out;
  out.tol_sol = tol_sol;
  constexpr double dedup = 1e-7;

  if (p.objective.all_affine()) {
    const auto phi = eval_phi(p, xbar, opt);
    if (!phi.value.is_finite()) throw DomainError("solution_set: phi is -inf, no minimizers exist");
    out.phi = phi.value.value();
    const double slack = 1e-10 * std::max(1.0, std::abs(out.phi));
    for (const auto& s : slices) {
      auto r = detail::affine_slice_lp(p.objective, s.set, xbar);
      if (!r.optimal() || r.value > out.phi + tol_sol) continue;
      HPolyhedron face = s.set;
      for (const auto& c : p.objective.components())
        face.add_inequality(c.linear().tail(p.m),
                            std::max(r.value, out.phi) + slack - c.linear().head(p.n).dot(xbar) - c.constant());
      auto verts = to_generators(face).vertices;
      if (verts.empty()) verts.push_back(r.point.head(p.m));
      for (const auto& y : verts) {
        if (!s.set.contains(y, 1e-9) || p.objective.value(xbar, y) > out.phi + tol_sol) continue;
        detail::push_unique(out.points, y, dedup);
      }
    }
    if (out.points.empty()) throw NumericalError("solution_set: no validated minimizer");
    return out;
  }

  detail::GridSearch gs;
  for (const auto& s : slices) detail::grid_minimize_slice(p.objective, s.set, xbar, opt, gs);
  if (gs.points.empty()) throw NumericalError("solution_set: grid search found no feasible point");
  out.exact = false;
  out.phi = gs.best;
  std::sort(gs.points.begin(), gs.points.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [v, y] : gs.points)
    if (v <= gs.best + tol_sol) detail::push_unique(out.points, y, dedup);
  return out;
}

enum class Norm { euclidean, max };

struct DistanceResult {
  double value = 0.0;
  Vector nearest;
};

namespace detail {

inline DistanceResult max_norm_distance(const HPolyhedron& S, const Vector& y) {
  // Variables (u, t): minimize t subject to |u_i - y_i| <= t, u in S.
  const Eigen::Index m = S.dim;
  HPolyhedron P(m + 1);
  for (Eigen::Index i = 0; i < S.A.rows(); ++i) {
    Vector row = Vector::Zero(m + 1);
    row.head(m) = S.A.row(i).transpose();
    P.add_inequality(row, S.b(i));
  }
  for (Eigen::Index i = 0; i < S.E.rows(); ++i) {
    Vector row = Vector::Zero(m + 1);
    row.head(m) = S.E.row(i).transpose();
    P.add_equality(row, S.e(i));
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    Vector up = Vector::Zero(m + 1), lo = Vector::Zero(m + 1);
    up(i) = 1.0;
    up(m) = -1.0;
    lo(i) = -1.0;
    lo(m) = -1.0;
    P.add_inequality(up, y(i));
    P.add_inequality(lo, -y(i));
  }
  auto r = lp_solve(Vector::Unit(m + 1, m), P, Sense::minimize);
  if (!r.optimal()) throw NumericalError("distance_to_F: max-norm LP failed");
  return {std::max(0.0, r.value), r.point.head(m)};
}

} // namespace detail

/// Distance from y to F(x) (union of piece slices) and a nearest point.
inline DistanceResult distance_to_F(const MarginalProblem& p, const Vector& x, const Vector& y,
                                    Norm norm = Norm::euclidean) {
  require_dim(y, p.m, "distance_to_F y");
  const auto slices = detail::nonempty_slices(p, x);
  DistanceResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (const auto& s : slices) {
    DistanceResult r;
    if (norm == Norm::euclidean) {
      r.nearest = project_point(s.set, y);
      r.value = (r.nearest - y).norm();
    } else {
      r = detail::max_norm_distance(s.set, y);
    }
    if (r.value < best.value) best = r;
  }
  return best;
}

struct PenaltyOptions {
  Norm norm = Norm::euclidean;
  std::optional<double> lprime; ///< overrides penalty_excess * lipschitz_y
  long max_points = 5000000;
};

struct PenaltyResult {
  double phi = 0.0;
  double penalized_min = 0.0;
  Vector argmin;
  double residual = 0.0;
  double bound = 0.0; ///< (L1 + L') * spacing
  double lprime = 0.0;
  double spacing = 0.0;
};

namespace detail {

/// Distance evaluator specialised per dimension: closed-form for m = 1.
inline std::function<double(const Vector&)> distance_evaluator(const MarginalProblem& p, const Vector& x, Norm norm) {
  const auto slices = nonempty_slices(p, x);
  if (p.m == 1) {
    std::vector<std::pair<double, double>> intervals;
    for (const auto& s : slices) {
      const auto rmin = lp_solve(Vector::Unit(1, 0), s.set, Sense::minimize);
      const auto rmax = lp_solve(Vector::Unit(1, 0), s.set, Sense::maximize);
      intervals.emplace_back(rmin.optimal() ? rmin.value : -std::numeric_limits<double>::infinity(),
                             rmax.optimal() ? rmax.value : std::numeric_limits<double>::infinity());
    }
    return [intervals](const Vector& y) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& [lo, hi] : intervals) best = std::min(best, std::max({0.0, lo - y(0), y(0) - hi}));
      return best;
    };
  }
  return [&p, x, norm](const Vector& y) { return distance_to_F(p, x, y, norm).value; };
}

} // namespace detail

/// Minimum of f(x,y) + lprime * dist(y, F(x)) over the grid with spacing h on
/// [lo, hi] (per axis, both endpoints included).
inline std::pair<double, Vector> penalized_grid_min(const MarginalProblem& p, const Vector& x, const Vector& lo,
                                                    const Vector& hi, double h, double lprime,
                                                    const PenaltyOptions& opt = {}) {
  require_dim(lo, p.m, "penalty box lo");
  require_dim(hi, p.m, "penalty box hi");
  if (!(h > 0.0)) throw PreconditionError("penalty: grid spacing must be positive");
  if ((hi - lo).minCoeff() < 0.0) throw PreconditionError("penalty: box lower corner exceeds upper corner");
  std::vector<int> counts(static_cast<size_t>(p.m));
  double total = 1.0;
  for (Eigen::Index i = 0; i < p.m; ++i) {
    counts[i] = static_cast<int>(std::floor((hi(i) - lo(i)) / h + 1e-9)) + 1;
    if (lo(i) + (counts[i] - 1) * h < hi(i) - 1e-12) ++counts[i];
    total *= counts[i];
  }
  if (total > static_cast<double>(opt.max_points))
    throw ScaleLimitError("penalty: grid has more than " + std::to_string(opt.max_points) + " points");
  const auto dist = detail::distance_evaluator(p, x, opt.norm);
  std::vector<int> idx(static_cast<size_t>(p.m), 0);
  Vector y(p.m);
  double best = std::numeric_limits<double>::infinity();
  Vector arg;
  while (true) {
    for (Eigen::Index i = 0; i < p.m; ++i) y(i) = std::min(hi(i), lo(i) + idx[i] * h);
    const double v = p.objective.value(x, y) + lprime * dist(y);
    if (v < best) {
      best = v;
      arg = y;
    }
    Eigen::Index k = 0;
    while (k < p.m && ++idx[k] == counts[k]) idx[k++] = 0;
    if (k == p.m) break;
  }
  return {best, arg};
}

/// |phi(x) - grid minimum of the penalized objective| with the preconditions
/// of exact penalization checked first.
inline PenaltyResult penalty_check(const MarginalProblem& p, const Vector& x, const Vector& lo, const Vector& hi,
                                   double h, const PenaltyOptions& opt = {}) {
  PenaltyResult out;
  out.lprime = opt.lprime.value_or(p.lprime());
  out.spacing = h;
  if (!(out.lprime > p.lipschitz_y))
    throw PreconditionError("penalty: L' = " + std::to_string(out.lprime) + " must exceed L1 = " +
                            std::to_string(p.lipschitz_y));
  const auto slices = detail::nonempty_slices(p, x);
  for (const auto& s : slices) {
    const auto gens = to_generators(s.set);
    if (!gens.is_bounded())
      throw PreconditionError("penalty: F(x) is unbounded, no finite search box contains it");
    double fmax = -std::numeric_limits<double>::infinity(), fmin = std::numeric_limits<double>::infinity();
    for (const auto& v : gens.vertices) {
      fmax = std::max(fmax, p.objective.value(x, v));
      fmin = std::min(fmin, p.objective.value(x, v));
    }
    if (!p.objective.all_affine()) fmin = phi_value(p, x);
    const double margin = (fmax - fmin) / (out.lprime - p.lipschitz_y);
    for (const auto& v : gens.vertices)
      for (Eigen::Index i = 0; i < p.m; ++i)
        if (v(i) - margin < lo(i) - 1e-9 || v(i) + margin > hi(i) + 1e-9)
          throw PreconditionError("penalty: box does not contain F(x) plus the required margin " +
                                  std::to_string(margin));
  }
  out.phi = phi_value(p, x);
  auto [val, arg] = penalized_grid_min(p, x, lo, hi, h, out.lprime, opt);
  out.penalized_min = val;
  out.argmin = arg;
  out.residual = std::abs(out.phi - val);
  out.bound = (p.lipschitz_y + out.lprime) * h;
  return out;
}

} // namespace margsub
