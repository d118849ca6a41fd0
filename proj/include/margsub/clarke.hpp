#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "margsub/convexgeom.hpp"
#include "margsub/model.hpp"

namespace margsub {

constexpr double kDefaultTolActive = 1e-8;

struct ActiveIndexSet {
  std::vector<size_t> indices;
  double tol_active = kDefaultTolActive;
};

/// Indices i with f_i(x,y) >= f(x,y) - tol_active.
inline ActiveIndexSet active_indices(const MaxSmoothObjective& obj, const Vector& x, const Vector& y,
                                     double tol_active = kDefaultTolActive) {
  if (!(tol_active > 0.0)) throw PreconditionError("active_indices: tol_active must be positive");
  const auto vals = obj.component_values(x, y);
  const double fmax = *std::max_element(vals.begin(), vals.end());
  ActiveIndexSet out;
  out.tol_active = tol_active;
  for (size_t i = 0; i < vals.size(); ++i)
    if (vals[i] >= fmax - tol_active) out.indices.push_back(i);
  return out;
}

/// conv of the active gradients (grad_x f_i, grad_y f_i) in R^(n+m).
inline GeneratedConvexSet clarke_subdiff_max(const MaxSmoothObjective& obj, const Vector& x, const Vector& y,
                                             double tol_active = kDefaultTolActive) {
  const auto act = active_indices(obj, x, y, tol_active);
  std::vector<Vector> grads;
  for (size_t i : act.indices) grads.push_back(obj.components()[i].gradient(x, y));
  return GeneratedConvexSet(obj.n() + obj.m(), std::move(grads));
}

inline double gen_dir_deriv_exact(const MaxSmoothObjective& obj, const Vector& x, const Vector& y,
                                  const Vector& direction, double tol_active = kDefaultTolActive) {
  return support(clarke_subdiff_max(obj, x, y, tol_active), direction).value();
}

struct SampledLimsupParams {
  std::vector<double> radii{1e-2, 1e-3, 1e-4};
  std::vector<double> steps{1e-2, 1e-3, 1e-4, 1e-5};
  int samples_per_radius = 32;
  std::uint64_t seed = 42;

  void validate() const {
    if (radii.empty() || steps.empty()) throw ValidationError("sampling: radii and steps must be nonempty");
    for (double r : radii)
      if (!(r > 0.0)) throw ValidationError("sampling: radii must be positive");
    for (double t : steps)
      if (!(t > 0.0)) throw ValidationError("sampling: steps must be positive");
    if (samples_per_radius < 1) throw ValidationError("sampling: samples_per_radius must be >= 1");
  }
};

/// Base points used by the sampled limsup: x̄ itself, then for each radius its
/// own seeded stream of uniform ball samples. Adding samples only appends.
inline std::vector<Vector> limsup_base_points(const Vector& xbar, const SampledLimsupParams& params) {
  params.validate();
  const Eigen::Index n = xbar.size();
  std::vector<Vector> pts{xbar};
  for (size_t j = 0; j < params.radii.size(); ++j) {
    std::seed_seq seq{static_cast<std::uint32_t>(params.seed), static_cast<std::uint32_t>(params.seed >> 32),
                      static_cast<std::uint32_t>(j)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> N(0.0, 1.0);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int s = 0; s < params.samples_per_radius; ++s) {
      Vector g(n);
      for (Eigen::Index i = 0; i < n; ++i) g(i) = N(rng);
      double gn = g.norm();
      if (gn == 0.0) {
        g = Vector::Unit(n, 0);
        gn = 1.0;
      }
      const double r = params.radii[j] * std::pow(U(rng), 1.0 / static_cast<double>(n));
      pts.push_back(xbar + (r / gn) * g);
    }
  }
  return pts;
}

struct SampledDerivative {
  double value = 0.0;            ///< max difference quotient
  double max_abs_quotient = 0.0; ///< Lipschitz evidence near x̄
};

using ScalarFn = std::function<double(const Vector&)>;

/// Sampled generalized directional derivative with optional cached base values
/// (fn at limsup_base_points), which lets many directions share them.
inline SampledDerivative gen_dir_deriv_sampled_detail(const ScalarFn& fn, const Vector& xbar, const Vector& u,
                                                      const SampledLimsupParams& params,
                                                      const std::vector<double>* base_values = nullptr) {
  require_dim(u, xbar.size(), "gen_dir_deriv_sampled direction");
  const auto pts = limsup_base_points(xbar, params);
  if (base_values && base_values->size() != pts.size())
    throw DimensionError("gen_dir_deriv_sampled: cached base values do not match the sample count");
  SampledDerivative out;
  out.value = -std::numeric_limits<double>::infinity();
  for (size_t s = 0; s < pts.size(); ++s) {
    const double f0 = base_values ? (*base_values)[s] : fn(pts[s]);
    if (!std::isfinite(f0)) throw NumericalError("gen_dir_deriv_sampled: non-finite function value");
    for (double t : params.steps) {
      const double f1 = fn(pts[s] + t * u);
      if (!std::isfinite(f1)) throw NumericalError("gen_dir_deriv_sampled: non-finite function value");
      const double q = (f1 - f0) / t;
      out.value = std::max(out.value, q);
      out.max_abs_quotient = std::max(out.max_abs_quotient, std::abs(q));
    }
  }
  return out;
}

inline double gen_dir_deriv_sampled(const ScalarFn& fn, const Vector& xbar, const Vector& u,
                                    const SampledLimsupParams& params = {}) {
  return gen_dir_deriv_sampled_detail(fn, xbar, u, params).value;
}

constexpr double kMembershipTol = 1e-9;

namespace detail {

struct LocalRow {
  size_t plane; ///< index into the deduplicated hyperplane list
  int orient;   ///< row is orient * (plane . w) <= 0
  bool equality;
};

struct LocalPiece {
  std::vector<LocalRow> rows;
};

inline bool row_is_tight(const Vector& row, double rhs, const Vector& z) {
  const double scale = std::max({1.0, std::abs(rhs), row.cwiseAbs().maxCoeff() * z.cwiseAbs().maxCoeff()});
  return std::abs(row.dot(z) - rhs) <= kMembershipTol * scale;
}

/// Index of a unit normal up to sign in `planes`, adding it if new.
inline std::pair<size_t, int> intern_plane(std::vector<Vector>& planes, Vector h) {
  h /= h.norm();
  Eigen::Index lead = 0;
  while (lead < h.size() && std::abs(h(lead)) <= 1e-12) ++lead;
  int orient = 1;
  if (h(lead) < 0) {
    h = -h;
    orient = -1;
  }
  for (size_t k = 0; k < planes.size(); ++k)
    if ((planes[k] - h).lpNorm<Eigen::Infinity>() <= 1e-9) return {k, orient};
  planes.push_back(h);
  return {planes.size() - 1, orient};
}

/// Whether some w has sign(planes[k] . w) == sigma[k] for k < upto; fills
/// `rep` with a relative-interior point.
inline bool sign_cell_feasible(const std::vector<Vector>& planes, const std::vector<int>& sigma, size_t upto,
                               Eigen::Index d, Vector* rep) {
  HPolyhedron P(d + 1);
  for (Eigen::Index i = 0; i < d; ++i) {
    P.add_inequality(Vector::Unit(d + 1, i), 1.0);
    P.add_inequality(-Vector::Unit(d + 1, i), 1.0);
  }
  P.add_inequality(Vector::Unit(d + 1, d), 1.0);
  bool strict = false;
  for (size_t k = 0; k < upto; ++k) {
    Vector row = Vector::Zero(d + 1);
    row.head(d) = planes[k];
    if (sigma[k] == 0) {
      P.add_equality(row, 0.0);
    } else {
      strict = true;
      row.head(d) *= -sigma[k];
      row(d) = 1.0;
      P.add_inequality(row, 0.0);
    }
  }
  const auto r = lp_solve(Vector::Unit(d + 1, d), P, Sense::maximize);
  if (!r.optimal()) return false;
  if (strict && r.value <= 1e-9) return false;
  if (rep) *rep = r.point.head(d);
  return true;
}

struct Cell {
  std::vector<int> sigma;
  Vector rep;
  Eigen::Index dim = 0;
};

inline std::vector<Cell> arrangement_cells(const std::vector<Vector>& planes, Eigen::Index d) {
  std::vector<Cell> cells;
  std::vector<int> sigma(planes.size(), 0);
  std::function<void(size_t)> rec = [&](size_t k) {
    if (k == planes.size()) {
      Cell c;
      c.sigma = sigma;
      sign_cell_feasible(planes, sigma, k, d, &c.rep);
      Matrix Z(0, d);
      for (size_t j = 0; j < planes.size(); ++j)
        if (sigma[j] == 0) {
          Z.conservativeResize(Z.rows() + 1, Eigen::NoChange);
          Z.row(Z.rows() - 1) = planes[j].transpose();
        }
      c.dim = d - matrix_rank(Z);
      cells.push_back(std::move(c));
      return;
    }
    for (int s : {-1, 0, 1}) {
      sigma[k] = s;
      if (sign_cell_feasible(planes, sigma, k + 1, d, nullptr)) rec(k + 1);
    }
    sigma[k] = 0;
  };
  rec(0);
  return cells;
}

/// Does the closed cell with sign vector `rho` lie in the local cone of `piece`
/// relative to the face with sign vector `at`?
inline bool piece_admits(const LocalPiece& piece, const std::vector<int>& at, const std::vector<int>& rho) {
  for (const auto& r : piece.rows) {
    if (at[r.plane] != 0) continue;
    if (r.equality ? rho[r.plane] != 0 : r.orient * rho[r.plane] > 0) return false;
  }
  return true;
}

inline bool piece_contains_cell(const LocalPiece& piece, const std::vector<int>& sigma) {
  for (const auto& r : piece.rows)
    if (r.equality ? sigma[r.plane] != 0 : r.orient * sigma[r.plane] > 0) return false;
  return true;
}

inline ConeGenerators whole_space_cone(Eigen::Index d) {
  ConeGenerators g;
  g.dim = d;
  for (Eigen::Index i = 0; i < d; ++i) g.lineality.push_back(Vector::Unit(d, i));
  return g;
}

} // namespace detail

/// Clarke tangent cone of a finite union of polyhedra at z̄. The local picture
/// is refined into the common hyperplane arrangement of all rows tight at z̄;
/// the tangent cone is the intersection of the contingent cones over all cells
/// of the union, and it is generated by the arrangement rays it contains.
inline ConeGenerators tangent_cone_polyunion(const std::vector<HPolyhedron>& pieces, const Vector& zbar) {
  if (pieces.empty()) throw DomainError("tangent_cone_polyunion: no pieces");
  const Eigen::Index d = pieces.front().dim;
  require_dim(zbar, d, "tangent_cone_polyunion point");

  std::vector<const HPolyhedron*> active;
  for (const auto& Q : pieces) {
    require_dim(zbar, Q.dim, "tangent_cone_polyunion piece");
    if (Q.contains(zbar, kMembershipTol)) active.push_back(&Q);
  }
  if (active.empty()) throw DomainError("tangent_cone_polyunion: point is not in the union");

  std::vector<Vector> planes;
  std::vector<detail::LocalPiece> local;
  for (const HPolyhedron* Q : active) {
    detail::LocalPiece lp;
    for (Eigen::Index i = 0; i < Q->A.rows(); ++i) {
      const Vector row = Q->A.row(i).transpose();
      if (row.norm() == 0.0 || !detail::row_is_tight(row, Q->b(i), zbar)) continue;
      auto [k, o] = detail::intern_plane(planes, row);
      lp.rows.push_back({k, o, false});
    }
    for (Eigen::Index i = 0; i < Q->E.rows(); ++i) {
      const Vector row = Q->E.row(i).transpose();
      if (row.norm() == 0.0) continue;
      auto [k, o] = detail::intern_plane(planes, row);
      lp.rows.push_back({k, o, true});
    }
    if (lp.rows.empty()) return detail::whole_space_cone(d);
    local.push_back(std::move(lp));
  }

  if (local.size() == 1) {
    Matrix A(0, d), E(0, d);
    for (const auto& r : local[0].rows) {
      Matrix& M = r.equality ? E : A;
      M.conservativeResize(M.rows() + 1, Eigen::NoChange);
      M.row(M.rows() - 1) = (r.orient * planes[r.plane]).transpose();
    }
    return cone_generators(A, E, d);
  }

  if (planes.size() > 16) throw ScaleLimitError("tangent_cone_polyunion: more than 16 distinct tight hyperplanes");
  const auto cells = detail::arrangement_cells(planes, d);

  Matrix allplanes(static_cast<Eigen::Index>(planes.size()), d);
  for (size_t k = 0; k < planes.size(); ++k) allplanes.row(static_cast<Eigen::Index>(k)) = planes[k].transpose();
  const Matrix Lbasis = null_space(allplanes, d);
  const Eigen::Index dimL = Lbasis.cols();

  std::vector<std::vector<size_t>> owners(cells.size());
  for (size_t c = 0; c < cells.size(); ++c)
    for (size_t p = 0; p < local.size(); ++p)
      if (detail::piece_contains_cell(local[p], cells[c].sigma)) owners[c].push_back(p);

  auto in_tangent = [&](const std::vector<int>& rho) {
    for (size_t c = 0; c < cells.size(); ++c) {
      if (owners[c].empty()) continue;
      bool ok = false;
      for (size_t p : owners[c])
        if (detail::piece_admits(local[p], cells[c].sigma, rho)) {
          ok = true;
          break;
        }
      if (!ok) return false;
    }
    return true;
  };

  ConeGenerators T;
  T.dim = d;
  for (Eigen::Index j = 0; j < dimL; ++j) T.lineality.push_back(Lbasis.col(j));
  for (size_t c = 0; c < cells.size(); ++c) {
    if (cells[c].dim != dimL + 1 || owners[c].empty()) continue;
    if (!in_tangent(cells[c].sigma)) continue;
    Vector r = cells[c].rep - Lbasis * (Lbasis.transpose() * cells[c].rep);
    T.rays.push_back(r / r.norm());
  }
  return T;
}

struct NormalConeResult {
  ConeGenerators tangent;
  GeneratedConvexSet cone; ///< vertex {0} plus rays
  HPolyhedron halfspaces;  ///< {n : <n, t> <= 0 for tangent generators t}
};

inline NormalConeResult normal_cone(const std::vector<HPolyhedron>& pieces, const Vector& zbar) {
  NormalConeResult out;
  out.tangent = tangent_cone_polyunion(pieces, zbar);
  const Eigen::Index d = out.tangent.dim;
  const auto gens = out.tangent.all();
  out.halfspaces = polar_cone(gens, d);
  Matrix A(static_cast<Eigen::Index>(gens.size()), d);
  for (size_t i = 0; i < gens.size(); ++i) A.row(static_cast<Eigen::Index>(i)) = gens[i].transpose();
  out.cone = GeneratedConvexSet::cone(d, cone_generators(A, Matrix(0, d), d).all());
  return out;
}

/// {x* : <x*, t_x> - <y*, t_y> <= 0 for every tangent generator t}, which is the
/// x*-slice of the normal cone at -y*.
inline GeneratedConvexSet coderivative_from_tangent(const ConeGenerators& T, Eigen::Index n, const Vector& ystar) {
  const Eigen::Index m = T.dim - n;
  require_dim(ystar, m, "coderivative y*");
  HPolyhedron H(n);
  for (const auto& t : T.all()) {
    const Vector tx = t.head(n);
    const double rhs = ystar.dot(t.tail(m));
    if (tx.norm() == 0.0) {
      if (rhs < -1e-12) return GeneratedConvexSet::empty(n);
      continue;
    }
    H.add_inequality(tx, rhs);
  }
  return to_generators(H);
}

inline GeneratedConvexSet coderivative(const std::vector<HPolyhedron>& pieces, Eigen::Index n, const Vector& zbar,
                                       const Vector& ystar) {
  return coderivative_from_tangent(tangent_cone_polyunion(pieces, zbar), n, ystar);
}

} // namespace margsub
