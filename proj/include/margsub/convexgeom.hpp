#pragma once

// Exact polyhedral geometry at desk scale. Sets are carried either as
//   GeneratedConvexSet  conv(vertices) + cone(rays)
//   HPolyhedron         { z : A z <= b, E z = e }
// and converted between the two with the double description method.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "margsub/lp.hpp"
#include "margsub/types.hpp"

namespace margsub {

/// conv(vertices) + cone(rays) in R^dim. Empty iff there are no vertices.
struct GeneratedConvexSet {
  Eigen::Index dim = 0;
  std::vector<Vector> vertices;
  std::vector<Vector> rays;

  GeneratedConvexSet() = default;
  GeneratedConvexSet(Eigen::Index d, std::vector<Vector> verts, std::vector<Vector> rs = {})
      : dim(d), vertices(std::move(verts)), rays(std::move(rs)) {
    check();
  }

  static GeneratedConvexSet empty(Eigen::Index d) { return GeneratedConvexSet(d, {}, {}); }
  static GeneratedConvexSet point(const Vector& p) { return GeneratedConvexSet(p.size(), {p}, {}); }
  /// The whole space R^d, as {0} + cone(+-e_i).
  static GeneratedConvexSet whole_space(Eigen::Index d) {
    std::vector<Vector> rs;
    for (Eigen::Index i = 0; i < d; ++i) {
      rs.push_back(Vector::Unit(d, i));
      rs.push_back(-Vector::Unit(d, i));
    }
    return GeneratedConvexSet(d, {Vector::Zero(d)}, std::move(rs));
  }
  /// The cone generated by `gens` (apex at the origin).
  static GeneratedConvexSet cone(Eigen::Index d, std::vector<Vector> gens) {
    return GeneratedConvexSet(d, {Vector::Zero(d)}, std::move(gens));
  }

  bool is_empty() const { return vertices.empty(); }
  bool is_bounded() const { return rays.empty(); }

  void check() const {
    for (const auto& v : vertices) require_dim(v, dim, "GeneratedConvexSet vertex");
    for (const auto& r : rays) {
      require_dim(r, dim, "GeneratedConvexSet ray");
      if (r.norm() == 0.0) throw ValidationError("GeneratedConvexSet: rays must be nonzero");
    }
    if (vertices.empty() && !rays.empty())
      throw ValidationError("GeneratedConvexSet: the empty set carries no rays");
  }
};

/// Support function value of conv(vertices) + cone(rays) at u. Returns
/// minus_infinity for the empty set and plus_infinity when some ray has
/// positive inner product with u.
inline Extended support(const GeneratedConvexSet& S, const Vector& u) {
  require_dim(u, S.dim, "support direction");
  if (S.is_empty()) return Extended::minus_infinity();
  const double un = u.norm();
  for (const auto& r : S.rays)
    if (r.dot(u) > 1e-12 * r.norm() * un) return Extended::plus_infinity();
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& v : S.vertices) best = std::max(best, v.dot(u));
  return Extended::finite(best);
}

/// Support function of an H-polyhedron by linear programming.
inline Extended support(const HPolyhedron& P, const Vector& u) {
  auto r = lp_solve(u, P, Sense::maximize);
  switch (r.status) {
  case LpStatus::unbounded: return Extended::plus_infinity();
  case LpStatus::infeasible: return Extended::minus_infinity();
  default: return Extended::finite(r.value);
  }
}

/// u -> sigma(u), backed by whatever description produced it.
struct SupportOracle {
  Eigen::Index dim = 0;
  std::function<Extended(const Vector&)> eval;

  Extended operator()(const Vector& u) const {
    require_dim(u, dim, "SupportOracle");
    return eval(u);
  }
};

inline SupportOracle support_oracle(const HPolyhedron& P) {
  return SupportOracle{P.dim, [P](const Vector& u) { return support(P, u); }};
}

/// Generators of a polyhedral cone: lineality basis plus extreme rays modulo it.
struct ConeGenerators {
  Eigen::Index dim = 0;
  std::vector<Vector> lineality;
  std::vector<Vector> rays;

  /// All generators with lineality directions listed in both signs.
  std::vector<Vector> all() const {
    std::vector<Vector> out = rays;
    for (const auto& l : lineality) {
      out.push_back(l);
      out.push_back(-l);
    }
    return out;
  }
};

namespace detail {

/// Growable bitset for tight-constraint bookkeeping in the double description.
class Bits {
public:
  void set(size_t i) {
    if (words_.size() <= i / 64) words_.resize(i / 64 + 1, 0);
    words_[i / 64] |= (uint64_t{1} << (i % 64));
  }
  size_t count() const {
    size_t c = 0;
    for (auto w : words_) c += static_cast<size_t>(__builtin_popcountll(w));
    return c;
  }
  Bits operator&(const Bits& o) const {
    Bits r;
    r.words_.resize(std::min(words_.size(), o.words_.size()));
    for (size_t i = 0; i < r.words_.size(); ++i) r.words_[i] = words_[i] & o.words_[i];
    return r;
  }
  bool contains(const Bits& o) const {
    for (size_t i = 0; i < o.words_.size(); ++i) {
      const uint64_t mine = i < words_.size() ? words_[i] : 0;
      if ((o.words_[i] & ~mine) != 0) return false;
    }
    return true;
  }

private:
  std::vector<uint64_t> words_;
};

struct DDRay {
  Vector r;
  Bits tight;
};

inline Matrix orthonormalize_columns(const Matrix& M) {
  if (M.cols() == 0) return M;
  Eigen::HouseholderQR<Matrix> qr(M);
  return qr.householderQ() * Matrix::Identity(M.rows(), M.cols());
}

constexpr double kDDTol = 1e-9;

} // namespace detail

/// Double description: generators of { z : A z <= 0, E z = 0 }.
inline ConeGenerators cone_generators(const Matrix& A, const Matrix& E, Eigen::Index dim) {
  if (A.cols() != dim || E.cols() != dim) throw DimensionError("cone_generators: column mismatch");
  using detail::kDDTol;
  Matrix lin = E.rows() > 0 ? null_space(E, dim) : Matrix(Matrix::Identity(dim, dim));
  std::vector<detail::DDRay> rays;

  for (Eigen::Index k = 0; k < A.rows(); ++k) {
    const double an = A.row(k).norm();
    if (an <= 1e-14) continue;
    const Vector a = A.row(k).transpose() / an;

    Eigen::Index pick = -1;
    double best = kDDTol;
    for (Eigen::Index j = 0; j < lin.cols(); ++j) {
      const double c = std::abs(a.dot(lin.col(j)));
      if (c > best) {
        best = c;
        pick = j;
      }
    }

    if (pick >= 0) {
      Vector l0 = lin.col(pick);
      if (a.dot(l0) > 0) l0 = -l0;
      const double alpha = a.dot(l0);
      Matrix rest(dim, lin.cols() - 1);
      for (Eigen::Index j = 0, c = 0; j < lin.cols(); ++j) {
        if (j == pick) continue;
        Vector l = lin.col(j);
        rest.col(c++) = l - (a.dot(l) / alpha) * l0;
      }
      lin = detail::orthonormalize_columns(rest);
      for (auto& ray : rays) {
        ray.r -= (a.dot(ray.r) / alpha) * l0;
        ray.r.normalize();
        ray.tight.set(static_cast<size_t>(k));
      }
      detail::DDRay fresh{l0.normalized(), {}};
      for (Eigen::Index j = 0; j < k; ++j) fresh.tight.set(static_cast<size_t>(j));
      rays.push_back(std::move(fresh));
      continue;
    }

    std::vector<size_t> pos, neg, zero;
    std::vector<double> val(rays.size());
    for (size_t i = 0; i < rays.size(); ++i) {
      val[i] = a.dot(rays[i].r);
      if (val[i] > kDDTol) pos.push_back(i);
      else if (val[i] < -kDDTol) neg.push_back(i);
      else zero.push_back(i);
    }
    if (pos.empty()) {
      for (auto i : zero) rays[i].tight.set(static_cast<size_t>(k));
      continue;
    }

    const size_t need = static_cast<size_t>(std::max<Eigen::Index>(0, dim - lin.cols() - 2));
    std::vector<detail::DDRay> next;
    next.reserve(zero.size() + neg.size());
    for (auto i : zero) {
      next.push_back(rays[i]);
      next.back().tight.set(static_cast<size_t>(k));
    }
    for (auto i : neg) next.push_back(rays[i]);
    for (auto p : pos) {
      for (auto n : neg) {
        detail::Bits common = rays[p].tight & rays[n].tight;
        if (common.count() < need) continue;
        bool adjacent = true;
        for (size_t o = 0; o < rays.size() && adjacent; ++o) {
          if (o == p || o == n) continue;
          if (rays[o].tight.contains(common)) adjacent = false;
        }
        if (!adjacent) continue;
        Vector r = val[p] * rays[n].r - val[n] * rays[p].r;
        const double rn = r.norm();
        if (rn <= 1e-14) continue;
        common.set(static_cast<size_t>(k));
        next.push_back({r / rn, common});
      }
    }
    rays = std::move(next);
  }

  ConeGenerators out;
  out.dim = dim;
  for (Eigen::Index j = 0; j < lin.cols(); ++j) out.lineality.push_back(lin.col(j));
  for (auto& r : rays) out.rays.push_back(r.r);
  return out;
}

namespace detail {

inline bool near_duplicate(const std::vector<Vector>& list, const Vector& v, double tol) {
  for (const auto& w : list)
    if ((w - v).lpNorm<Eigen::Infinity>() <= tol * std::max(1.0, v.lpNorm<Eigen::Infinity>())) return true;
  return false;
}

} // namespace detail

/// H -> V conversion by homogenization and the double description.
inline GeneratedConvexSet to_generators(const HPolyhedron& P) {
  P.check();
  const Eigen::Index d = P.dim;
  Matrix A(P.A.rows() + 1, d + 1);
  A.setZero();
  A.topLeftCorner(P.A.rows(), d) = P.A;
  A.block(0, d, P.A.rows(), 1) = -P.b;
  A(P.A.rows(), d) = -1.0;
  Matrix E(P.E.rows(), d + 1);
  if (P.E.rows() > 0) {
    E.leftCols(d) = P.E;
    E.col(d) = -P.e;
  }
  const auto gens = cone_generators(A, E, d + 1);

  std::vector<Vector> verts, rays;
  auto add_ray = [&](const Vector& r) {
    const double n = r.norm();
    if (n <= 1e-12) return;
    Vector u = r / n;
    if (!detail::near_duplicate(rays, u, 1e-9)) rays.push_back(u);
  };
  for (const auto& l : gens.lineality) {
    add_ray(l.head(d));
    add_ray(-l.head(d));
  }
  for (const auto& r : gens.rays) {
    const double t = r(d);
    if (t > detail::kDDTol) {
      Vector v = r.head(d) / t;
      if (!detail::near_duplicate(verts, v, 1e-9)) verts.push_back(v);
    } else {
      add_ray(r.head(d));
    }
  }
  if (verts.empty()) return GeneratedConvexSet::empty(d);
  return GeneratedConvexSet(d, std::move(verts), std::move(rays));
}

/// V -> H conversion: facets come from the generators of the polar of the
/// homogenized cone. The empty set maps to the infeasible system 0 <= -1.
inline HPolyhedron to_halfspaces(const GeneratedConvexSet& S) {
  const Eigen::Index d = S.dim;
  HPolyhedron out(d);
  if (S.is_empty()) {
    out.add_inequality(Vector::Zero(d), -1.0);
    return out;
  }
  const Eigen::Index k = static_cast<Eigen::Index>(S.vertices.size() + S.rays.size());
  Matrix A(k, d + 1);
  Eigen::Index row = 0;
  for (const auto& v : S.vertices) {
    A.row(row).head(d) = v.transpose();
    A(row++, d) = 1.0;
  }
  for (const auto& r : S.rays) {
    A.row(row).head(d) = r.transpose();
    A(row++, d) = 0.0;
  }
  const auto polar = cone_generators(A, Matrix(0, d + 1), d + 1);
  for (const auto& l : polar.lineality) {
    const double an = l.head(d).norm();
    if (an <= 1e-12) continue;
    out.add_equality(l.head(d) / an, -l(d) / an);
  }
  for (const auto& r : polar.rays) {
    const double an = r.head(d).norm();
    if (an <= 1e-12) continue;
    out.add_inequality(r.head(d) / an, -r(d) / an);
  }
  return out;
}

/// { z : <z, g> <= 0 for every generator g }.
inline HPolyhedron polar_cone(const std::vector<Vector>& generators, Eigen::Index dim) {
  HPolyhedron out(dim);
  for (const auto& g : generators) out.add_inequality(g, 0.0);
  return out;
}

/// Closed convex hull of a union of generated sets (generators concatenated).
inline GeneratedConvexSet hull_union(const std::vector<GeneratedConvexSet>& sets) {
  if (sets.empty()) throw DimensionError("hull_union: no sets given");
  GeneratedConvexSet out = GeneratedConvexSet::empty(sets.front().dim);
  for (const auto& s : sets) {
    if (s.dim != out.dim) throw DimensionError("hull_union: dimension mismatch");
    out.vertices.insert(out.vertices.end(), s.vertices.begin(), s.vertices.end());
    out.rays.insert(out.rays.end(), s.rays.begin(), s.rays.end());
  }
  return out;
}

/// { x in R^n : (x, 0) in S } where S lives in R^(n+m), y-block last.
inline GeneratedConvexSet slice_at_zero(const GeneratedConvexSet& S, Eigen::Index n) {
  if (n < 0 || n > S.dim) throw DimensionError("slice_at_zero: bad block size");
  if (S.is_empty()) return GeneratedConvexSet::empty(n);
  const HPolyhedron H = to_halfspaces(S);
  HPolyhedron slice(Matrix(H.A.leftCols(n)), H.b, Matrix(H.E.leftCols(n)), H.e);
  return to_generators(slice);
}

/// Point membership in conv(vertices) + cone(rays) by LP feasibility.
inline bool contains(const GeneratedConvexSet& S, const Vector& z, double tol = 1e-9) {
  require_dim(z, S.dim, "contains");
  if (S.is_empty()) return false;
  const Eigen::Index nv = static_cast<Eigen::Index>(S.vertices.size());
  const Eigen::Index nr = static_cast<Eigen::Index>(S.rays.size());
  const Eigen::Index k = nv + nr;
  // Variables: weights w (k); relaxation slack s >= 0 on each coordinate.
  const Eigen::Index d = S.dim;
  HPolyhedron P(k + 1);
  for (Eigen::Index j = 0; j < k; ++j) P.add_inequality(-Vector::Unit(k + 1, j), 0.0);
  Vector sum_row = Vector::Zero(k + 1);
  sum_row.head(nv).setOnes();
  P.add_equality(sum_row, 1.0);
  for (Eigen::Index i = 0; i < d; ++i) {
    Vector row = Vector::Zero(k + 1);
    for (Eigen::Index j = 0; j < nv; ++j) row(j) = S.vertices[j](i);
    for (Eigen::Index j = 0; j < nr; ++j) row(nv + j) = S.rays[j](i);
    Vector up = row, lo = -row;
    up(k) = -1.0;
    lo(k) = -1.0;
    P.add_inequality(up, z(i));
    P.add_inequality(lo, -z(i));
  }
  auto r = lp_solve(Vector::Unit(k + 1, k), P, Sense::minimize);
  return r.optimal() && r.value <= tol * std::max(1.0, z.lpNorm<Eigen::Infinity>());
}

/// Removes generators implied by the others (one LP per generator).
inline GeneratedConvexSet canonicalize(const GeneratedConvexSet& S) {
  if (S.is_empty()) return S;
  GeneratedConvexSet cur = S;
  // Rays first: r is redundant if it lies in the cone of the other rays.
  for (size_t i = 0; i < cur.rays.size();) {
    GeneratedConvexSet others = GeneratedConvexSet::cone(S.dim, {});
    for (size_t j = 0; j < cur.rays.size(); ++j)
      if (j != i) others.rays.push_back(cur.rays[j]);
    if (contains(others, cur.rays[i])) cur.rays.erase(cur.rays.begin() + static_cast<long>(i));
    else ++i;
  }
  for (size_t i = 0; i < cur.vertices.size() && cur.vertices.size() > 1;) {
    GeneratedConvexSet others(S.dim, {}, {});
    for (size_t j = 0; j < cur.vertices.size(); ++j)
      if (j != i) others.vertices.push_back(cur.vertices[j]);
    others.rays = cur.rays;
    if (contains(others, cur.vertices[i])) cur.vertices.erase(cur.vertices.begin() + static_cast<long>(i));
    else ++i;
  }
  return cur;
}

/// Fourier-Motzkin projection onto the first `keep` coordinates, with LP-based
/// removal of redundant rows after every elimination step.
inline HPolyhedron project_block(const HPolyhedron& P, Eigen::Index keep) {
  P.check();
  if (keep < 0 || keep > P.dim) throw DimensionError("project_block: bad block size");
  const Eigen::Index elim = P.dim - keep;
  if (elim > 8) throw ScaleLimitError("project_block: more than 8 eliminated variables");

  std::vector<Vector> ineq_a, eq_a;
  std::vector<double> ineq_b, eq_b;
  for (Eigen::Index i = 0; i < P.A.rows(); ++i) {
    ineq_a.push_back(P.A.row(i).transpose());
    ineq_b.push_back(P.b(i));
  }
  for (Eigen::Index i = 0; i < P.E.rows(); ++i) {
    eq_a.push_back(P.E.row(i).transpose());
    eq_b.push_back(P.e(i));
  }
  const double tol = 1e-12;

  auto build = [&](Eigen::Index cols) {
    HPolyhedron H(cols);
    for (size_t i = 0; i < ineq_a.size(); ++i) H.add_inequality(ineq_a[i].head(cols), ineq_b[i]);
    for (size_t i = 0; i < eq_a.size(); ++i) H.add_equality(eq_a[i].head(cols), eq_b[i]);
    return H;
  };

  auto infeasible = [&] {
    HPolyhedron H(keep);
    H.add_inequality(Vector::Zero(keep), -1.0);
    return H;
  };

  for (Eigen::Index j = P.dim - 1; j >= keep; --j) {
    // Substitute through an equality when one involves z_j.
    int piv = -1;
    double best = tol;
    for (size_t i = 0; i < eq_a.size(); ++i) {
      if (std::abs(eq_a[i](j)) > best) {
        best = std::abs(eq_a[i](j));
        piv = static_cast<int>(i);
      }
    }
    if (piv >= 0) {
      const Vector pa = eq_a[piv];
      const double pb = eq_b[piv];
      for (size_t i = 0; i < ineq_a.size(); ++i) {
        const double f = ineq_a[i](j) / pa(j);
        ineq_a[i] -= f * pa;
        ineq_b[i] -= f * pb;
        ineq_a[i](j) = 0.0;
      }
      for (size_t i = 0; i < eq_a.size(); ++i) {
        if (static_cast<int>(i) == piv) continue;
        const double f = eq_a[i](j) / pa(j);
        eq_a[i] -= f * pa;
        eq_b[i] -= f * pb;
        eq_a[i](j) = 0.0;
      }
      eq_a.erase(eq_a.begin() + piv);
      eq_b.erase(eq_b.begin() + piv);
    } else {
      std::vector<Vector> na;
      std::vector<double> nb;
      std::vector<size_t> pos, neg;
      for (size_t i = 0; i < ineq_a.size(); ++i) {
        const double c = ineq_a[i](j);
        if (c > tol) pos.push_back(i);
        else if (c < -tol) neg.push_back(i);
        else {
          na.push_back(ineq_a[i]);
          na.back()(j) = 0.0;
          nb.push_back(ineq_b[i]);
        }
      }
      for (auto p : pos) {
        for (auto q : neg) {
          const double cp = ineq_a[p](j), cq = -ineq_a[q](j);
          Vector row = cq * ineq_a[p] + cp * ineq_a[q];
          row(j) = 0.0;
          na.push_back(row);
          nb.push_back(cq * ineq_b[p] + cp * ineq_b[q]);
        }
      }
      ineq_a = std::move(na);
      ineq_b = std::move(nb);
    }

    // Normalize, drop trivial rows, detect 0 <= negative.
    std::vector<Vector> ka;
    std::vector<double> kb;
    for (size_t i = 0; i < ineq_a.size(); ++i) {
      const double n = ineq_a[i].head(j).norm();
      if (n <= tol) {
        if (ineq_b[i] < -1e-9) return infeasible();
        continue;
      }
      ka.push_back(ineq_a[i] / n);
      kb.push_back(ineq_b[i] / n);
    }
    ineq_a = std::move(ka);
    ineq_b = std::move(kb);
    for (size_t i = 0; i < eq_a.size();) {
      if (eq_a[i].head(j).norm() <= tol) {
        if (std::abs(eq_b[i]) > 1e-9) return infeasible();
        eq_a.erase(eq_a.begin() + static_cast<long>(i));
        eq_b.erase(eq_b.begin() + static_cast<long>(i));
      } else {
        ++i;
      }
    }

    // LP redundancy elimination over the remaining variables.
    const HPolyhedron cur = build(j);
    if (is_empty(cur)) return infeasible();
    for (size_t i = 0; i < ineq_a.size();) {
      HPolyhedron others(j);
      for (size_t k = 0; k < ineq_a.size(); ++k)
        if (k != i) others.add_inequality(ineq_a[k].head(j), ineq_b[k]);
      for (size_t k = 0; k < eq_a.size(); ++k) others.add_equality(eq_a[k].head(j), eq_b[k]);
      const Extended s = support(others, ineq_a[i].head(j));
      if (!s.is_plus_infinity() && s.as_double() <= ineq_b[i] + 1e-9) {
        ineq_a.erase(ineq_a.begin() + static_cast<long>(i));
        ineq_b.erase(ineq_b.begin() + static_cast<long>(i));
      } else {
        ++i;
      }
    }
  }
  return build(keep);
}

/// Euclidean projection of y onto a nonempty H-polyhedron, by enumerating
/// candidate active sets and checking the KKT conditions.
inline Vector project_point(const HPolyhedron& P, const Vector& y) {
  require_dim(y, P.dim, "project_point");
  if (P.contains(y, 1e-12)) return y;
  if (is_empty(P)) throw DomainError("project_point: empty polyhedron");
  const Eigen::Index d = P.dim;
  const Eigen::Index ni = P.A.rows();
  const Eigen::Index re = matrix_rank(P.E);
  const Eigen::Index kmax = std::min<Eigen::Index>(ni, d - re);

  std::optional<Vector> best;
  double best_dist = std::numeric_limits<double>::infinity();
  std::vector<int> subset;
  long budget = 400000;

  auto try_subset = [&]() {
    const Eigen::Index k = static_cast<Eigen::Index>(subset.size());
    Matrix M(k + P.E.rows(), d);
    Vector h(k + P.E.rows());
    for (Eigen::Index i = 0; i < k; ++i) {
      M.row(i) = P.A.row(subset[i]);
      h(i) = P.b(subset[i]);
    }
    if (P.E.rows() > 0) {
      M.bottomRows(P.E.rows()) = P.E;
      h.tail(P.E.rows()) = P.e;
    }
    Vector u = y;
    Vector nu = Vector::Zero(M.rows());
    if (M.rows() > 0) {
      const Matrix G = M * M.transpose();
      Eigen::FullPivLU<Matrix> lu(G);
      if (matrix_rank(M) < M.rows()) return;
      nu = lu.solve(M * y - h);
      u = y - M.transpose() * nu;
    }
    for (Eigen::Index i = 0; i < k; ++i)
      if (nu(i) < -1e-10) return;
    if (!P.contains(u, 1e-10)) return;
    const double dist = (u - y).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best = u;
    }
  };

  std::function<void(int, Eigen::Index)> rec = [&](int start, Eigen::Index left) {
    if (--budget < 0) throw ScaleLimitError("project_point: active-set enumeration too large");
    try_subset();
    if (left == 0) return;
    for (int i = start; i < ni; ++i) {
      subset.push_back(i);
      rec(i + 1, left - 1);
      subset.pop_back();
    }
  };
  rec(0, kmax);
  if (!best) throw NumericalError("project_point: no KKT point found");
  return *best;
}

/// Basic feasible solutions (vertices) of { w >= 0 : M w = c }.
inline std::vector<Vector> standard_form_vertices(const Matrix& M, const Vector& c, double tol = 1e-9) {
  if (M.rows() != c.size()) throw DimensionError("standard_form_vertices: row mismatch");
  const Eigen::Index q = M.cols();
  const Eigen::Index r = matrix_rank(M);
  std::vector<Vector> out;
  std::vector<int> subset;
  long budget = 2000000;

  auto check = [&]() {
    const Eigen::Index k = static_cast<Eigen::Index>(subset.size());
    Vector w = Vector::Zero(q);
    if (k > 0) {
      Matrix Ms(M.rows(), k);
      for (Eigen::Index i = 0; i < k; ++i) Ms.col(i) = M.col(subset[i]);
      if (matrix_rank(Ms) < k) return;
      Vector ws = Ms.colPivHouseholderQr().solve(c);
      for (Eigen::Index i = 0; i < k; ++i) w(subset[i]) = ws(i);
    }
    if ((M * w - c).lpNorm<Eigen::Infinity>() > tol * std::max(1.0, c.lpNorm<Eigen::Infinity>())) return;
    if (w.size() > 0 && w.minCoeff() < -tol) return;
    w = w.cwiseMax(0.0);
    if (!detail::near_duplicate(out, w, 1e-9)) out.push_back(w);
  };

  std::function<void(int, Eigen::Index)> rec = [&](int start, Eigen::Index left) {
    if (--budget < 0) throw ScaleLimitError("standard_form_vertices: enumeration too large");
    check();
    if (left == 0) return;
    for (int i = start; i < q; ++i) {
      subset.push_back(i);
      rec(i + 1, left - 1);
      subset.pop_back();
    }
  };
  rec(0, r);
  return out;
}

} // namespace margsub
