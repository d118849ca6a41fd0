#pragma once

// Dense two-phase simplex with Bland's rule over polyhedra in inequality /
// equality form. Sized for desk-scale problems (a few dozen rows and columns).

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "margsub/types.hpp"

namespace margsub {

/// { z in R^d : A z <= b, E z = e }.
struct HPolyhedron {
  Eigen::Index dim = 0;
  Matrix A;
  Vector b;
  Matrix E;
  Vector e;

  HPolyhedron() = default;

  explicit HPolyhedron(Eigen::Index d)
      : dim(d), A(0, d), b(0), E(0, d), e(0) {}

  HPolyhedron(Matrix A_, Vector b_)
      : dim(A_.cols()), A(std::move(A_)), b(std::move(b_)), E(0, dim), e(0) {
    check();
  }

  HPolyhedron(Matrix A_, Vector b_, Matrix E_, Vector e_)
      : dim(A_.cols()), A(std::move(A_)), b(std::move(b_)), E(std::move(E_)), e(std::move(e_)) {
    check();
  }

  static HPolyhedron whole_space(Eigen::Index d) { return HPolyhedron(d); }

  Eigen::Index num_inequalities() const { return A.rows(); }
  Eigen::Index num_equalities() const { return E.rows(); }

  void check() const {
    if (A.cols() != dim || E.cols() != dim)
      throw DimensionError("HPolyhedron: column count differs from dimension");
    if (A.rows() != b.size()) throw DimensionError("HPolyhedron: A and b row counts differ");
    if (E.rows() != e.size()) throw DimensionError("HPolyhedron: E and e row counts differ");
  }

  void add_inequality(const Vector& row, double rhs) {
    require_dim(row, dim, "HPolyhedron::add_inequality");
    A.conservativeResize(A.rows() + 1, Eigen::NoChange);
    b.conservativeResize(b.size() + 1);
    A.row(A.rows() - 1) = row.transpose();
    b(b.size() - 1) = rhs;
  }

  void add_equality(const Vector& row, double rhs) {
    require_dim(row, dim, "HPolyhedron::add_equality");
    E.conservativeResize(E.rows() + 1, Eigen::NoChange);
    e.conservativeResize(e.size() + 1);
    E.row(E.rows() - 1) = row.transpose();
    e(e.size() - 1) = rhs;
  }

  /// Largest constraint violation at z (0 when feasible).
  double violation(const Vector& z) const {
    require_dim(z, dim, "HPolyhedron::violation");
    double worst = 0.0;
    for (Eigen::Index i = 0; i < A.rows(); ++i)
      worst = std::max(worst, A.row(i).dot(z) - b(i));
    for (Eigen::Index i = 0; i < E.rows(); ++i)
      worst = std::max(worst, std::abs(E.row(i).dot(z) - e(i)));
    return worst;
  }

  bool contains(const Vector& z, double tol = 1e-9) const {
    return violation(z) <= tol * std::max(1.0, z.lpNorm<Eigen::Infinity>());
  }

  /// Intersection with another polyhedron of the same dimension.
  HPolyhedron intersect(const HPolyhedron& other) const {
    if (other.dim != dim) throw DimensionError("HPolyhedron::intersect: dimension mismatch");
    Matrix A2(A.rows() + other.A.rows(), dim);
    A2 << A, other.A;
    Vector b2(b.size() + other.b.size());
    b2 << b, other.b;
    Matrix E2(E.rows() + other.E.rows(), dim);
    E2 << E, other.E;
    Vector e2(e.size() + other.e.size());
    e2 << e, other.e;
    return HPolyhedron(std::move(A2), std::move(b2), std::move(E2), std::move(e2));
  }
};

enum class Sense { minimize, maximize };
enum class LpStatus { optimal, unbounded, infeasible };

inline const char* to_string(LpStatus s) {
  switch (s) {
  case LpStatus::optimal: return "optimal";
  case LpStatus::unbounded: return "unbounded";
  default: return "infeasible";
  }
}

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  double value = 0.0;
  Vector point;           ///< optimal point (status optimal)
  Vector ray;             ///< improving recession direction (status unbounded)
  std::vector<int> basis; ///< standard-form basic columns in row order

  bool optimal() const { return status == LpStatus::optimal; }
};

namespace detail {

constexpr double kPivotTol = 1e-9;

/// Row-major dense tableau. Columns [0, ncols) are structural+slack+artificial,
/// the last column holds the right-hand side; the last row holds reduced costs.
class Tableau {
public:
  Tableau(int rows, int cols) : rows_(rows), cols_(cols), data_((rows + 1) * (cols + 1), 0.0) {}

  double& at(int r, int c) { return data_[r * (cols_ + 1) + c]; }
  double at(int r, int c) const { return data_[r * (cols_ + 1) + c]; }
  double& rhs(int r) { return at(r, cols_); }
  double& cost(int c) { return at(rows_, c); }
  int rows() const { return rows_; }
  int cols() const { return cols_; }

  void pivot(int pr, int pc) {
    const int w = cols_ + 1;
    double* prow = &data_[pr * w];
    const double inv = 1.0 / prow[pc];
    for (int c = 0; c < w; ++c) prow[c] *= inv;
    prow[pc] = 1.0;
    for (int r = 0; r <= rows_; ++r) {
      if (r == pr) continue;
      double* row = &data_[r * w];
      const double f = row[pc];
      if (f == 0.0) continue;
      for (int c = 0; c < w; ++c) row[c] -= f * prow[c];
      row[pc] = 0.0;
    }
  }

private:
  int rows_, cols_;
  std::vector<double> data_;
};

enum class PhaseOutcome { optimal, unbounded };

/// Bland's rule minimization over the current tableau. `allowed` masks columns
/// that may enter. On unbounded, `entering` receives the offending column.
inline PhaseOutcome run_phase(Tableau& t, std::vector<int>& basis, const std::vector<char>& allowed,
                              const std::vector<char>& active_row, int& entering) {
  const int max_iter = 50 * (t.rows() + t.cols()) + 1000;
  for (int iter = 0; iter < max_iter; ++iter) {
    int enter = -1;
    for (int c = 0; c < t.cols(); ++c) {
      if (allowed[c] && t.cost(c) < -kPivotTol) {
        enter = c;
        break;
      }
    }
    if (enter < 0) return PhaseOutcome::optimal;

    int leave = -1;
    double best = 0.0;
    for (int r = 0; r < t.rows(); ++r) {
      if (!active_row[r]) continue;
      const double a = t.at(r, enter);
      if (a <= kPivotTol) continue;
      const double ratio = std::max(0.0, t.rhs(r)) / a;
      if (leave < 0 || ratio < best - 1e-12 ||
          (std::abs(ratio - best) <= 1e-12 && basis[r] < basis[leave])) {
        leave = r;
        best = ratio;
      }
    }
    if (leave < 0) {
      entering = enter;
      return PhaseOutcome::unbounded;
    }
    t.pivot(leave, enter);
    basis[leave] = enter;
  }
  throw NumericalError("lp_solve: pivot budget exhausted without progress (degenerate cycling "
                       "beyond pivot tolerance 1e-9)");
}

} // namespace detail

/// Optimizes objective . z over P. Variables are free; internally z = p - q with
/// p, q >= 0 and one slack per inequality. Pivoting follows Bland's rule, so
/// identical inputs give identical bases.
inline LpResult lp_solve(const Vector& objective, const HPolyhedron& P, Sense sense) {
  P.check();
  require_dim(objective, P.dim, "lp_solve objective");
  const int d = static_cast<int>(P.dim);
  const int ni = static_cast<int>(P.A.rows());
  const int ne = static_cast<int>(P.E.rows());
  const int m = ni + ne;
  const int n_struct = 2 * d + ni;

  // Row data in standard form, sign-normalized so rhs >= 0.
  Matrix S = Matrix::Zero(m, n_struct);
  Vector rhs(m);
  for (int i = 0; i < ni; ++i) {
    S.block(i, 0, 1, d) = P.A.row(i);
    S.block(i, d, 1, d) = -P.A.row(i);
    S(i, 2 * d + i) = 1.0;
    rhs(i) = P.b(i);
  }
  for (int j = 0; j < ne; ++j) {
    S.block(ni + j, 0, 1, d) = P.E.row(j);
    S.block(ni + j, d, 1, d) = -P.E.row(j);
    rhs(ni + j) = P.e(j);
  }
  for (int r = 0; r < m; ++r) {
    if (rhs(r) < 0) {
      S.row(r) *= -1.0;
      rhs(r) = -rhs(r);
    }
  }

  // Artificials only for rows without a usable slack.
  std::vector<int> art_row;
  std::vector<int> basis(m, -1);
  for (int r = 0; r < m; ++r) {
    if (r < ni && S(r, 2 * d + r) > 0) {
      basis[r] = 2 * d + r;
    } else {
      art_row.push_back(r);
    }
  }
  const int n_art = static_cast<int>(art_row.size());
  const int ncols = n_struct + n_art;

  detail::Tableau t(m, ncols);
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < n_struct; ++c) t.at(r, c) = S(r, c);
    t.rhs(r) = rhs(r);
  }
  for (int k = 0; k < n_art; ++k) {
    t.at(art_row[k], n_struct + k) = 1.0;
    basis[art_row[k]] = n_struct + k;
  }

  std::vector<char> active_row(m, 1);
  std::vector<char> allowed(ncols, 1);
  int entering = -1;
  const double feas_tol = detail::kPivotTol * std::max(1.0, rhs.size() ? rhs.lpNorm<Eigen::Infinity>() : 0.0);

  if (n_art > 0) {
    for (int c = 0; c <= ncols; ++c) t.cost(c) = 0.0;
    for (int k = 0; k < n_art; ++k) {
      const int r = art_row[k];
      for (int c = 0; c < n_struct; ++c) t.cost(c) -= t.at(r, c);
      t.at(m, ncols) -= t.rhs(r);
    }
    detail::run_phase(t, basis, allowed, active_row, entering);
    if (-t.at(m, ncols) > feas_tol) {
      LpResult res;
      res.status = LpStatus::infeasible;
      return res;
    }
    // Drive artificials out of the basis; drop redundant rows.
    for (int r = 0; r < m; ++r) {
      if (basis[r] < n_struct) continue;
      int col = -1;
      for (int c = 0; c < n_struct; ++c) {
        if (std::abs(t.at(r, c)) > detail::kPivotTol) {
          col = c;
          break;
        }
      }
      if (col >= 0) {
        t.pivot(r, col);
        basis[r] = col;
      } else {
        active_row[r] = 0;
      }
    }
    for (int c = n_struct; c < ncols; ++c) allowed[c] = 0;
  }

  // Phase 2 cost row.
  const double sgn = sense == Sense::minimize ? 1.0 : -1.0;
  std::vector<double> cost(ncols, 0.0);
  for (int j = 0; j < d; ++j) {
    cost[j] = sgn * objective(j);
    cost[d + j] = -sgn * objective(j);
  }
  for (int c = 0; c < ncols; ++c) t.cost(c) = cost[c];
  t.at(m, ncols) = 0.0;
  for (int r = 0; r < m; ++r) {
    if (!active_row[r]) continue;
    const double cb = cost[basis[r]];
    if (cb == 0.0) continue;
    for (int c = 0; c <= ncols; ++c) t.at(m, c) -= cb * t.at(r, c);
  }

  LpResult res;
  const auto outcome = detail::run_phase(t, basis, allowed, active_row, entering);

  auto struct_to_z = [&](const std::vector<double>& w) {
    Vector z(d);
    for (int j = 0; j < d; ++j) z(j) = w[j] - w[d + j];
    return z;
  };

  if (outcome == detail::PhaseOutcome::unbounded) {
    std::vector<double> dir(ncols, 0.0);
    dir[entering] = 1.0;
    for (int r = 0; r < m; ++r)
      if (active_row[r]) dir[basis[r]] = -t.at(r, entering);
    res.status = LpStatus::unbounded;
    res.ray = struct_to_z(dir);
    const double nrm = res.ray.norm();
    if (nrm > 0) res.ray /= nrm;
    return res;
  }

  // Recompute the basic solution from the original data for accuracy.
  std::vector<int> rows, cols;
  for (int r = 0; r < m; ++r) {
    if (!active_row[r]) continue;
    rows.push_back(r);
    cols.push_back(basis[r]);
  }
  std::vector<double> w(ncols, 0.0);
  for (size_t k = 0; k < rows.size(); ++k) w[cols[k]] = std::max(0.0, t.rhs(rows[k]));
  if (!rows.empty()) {
    const int k = static_cast<int>(rows.size());
    Matrix B(k, k);
    Vector rb(k);
    bool has_art = false;
    for (int i = 0; i < k; ++i) {
      rb(i) = rhs(rows[i]);
      for (int j = 0; j < k; ++j) {
        if (cols[j] >= n_struct) {
          has_art = true;
          continue;
        }
        B(i, j) = S(rows[i], cols[j]);
      }
    }
    if (!has_art) {
      Eigen::FullPivLU<Matrix> lu(B);
      if (lu.isInvertible()) {
        Vector xb = lu.solve(rb);
        if (xb.minCoeff() >= -1e-9 && (B * xb - rb).lpNorm<Eigen::Infinity>() <= 1e-9 * std::max(1.0, rb.lpNorm<Eigen::Infinity>())) {
          for (int i = 0; i < k; ++i) w[cols[i]] = std::max(0.0, xb(i));
        }
      }
    }
  }
  res.status = LpStatus::optimal;
  res.point = struct_to_z(w);
  res.value = objective.dot(res.point);
  res.basis = basis;
  return res;
}

inline std::optional<Vector> feasible_point(const HPolyhedron& P) {
  auto r = lp_solve(Vector::Zero(P.dim), P, Sense::minimize);
  if (r.status == LpStatus::infeasible) return std::nullopt;
  return r.point;
}

inline bool is_empty(const HPolyhedron& P) { return !feasible_point(P).has_value(); }

} // namespace margsub
