#pragma once

#include <functional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "margsub/convexgeom.hpp"
#include "margsub/types.hpp"

namespace margsub {

/// One continuously differentiable piece f_i of a max-type objective.
class SmoothComponent {
public:
  enum class Kind { affine, quadratic, blackbox };
  using ValueFn = std::function<double(const Vector&, const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&, const Vector&)>;

  /// a.x + b.y + c
  static SmoothComponent affine(Vector a, Vector b, double c, std::string id = {}) {
    SmoothComponent s;
    s.kind_ = Kind::affine;
    s.n_ = a.size();
    s.m_ = b.size();
    s.lin_ = concat(a, b);
    s.c_ = c;
    s.id_ = std::move(id);
    return s;
  }

  /// 0.5 z'Qz + q.z + c with z = (x, y); Q must be symmetric.
  static SmoothComponent quadratic(Matrix Q, Vector q, double c, Eigen::Index n, std::string id = {}) {
    if (Q.rows() != Q.cols() || Q.rows() != q.size())
      throw DimensionError("quadratic component: Q must be square and match q");
    if (n < 1 || n >= q.size()) throw DimensionError("quadratic component: bad x-dimension");
    if ((Q - Q.transpose()).lpNorm<Eigen::Infinity>() > 1e-12)
      throw ValidationError("quadratic component: Q must be symmetric");
    SmoothComponent s;
    s.kind_ = Kind::quadratic;
    s.n_ = n;
    s.m_ = q.size() - n;
    s.Q_ = std::move(Q);
    s.lin_ = std::move(q);
    s.c_ = c;
    s.id_ = std::move(id);
    return s;
  }

  static SmoothComponent blackbox(Eigen::Index n, Eigen::Index m, ValueFn value, GradientFn gradient,
                                  std::string id = {}) {
    SmoothComponent s;
    s.kind_ = Kind::blackbox;
    s.n_ = n;
    s.m_ = m;
    s.value_fn_ = std::move(value);
    s.gradient_fn_ = std::move(gradient);
    s.id_ = std::move(id);
    return s;
  }

  Kind kind() const { return kind_; }
  const std::string& id() const { return id_; }
  Eigen::Index n() const { return n_; }
  Eigen::Index m() const { return m_; }

  /// Affine/quadratic linear coefficient (a, b) or q.
  const Vector& linear() const { return lin_; }
  const Matrix& hessian() const { return Q_; }
  double constant() const { return c_; }

  double value(const Vector& x, const Vector& y) const {
    require_dim(x, n_, "component x");
    require_dim(y, m_, "component y");
    switch (kind_) {
    case Kind::affine: return lin_.head(n_).dot(x) + lin_.tail(m_).dot(y) + c_;
    case Kind::quadratic: {
      const Vector z = concat(x, y);
      return 0.5 * z.dot(Q_ * z) + lin_.dot(z) + c_;
    }
    default: return value_fn_(x, y);
    }
  }

  /// Full gradient (grad_x, grad_y) in R^(n+m).
  Vector gradient(const Vector& x, const Vector& y) const {
    require_dim(x, n_, "component x");
    require_dim(y, m_, "component y");
    switch (kind_) {
    case Kind::affine: return lin_;
    case Kind::quadratic: return Q_ * concat(x, y) + lin_;
    default: {
      Vector g = gradient_fn_(x, y);
      require_dim(g, n_ + m_, "blackbox gradient");
      return g;
    }
    }
  }

private:
  SmoothComponent() = default;
  Kind kind_ = Kind::affine;
  Eigen::Index n_ = 0, m_ = 0;
  Vector lin_;
  Matrix Q_;
  double c_ = 0.0;
  ValueFn value_fn_;
  GradientFn gradient_fn_;
  std::string id_;
};

/// Largest relative deviation between the analytic gradient and central finite
/// differences (step h) over `samples` points drawn from [-scale, scale]^(n+m).
inline double gradient_consistency(const SmoothComponent& f, int samples, unsigned seed, double h = 1e-6,
                                   double scale = 2.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-scale, scale);
  const Eigen::Index n = f.n(), m = f.m();
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    Vector z(n + m);
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = U(rng);
    const Vector g = f.gradient(z.head(n), z.tail(m));
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      Vector zp = z, zm = z;
      zp(i) += h;
      zm(i) -= h;
      const double fd = (f.value(zp.head(n), zp.tail(m)) - f.value(zm.head(n), zm.tail(m))) / (2 * h);
      worst = std::max(worst, std::abs(fd - g(i)) / std::max(1.0, std::abs(g(i))));
    }
  }
  return worst;
}

/// f(x, y) = max_i f_i(x, y).
class MaxSmoothObjective {
public:
  MaxSmoothObjective() = default;
  explicit MaxSmoothObjective(std::vector<SmoothComponent> components) : components_(std::move(components)) {
    if (components_.empty()) throw ValidationError("objective: at least one component is required");
    n_ = components_.front().n();
    m_ = components_.front().m();
    for (size_t i = 0; i < components_.size(); ++i) {
      if (components_[i].n() != n_ || components_[i].m() != m_)
        throw ValidationError("objective[" + std::to_string(i) + "]: dimension mismatch");
    }
  }

  const std::vector<SmoothComponent>& components() const { return components_; }
  size_t size() const { return components_.size(); }
  Eigen::Index n() const { return n_; }
  Eigen::Index m() const { return m_; }

  bool all_affine() const {
    for (const auto& c : components_)
      if (c.kind() != SmoothComponent::Kind::affine) return false;
    return true;
  }

  double value(const Vector& x, const Vector& y) const {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& c : components_) best = std::max(best, c.value(x, y));
    return best;
  }

  std::vector<double> component_values(const Vector& x, const Vector& y) const {
    std::vector<double> out;
    out.reserve(components_.size());
    for (const auto& c : components_) out.push_back(c.value(x, y));
    return out;
  }

private:
  std::vector<SmoothComponent> components_;
  Eigen::Index n_ = 0, m_ = 0;
};

/// max_i f_i(x, y); throws DimensionError on mismatched inputs.
inline double eval_objective(const MaxSmoothObjective& obj, const Vector& x, const Vector& y) {
  require_dim(x, obj.n(), "eval_objective x");
  require_dim(y, obj.m(), "eval_objective y");
  return obj.value(x, y);
}

struct WholeSpace {};

struct ConstantSet {
  GeneratedConvexSet set;
};

/// Graph of F as a finite union of convex polyhedra in R^(n+m), z = (x, y).
struct PolyhedralUnionGraph {
  std::vector<HPolyhedron> pieces;
};

using SetValuedMapRep = std::variant<WholeSpace, ConstantSet, PolyhedralUnionGraph>;

inline const char* map_type_name(const SetValuedMapRep& F) {
  if (std::holds_alternative<WholeSpace>(F)) return "whole_space";
  if (std::holds_alternative<ConstantSet>(F)) return "constant";
  return "graph_union";
}

struct MarginalProblem {
  Eigen::Index n = 1;
  Eigen::Index m = 1;
  MaxSmoothObjective objective;
  SetValuedMapRep map = WholeSpace{};
  double lipschitz_y = 0.0;    ///< L1, uniform Lipschitz modulus of f(x, .)
  double penalty_excess = 2.0; ///< L' = penalty_excess * L1

  double lprime() const { return penalty_excess * lipschitz_y; }

  void validate() const {
    if (n < 1) throw ValidationError("n: must be >= 1");
    if (m < 1) throw ValidationError("m: must be >= 1");
    if (objective.size() == 0) throw ValidationError("objective: at least one component is required");
    if (objective.n() != n || objective.m() != m) throw ValidationError("objective: dimensions differ from n, m");
    if (!(lipschitz_y >= 0.0)) throw ValidationError("lipschitz_y: must be >= 0");
    if (!(penalty_excess > 1.0)) throw ValidationError("penalty_excess: must be > 1");
    if (const auto* c = std::get_if<ConstantSet>(&map)) {
      if (c->set.dim != m) throw ValidationError("map.vertices: dimension differs from m");
      if (c->set.is_empty()) throw ValidationError("map.vertices: constant set must be nonempty");
    }
    if (const auto* g = std::get_if<PolyhedralUnionGraph>(&map)) {
      if (g->pieces.empty()) throw ValidationError("map.pieces: at least one piece is required");
      for (size_t i = 0; i < g->pieces.size(); ++i) {
        const std::string where = "map.pieces[" + std::to_string(i) + "]";
        if (g->pieces[i].dim != n + m) throw ValidationError(where + ": dimension differs from n+m");
        if (is_empty(g->pieces[i])) throw ValidationError(where + ": piece is empty");
      }
    }
  }
};

/// The graph of F as polyhedral pieces in R^(n+m). WholeSpace is one piece
/// without constraints; a constant set C becomes R^n x C.
inline std::vector<HPolyhedron> graph_pieces(const MarginalProblem& p) {
  const Eigen::Index d = p.n + p.m;
  if (std::holds_alternative<WholeSpace>(p.map)) return {HPolyhedron::whole_space(d)};
  if (const auto* c = std::get_if<ConstantSet>(&p.map)) {
    const HPolyhedron H = to_halfspaces(c->set);
    Matrix A = Matrix::Zero(H.A.rows(), d);
    A.rightCols(p.m) = H.A;
    Matrix E = Matrix::Zero(H.E.rows(), d);
    E.rightCols(p.m) = H.E;
    return {HPolyhedron(std::move(A), H.b, std::move(E), H.e)};
  }
  return std::get<PolyhedralUnionGraph>(p.map).pieces;
}

/// { y : (x, y) in Q } for a piece Q in R^(n+m).
inline HPolyhedron piece_slice(const HPolyhedron& Q, Eigen::Index n, const Vector& x) {
  const Eigen::Index m = Q.dim - n;
  return HPolyhedron(Matrix(Q.A.rightCols(m)), Q.b - Q.A.leftCols(n) * x, Matrix(Q.E.rightCols(m)),
                     Q.e - Q.E.leftCols(n) * x);
}

enum class Tri { yes, no, unknown };

inline const char* to_string(Tri t) {
  switch (t) {
  case Tri::yes: return "yes";
  case Tri::no: return "no";
  default: return "unknown";
  }
}

struct StructuralReport {
  Tri values_compact = Tri::unknown;
  Tri graph_closed = Tri::yes;
  Tri objective_continuous = Tri::yes;
  Tri interior_of_domain = Tri::unknown;
  Tri inner_semicompactness_sufficient = Tri::unknown;
  Tri closedness_sufficient = Tri::unknown;
  std::vector<std::string> notes;
};

/// Checks the Weierstrass-type sufficient conditions for inner semicompactness
/// and the sufficient conditions for closedness of the solution map at xbar.
inline StructuralReport structural_assumptions_report(const MarginalProblem& p, const Vector& xbar) {
  require_dim(xbar, p.n, "structural_assumptions_report xbar");
  StructuralReport r;
  if (std::holds_alternative<WholeSpace>(p.map)) {
    r.values_compact = Tri::no;
    r.interior_of_domain = Tri::yes;
    r.notes.push_back("whole-space map has unbounded values");
  } else if (const auto* c = std::get_if<ConstantSet>(&p.map)) {
    r.values_compact = c->set.is_bounded() ? Tri::yes : Tri::no;
    r.interior_of_domain = Tri::yes;
    if (!c->set.is_bounded()) r.notes.push_back("constant set has recession directions");
  } else {
    const auto& pieces = std::get<PolyhedralUnionGraph>(p.map).pieces;
    bool bounded = true;
    for (size_t i = 0; i < pieces.size(); ++i) {
      // x-slices are bounded iff the y-recession cone { d : A_y d <= 0, E_y d = 0 } is {0}.
      const auto& Q = pieces[i];
      const auto rec = cone_generators(Matrix(Q.A.rightCols(p.m)), Matrix(Q.E.rightCols(p.m)), p.m);
      if (!rec.rays.empty() || !rec.lineality.empty()) {
        bounded = false;
        r.notes.push_back("piece " + std::to_string(i) + " has unbounded x-slices");
      }
    }
    r.values_compact = bounded ? Tri::yes : Tri::no;
    // Every piece meeting {xbar} x R^m should contain xbar in the interior of
    // its x-projection; then each piece's slice map is Hausdorff continuous.
    bool interior = true;
    bool touched = false;
    const double h = 1e-6;
    for (const auto& Q : pieces) {
      if (is_empty(piece_slice(Q, p.n, xbar))) continue;
      touched = true;
      for (Eigen::Index j = 0; j < p.n && interior; ++j) {
        for (double s : {-1.0, 1.0}) {
          Vector x = xbar;
          x(j) += s * h;
          if (is_empty(piece_slice(Q, p.n, x))) interior = false;
        }
      }
    }
    if (!touched) {
      r.interior_of_domain = Tri::no;
      r.notes.push_back("xbar is outside dom F");
    } else {
      r.interior_of_domain = interior ? Tri::yes : Tri::unknown;
      if (!interior) r.notes.push_back("xbar lies on the boundary of some piece's x-projection");
    }
  }
  if (r.values_compact == Tri::no) {
    r.inner_semicompactness_sufficient = Tri::no;
  } else if (r.values_compact == Tri::yes && r.interior_of_domain == Tri::yes) {
    r.inner_semicompactness_sufficient = Tri::yes;
  }
  // With compact values, a closed graph and xbar interior to every relevant
  // projection, phi is continuous at xbar.
  if (r.inner_semicompactness_sufficient == Tri::yes && r.graph_closed == Tri::yes &&
      r.objective_continuous == Tri::yes)
    r.closedness_sufficient = Tri::yes;
  return r;
}

} // namespace margsub
