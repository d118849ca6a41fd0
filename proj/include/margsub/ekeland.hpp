#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "margsub/convexgeom.hpp"

namespace margsub {

struct GrowthPolicy {
  double initial_radius = 1.0;
  double factor = 2.0;
  int max_growths = 64;
};

/// Convex, continuous, bounded-below function with first-order information.
struct ConvexOracle {
  std::string name;
  Eigen::Index dim = 1;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> subgradient;
  /// Exact subdifferential, if known; otherwise a local hull of subgradients is used.
  std::function<GeneratedConvexSet(const Vector&)> subdifferential;
  double lower_bound = 0.0;
  GrowthPolicy growth;
};

/// Midpoint and subgradient inequalities on seeded random pairs in [-box, box]^m.
inline void convexity_spot_check(const ConvexOracle& g, int pairs = 64, unsigned seed = 7, double box = 4.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-box, box);
  for (int s = 0; s < pairs; ++s) {
    Vector a(g.dim), b(g.dim);
    for (Eigen::Index i = 0; i < g.dim; ++i) {
      a(i) = U(rng);
      b(i) = U(rng);
    }
    const double ga = g.value(a), gb = g.value(b), gm = g.value(0.5 * (a + b));
    const double scale = std::max({1.0, std::abs(ga), std::abs(gb)});
    if (gm > 0.5 * ga + 0.5 * gb + 1e-9 * scale)
      throw ConvexityError(g.name + ": midpoint inequality fails");
    if (gb < ga + g.subgradient(a).dot(b - a) - 1e-9 * scale)
      throw ConvexityError(g.name + ": subgradient inequality fails");
    if (ga < g.lower_bound - 1e-9 * scale) throw ConvexityError(g.name + ": value below the stated lower bound");
  }
}

struct BoxMinimum {
  Vector point;
  double value = 0.0;
  double lower = 0.0; ///< certified lower bound of the function on the box
  bool on_boundary = false;
};

namespace detail {

/// Minimizes a convex function of one variable on [lo, hi] by bisection on the
/// sign of a subgradient.
inline BoxMinimum bisect_1d(const std::function<double(double)>& f, const std::function<double(double)>& df,
                            double lo, double hi) {
  BoxMinimum out;
  auto finish = [&](double t) {
    out.point = Vector::Constant(1, t);
    out.value = f(t);
    out.lower = out.value;
    const double tol = 1e-12 * std::max(1.0, hi - lo);
    out.on_boundary = (t - lo) <= tol || (hi - t) <= tol;
    return out;
  };
  if (df(lo) >= 0.0) return finish(lo);
  if (df(hi) <= 0.0) return finish(hi);
  double a = lo, b = hi;
  for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a) + std::abs(b)); ++it) {
    const double mid = 0.5 * (a + b);
    const double s = df(mid);
    if (s == 0.0) return finish(mid);
    (s > 0.0 ? b : a) = mid;
  }
  double best = a;
  for (double t : {0.5 * (a + b), b})
    if (f(t) < f(best)) best = t;
  return finish(best);
}

/// Kelley cutting planes on the box [lo, hi]; stops when the certified gap is
/// at most `gap`.
inline BoxMinimum kelley(const std::function<double(const Vector&)>& f, const std::function<Vector(const Vector&)>& df,
                         const Vector& lo, const Vector& hi, double gap, int max_iter = 3000) {
  const Eigen::Index m = lo.size();
  HPolyhedron P(m + 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    P.add_inequality(Vector::Unit(m + 1, i), hi(i));
    P.add_inequality(-Vector::Unit(m + 1, i), -lo(i));
  }
  Vector w = 0.5 * (lo + hi);
  BoxMinimum best;
  best.value = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    const double fw = f(w);
    const Vector s = df(w);
    if (fw < best.value) {
      best.value = fw;
      best.point = w;
    }
    Vector row(m + 1);
    row.head(m) = s;
    row(m) = -1.0;
    P.add_inequality(row, s.dot(w) - fw);
    auto r = lp_solve(Vector::Unit(m + 1, m), P, Sense::minimize);
    if (!r.optimal()) throw NumericalError("kelley: cutting-plane LP failed");
    best.lower = r.value;
    if (best.value - best.lower <= gap) break;
    if (it + 1 == max_iter) throw NumericalError("kelley: iteration budget exhausted before the requested accuracy");
    w = r.point.head(m);
  }
  const double tol = 1e-9 * std::max(1.0, (hi - lo).maxCoeff());
  best.on_boundary = ((best.point - lo).minCoeff() <= tol) || ((hi - best.point).minCoeff() <= tol);
  return best;
}

inline BoxMinimum box_minimize(const std::function<double(const Vector&)>& f,
                               const std::function<Vector(const Vector&)>& df, const Vector& lo, const Vector& hi,
                               double gap) {
  if (lo.size() == 1) {
    auto f1 = [&](double t) { return f(Vector::Constant(1, t)); };
    auto d1 = [&](double t) { return df(Vector::Constant(1, t))(0); };
    return bisect_1d(f1, d1, lo(0), hi(0));
  }
  return kelley(f, df, lo, hi, gap);
}

inline GeneratedConvexSet local_subdifferential(const ConvexOracle& g, const Vector& v, double radius) {
  if (g.subdifferential) return g.subdifferential(v);
  std::vector<Vector> subs{g.subgradient(v)};
  for (Eigen::Index i = 0; i < g.dim; ++i) {
    subs.push_back(g.subgradient(v + radius * Vector::Unit(g.dim, i)));
    subs.push_back(g.subgradient(v - radius * Vector::Unit(g.dim, i)));
  }
  return GeneratedConvexSet(g.dim, std::move(subs));
}

inline Vector min_norm_point(const GeneratedConvexSet& S) {
  if (S.dim == 1) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& v : S.vertices) {
      lo = std::min(lo, v(0));
      hi = std::max(hi, v(0));
    }
    return Vector::Constant(1, std::clamp(0.0, lo, hi));
  }
  return project_point(to_halfspaces(S), Vector::Zero(S.dim));
}

} // namespace detail

struct EkelandRecord {
  int k = 0;
  Vector y;
  double lambda = 0.0;
  Vector v;
  Vector ystar;
  double g_y = 0.0;
  double g_v = 0.0;
};

struct EkelandRun {
  std::vector<EkelandRecord> records;
  double inf_estimate = 0.0;
  bool attained = false;           ///< an interior box minimizer was found
  bool likely_unattained = false;  ///< boundary hits on 5 consecutive growths
};

/// Ekeland sequences for a convex oracle: y_k is a 1/(2k)-minimizer from the
/// box search, lambda_k = |y_k| + 1, v_k minimizes g + |. - y_k|/(k lambda_k),
/// and y_k* is the minimum-norm element of the subdifferential at v_k.
inline EkelandRun ekeland_sequences(const ConvexOracle& g, int K, double inf_tol = 1e-10) {
  if (K < 1) throw PreconditionError("ekeland: K must be >= 1");
  if (!(inf_tol > 0.0)) throw PreconditionError("ekeland: inf_tol must be positive");
  convexity_spot_check(g);
  const Eigen::Index m = g.dim;
  EkelandRun run;

  std::vector<BoxMinimum> boxes;
  double R = g.growth.initial_radius;
  int boundary_streak = 0;
  bool settled = false;
  for (int j = 0; j <= g.growth.max_growths; ++j, R *= g.growth.factor) {
    const Vector lo = Vector::Constant(m, -R), hi = Vector::Constant(m, R);
    auto bm = detail::box_minimize(g.value, g.subgradient, lo, hi, inf_tol / 2);
    boxes.push_back(bm);
    if (!bm.on_boundary) {
      run.attained = true;
      settled = true;
      break;
    }
    if (++boundary_streak >= 5) run.likely_unattained = true;
    if (bm.value - g.lower_bound <= inf_tol / 2) {
      settled = true;
      break;
    }
  }
  if (!settled) throw NumericalError("ekeland: growth budget exhausted before the infimum was bracketed");
  run.inf_estimate = boxes.back().value;
  for (const auto& b : boxes) run.inf_estimate = std::min(run.inf_estimate, b.value);

  for (int k = 1; k <= K; ++k) {
    EkelandRecord rec;
    rec.k = k;
    const double target = run.inf_estimate + 1.0 / (2.0 * k);
    for (const auto& b : boxes)
      if (b.value <= target) {
        rec.y = b.point;
        rec.g_y = b.value;
        break;
      }
    rec.lambda = rec.y.norm() + 1.0;
    const double c = 1.0 / (k * rec.lambda);

    // Perturbed problem; its minimizers lie within lambda of y_k.
    const Vector yk = rec.y;
    auto h = [&](const Vector& w) { return g.value(w) + c * (w - yk).norm(); };
    auto dh = [&](const Vector& w) {
      Vector s = g.subgradient(w);
      const double d = (w - yk).norm();
      if (d > 0.0) s += c * (w - yk) / d;
      return s;
    };
    const Vector ystar_at_y = detail::min_norm_point(detail::local_subdifferential(g, yk, 1e-10));
    if (ystar_at_y.norm() <= c) {
      rec.v = yk;
      rec.ystar = ystar_at_y;
    } else {
      const Vector lo = yk - Vector::Constant(m, rec.lambda), hi = yk + Vector::Constant(m, rec.lambda);
      auto bm = detail::box_minimize(h, dh, lo, hi, 1e-10);
      rec.v = h(yk) <= bm.value ? yk : bm.point;
      rec.ystar = detail::min_norm_point(detail::local_subdifferential(g, rec.v, 1e-10));
    }
    rec.g_v = g.value(rec.v);
    if (rec.ystar.norm() > c * (1.0 + 1e-6) + 1e-12)
      throw NumericalError("ekeland: no subgradient within the required norm bound at k = " + std::to_string(k));
    run.records.push_back(std::move(rec));
  }
  return run;
}

/// y-projection of the face of G maximizing <(u, v), .>, i.e. the
/// subdifferential of v -> sigma_G(u, v) at v.
inline GeneratedConvexSet support_projection_subdiff(const GeneratedConvexSet& G, const Vector& ubar,
                                                     const Vector& vbar) {
  if (G.is_empty() || !G.is_bounded()) throw PreconditionError("support_projection_subdiff: G must be a polytope");
  const Eigen::Index n = ubar.size(), m = G.dim - n;
  require_dim(vbar, m, "support_projection_subdiff v");
  const Vector w = concat(ubar, vbar);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& g : G.vertices) best = std::max(best, g.dot(w));
  std::vector<Vector> ys;
  for (const auto& g : G.vertices)
    if (g.dot(w) >= best - 1e-9 * std::max(1.0, std::abs(best))) {
      const Vector y = g.tail(m);
      if (!detail::near_duplicate(ys, y, 1e-12)) ys.push_back(y);
    }
  return GeneratedConvexSet(m, std::move(ys));
}

/// v -> sigma_G(u, v) as a convex oracle. Requires the function to be bounded
/// below, i.e. 0 in the y-projection of G.
inline ConvexOracle support_projection_oracle(const GeneratedConvexSet& G, const Vector& ubar) {
  const Eigen::Index n = ubar.size(), m = G.dim - n;
  HPolyhedron P(m + 1);
  for (const auto& g : G.vertices) {
    Vector row(m + 1);
    row.head(m) = g.tail(m);
    row(m) = -1.0;
    P.add_inequality(row, -g.head(n).dot(ubar));
  }
  auto r = lp_solve(Vector::Unit(m + 1, m), P, Sense::minimize);
  if (!r.optimal()) throw PreconditionError("support_projection_oracle: function is not bounded below");
  ConvexOracle o;
  o.name = "support-projection";
  o.dim = m;
  o.value = [G, ubar](const Vector& v) { return support(G, concat(ubar, v)).value(); };
  o.subgradient = [G, ubar](const Vector& v) { return support_projection_subdiff(G, ubar, v).vertices.front(); };
  o.subdifferential = [G, ubar](const Vector& v) { return support_projection_subdiff(G, ubar, v); };
  o.lower_bound = r.value;
  return o;
}

inline ConvexOracle gallery_oracle(const std::string& name) {
  ConvexOracle o;
  o.name = name;
  o.dim = 1;
  if (name == "quadratic") {
    o.value = [](const Vector& v) { return v(0) * v(0); };
    o.subgradient = [](const Vector& v) { return Vector::Constant(1, 2.0 * v(0)); };
    o.subdifferential = [](const Vector& v) { return GeneratedConvexSet::point(Vector::Constant(1, 2.0 * v(0))); };
    o.lower_bound = 0.0;
  } else if (name == "abs-plus-one") {
    o.value = [](const Vector& v) { return std::abs(v(0)) + 1.0; };
    o.subgradient = [](const Vector& v) {
      return Vector::Constant(1, v(0) > 0 ? 1.0 : (v(0) < 0 ? -1.0 : 0.0));
    };
    o.subdifferential = [](const Vector& v) {
      if (v(0) != 0.0) return GeneratedConvexSet::point(Vector::Constant(1, v(0) > 0 ? 1.0 : -1.0));
      return GeneratedConvexSet(1, {Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)});
    };
    o.lower_bound = 1.0;
  } else if (name == "exp-neg") {
    o.value = [](const Vector& v) { return std::exp(-v(0)); };
    o.subgradient = [](const Vector& v) { return Vector::Constant(1, -std::exp(-v(0))); };
    o.subdifferential = [](const Vector& v) { return GeneratedConvexSet::point(Vector::Constant(1, -std::exp(-v(0)))); };
    o.lower_bound = 0.0;
  } else {
    throw ValidationError("unknown gallery function '" + name + "' (expected quadratic, abs-plus-one, exp-neg)");
  }
  return o;
}

inline std::vector<std::string> gallery_names() { return {"quadratic", "abs-plus-one", "exp-neg"}; }

} // namespace margsub
