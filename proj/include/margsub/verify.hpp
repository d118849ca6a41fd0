#pragma once

#include <array>
#include <atomic>
#include <exception>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "margsub/clarke.hpp"
#include "margsub/estimate.hpp"
#include "margsub/marginal.hpp"

namespace margsub {

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index is
/// handled exactly once, so results keyed by index match a serial run.
template <class Fn>
void parallel_for(size_t count, Fn&& fn, unsigned threads = 0) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<size_t>(threads, count));
  if (threads <= 1) {
    for (size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&]() {
      for (size_t i = next++; i < count && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

namespace detail {

inline double radical_inverse(unsigned long i, unsigned base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

inline unsigned nth_prime(size_t k) {
  static const unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  if (k >= std::size(primes)) throw ScaleLimitError("directions: dimension too large for the Halton sequence");
  return primes[k];
}

} // namespace detail

/// Deterministic unit directions: +-1 for n = 1, golden-angle points on the
/// circle for n = 2, a Fibonacci sphere for n = 3, and Halton points pushed
/// through Box-Muller for n >= 4.
inline std::vector<Vector> directions(Eigen::Index n, int count) {
  if (n < 1) throw DimensionError("directions: n must be >= 1");
  if (count < 1) throw ValidationError("directions: count must be >= 1");
  std::vector<Vector> out;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  if (n == 1) return {Vector::Constant(1, 1.0), Vector::Constant(1, -1.0)};
  for (int i = 0; i < count; ++i) {
    Vector u(n);
    if (n == 2) {
      u << std::cos(i * golden), std::sin(i * golden);
    } else if (n == 3) {
      const double z = 1.0 - (2.0 * i + 1.0) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      u << r * std::cos(i * golden), r * std::sin(i * golden), z;
    } else {
      for (Eigen::Index j = 0; j < n; j += 2) {
        const double a = detail::radical_inverse(static_cast<unsigned long>(i + 1), detail::nth_prime(j));
        const double b = detail::radical_inverse(static_cast<unsigned long>(i + 1), detail::nth_prime(j + 1));
        const double rad = std::sqrt(-2.0 * std::log(a));
        u(j) = rad * std::cos(2.0 * std::numbers::pi * b);
        if (j + 1 < n) u(j + 1) = rad * std::sin(2.0 * std::numbers::pi * b);
      }
    }
    out.push_back(u / u.norm());
  }
  return out;
}

enum class Verdict { holds, violated, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
  case Verdict::holds: return "holds";
  case Verdict::violated: return "violated";
  default: return "inconclusive: empty estimate";
  }
}

struct DirectionResult {
  Vector u;
  double phi_dd = 0.0; ///< sampled generalized directional derivative of phi
  Extended sigma;      ///< support of the estimate
  double margin = 0.0; ///< sigma - phi_dd (+inf when sigma is +inf)
  bool unbounded = false;
};

struct InclusionReport {
  std::string problem;
  Vector xbar;
  EstimateForm form = EstimateForm::coderivative;
  std::vector<DirectionResult> directions;
  Verdict verdict = Verdict::inconclusive;
  double tol_incl = 1e-6;
  SampledLimsupParams sampling;
  std::vector<Provenance> provenance;
  std::vector<Vector> unbounded_directions;
  double lipschitz_evidence = 0.0; ///< largest sampled |difference quotient|

  /// Direction with the smallest margin, if any.
  const DirectionResult* worst() const {
    const DirectionResult* w = nullptr;
    for (const auto& d : directions)
      if (!w || d.margin < w->margin) w = &d;
    return w;
  }
};

struct InclusionOptions {
  int directions = 64;
  double tol_incl = 1e-6;
  SampledLimsupParams sampling;
  std::vector<Vector> extra_directions;
  unsigned threads = 0;
  std::string label = "problem";
};

/// Tests the inclusion of the Clarke subdifferential of phi at x̄ in the
/// estimate by comparing support values with sampled directional derivatives.
inline InclusionReport inclusion_check(const MarginalProblem& p, const Vector& xbar, const EstimateSet& estimate,
                                       const InclusionOptions& opt = {}) {
  require_dim(xbar, p.n, "inclusion_check x");
  if (!(opt.tol_incl >= 0.0)) throw ValidationError("tol_incl must be nonnegative");
  InclusionReport rep;
  rep.problem = opt.label;
  rep.xbar = xbar;
  rep.form = estimate.form;
  rep.tol_incl = opt.tol_incl;
  rep.sampling = opt.sampling;
  rep.provenance = estimate.provenance;
  if (estimate.empty()) {
    rep.verdict = Verdict::inconclusive;
    return rep;
  }
  auto dirs = directions(p.n, opt.directions);
  for (const auto& u : opt.extra_directions) {
    require_dim(u, p.n, "extra direction");
    dirs.push_back(u);
  }
  const ScalarFn phi = [&p](const Vector& x) { return phi_value(p, x); };
  const auto base = limsup_base_points(xbar, opt.sampling);
  std::vector<double> base_values(base.size());
  parallel_for(base.size(), [&](size_t i) { base_values[i] = phi(base[i]); }, opt.threads);

  rep.directions.resize(dirs.size());
  std::vector<double> lip(dirs.size(), 0.0);
  parallel_for(
      dirs.size(),
      [&](size_t i) {
        auto& d = rep.directions[i];
        d.u = dirs[i];
        const auto s = gen_dir_deriv_sampled_detail(phi, xbar, dirs[i], opt.sampling, &base_values);
        d.phi_dd = s.value;
        lip[i] = s.max_abs_quotient;
        d.sigma = estimate.oracle(dirs[i]);
        d.unbounded = d.sigma.is_plus_infinity();
        d.margin = d.sigma.as_double() - d.phi_dd;
      },
      opt.threads);
  rep.verdict = Verdict::holds;
  for (size_t i = 0; i < dirs.size(); ++i) {
    rep.lipschitz_evidence = std::max(rep.lipschitz_evidence, lip[i]);
    if (rep.directions[i].unbounded) rep.unbounded_directions.push_back(dirs[i]);
    if (!(rep.directions[i].margin >= -opt.tol_incl)) rep.verdict = Verdict::violated;
  }
  return rep;
}

struct Claim1Record {
  Vector u;
  double lhs = 0.0; ///< sampled generalized directional derivative of phi
  Extended rhs;     ///< max over candidates of min over admissible v of f°
  bool holds = false;
};

namespace detail {

/// min over v with (u, v) in T of max_i <g_i, (u, v)>; +inf if no v is admissible.
inline Extended claim1_inner(const std::vector<Vector>& grads, const HPolyhedron& T, const Vector& u) {
  const Eigen::Index n = u.size();
  const Eigen::Index m = grads.front().size() - n;
  HPolyhedron P(m + 1);
  for (const auto& g : grads) {
    Vector row(m + 1);
    row.head(m) = g.tail(m);
    row(m) = -1.0;
    P.add_inequality(row, -g.head(n).dot(u));
  }
  for (Eigen::Index i = 0; i < T.A.rows(); ++i) {
    Vector row = Vector::Zero(m + 1);
    row.head(m) = T.A.row(i).tail(m).transpose();
    P.add_inequality(row, T.b(i) - T.A.row(i).head(n).dot(u));
  }
  for (Eigen::Index i = 0; i < T.E.rows(); ++i) {
    Vector row = Vector::Zero(m + 1);
    row.head(m) = T.E.row(i).tail(m).transpose();
    P.add_equality(row, T.e(i) - T.E.row(i).head(n).dot(u));
  }
  auto r = lp_solve(Vector::Unit(m + 1, m), P, Sense::minimize);
  if (r.status == LpStatus::infeasible) return Extended::plus_infinity();
  if (r.status == LpStatus::unbounded) return Extended::minus_infinity();
  return Extended::finite(r.value);
}

} // namespace detail

/// Upper bound on the sampled directional derivative of phi through the
/// directional derivatives of f at solution candidates; the inner minimum
/// ranges over v with (u, v) tangent to the graph of F.
inline std::vector<Claim1Record> claim1_check(const MarginalProblem& p, const Vector& xbar,
                                              const std::vector<Vector>& dirs, const SampledLimsupParams& sampling = {},
                                              double tol = 1e-6) {
  const auto cands = solution_set(p, xbar);
  const auto pieces = graph_pieces(p);
  std::vector<std::pair<std::vector<Vector>, HPolyhedron>> data;
  for (const auto& ybar : cands.points) {
    const auto G = clarke_subdiff_max(p.objective, xbar, ybar);
    const auto T = tangent_cone_polyunion(pieces, concat(xbar, ybar));
    data.emplace_back(G.vertices, to_halfspaces(GeneratedConvexSet::cone(p.n + p.m, T.all())));
  }
  const ScalarFn phi = [&p](const Vector& x) { return phi_value(p, x); };
  std::vector<Claim1Record> out;
  for (const auto& u : dirs) {
    Claim1Record r;
    r.u = u;
    r.lhs = gen_dir_deriv_sampled(phi, xbar, u, sampling);
    r.rhs = Extended::minus_infinity();
    for (const auto& [g, T] : data) r.rhs = max(r.rhs, detail::claim1_inner(g, T, u));
    r.holds = r.lhs <= r.rhs.as_double() + tol;
    out.push_back(std::move(r));
  }
  return out;
}

namespace detail {

inline HPolyhedron polygon(std::initializer_list<std::array<double, 3>> rows) {
  HPolyhedron P(2);
  for (const auto& r : rows) P.add_inequality(vec({r[0], r[1]}), r[2]);
  return P;
}

} // namespace detail

/// The two canned instances with f(x, y) = y: F1(x) = {|x|} and
/// F2(x) = {|x|} + [0, 1], both encoded as two graph pieces.
inline MarginalProblem example311_problem(int which) {
  MarginalProblem p;
  p.n = 1;
  p.m = 1;
  p.objective = MaxSmoothObjective({SmoothComponent::affine(vec({0.0}), vec({1.0}), 0.0, "y")});
  PolyhedralUnionGraph g;
  if (which == 1) {
    g.pieces = {detail::polygon({{1, -1, 0}, {-1, 1, 0}, {-1, 0, 0}}),
                detail::polygon({{1, 1, 0}, {-1, -1, 0}, {1, 0, 0}})};
  } else if (which == 2) {
    g.pieces = {detail::polygon({{-1, 0, 0}, {1, -1, 0}, {-1, 1, 1}}),
                detail::polygon({{1, 0, 0}, {-1, -1, 0}, {1, 1, 1}})};
  } else {
    throw ValidationError("example311: case must be 1 or 2");
  }
  p.map = g;
  p.lipschitz_y = 1.0;
  p.penalty_excess = 2.0;
  p.validate();
  return p;
}

struct Example311Result {
  int which = 0;
  MarginalProblem problem;
  SolutionCandidates solutions;
  std::vector<NormalConeResult> normal_cones; ///< one per solution candidate
  std::vector<GeneratedConvexSet> coderivatives; ///< at y* = 1, one per candidate
  EstimateSet estimate;
  InclusionReport report;
};

/// Reproduces both canned cases end to end and checks the expected values;
/// any failed expectation throws VerificationError naming the quantity.
inline Example311Result example311(int which, double xbar_value = 0.0, const InclusionOptions& opt = {}) {
  Example311Result r;
  r.which = which;
  r.problem = example311_problem(which);
  const auto& p = r.problem;
  auto fail = [&](const std::string& what) {
    throw VerificationError("example311 case " + std::to_string(which) + ": " + what);
  };

  for (int i = 0; i <= 100; ++i) {
    const double x = -1.0 + 0.02 * i;
    const double v = phi_value(p, vec({x}));
    if (std::abs(v - std::abs(x)) > 1e-12)
      fail("phi(" + std::to_string(x) + ") = " + std::to_string(v) + ", expected |x|");
  }

  const Vector xbar = vec({xbar_value});
  r.solutions = solution_set(p, xbar);
  const auto pieces = graph_pieces(p);
  for (const auto& y : r.solutions.points) {
    const Vector z = concat(xbar, y);
    r.normal_cones.push_back(normal_cone(pieces, z));
    r.coderivatives.push_back(coderivative(pieces, p.n, z, vec({1.0})));
  }
  r.estimate = coderivative_estimate(p, xbar);
  InclusionOptions o = opt;
  o.label = "example311-case" + std::to_string(which);
  r.report = inclusion_check(p, xbar, r.estimate, o);

  const Vector up = vec({1.0}), dn = vec({-1.0});
  const Extended sp = r.estimate.oracle(up), sn = r.estimate.oracle(dn);
  const Extended gp = support(r.estimate.value, up), gn = support(r.estimate.value, dn);
  if (xbar_value == 0.0) {
    if (r.solutions.points.size() != 1 || std::abs(r.solutions.points[0](0)) > 1e-12)
      fail("S(0) differs from {0}");
    if (which == 1) {
      const auto& nc = r.normal_cones[0];
      if (!nc.tangent.rays.empty() || !nc.tangent.lineality.empty()) fail("tangent cone at the origin is not {0}");
      if (nc.halfspaces.A.rows() != 0 || nc.halfspaces.E.rows() != 0) fail("normal cone at the origin is not R^2");
      if (!sp.is_plus_infinity() || !sn.is_plus_infinity()) fail("estimate support is finite at +-1");
      if (!gp.is_plus_infinity() || !gn.is_plus_infinity()) fail("generated estimate is bounded");
    } else {
      for (const auto& [name, val] : {std::pair{"oracle sigma(+1)", sp}, std::pair{"oracle sigma(-1)", sn},
                                      std::pair{"generated sigma(+1)", gp}, std::pair{"generated sigma(-1)", gn}})
        if (!val.is_finite() || std::abs(val.value() - 1.0) > 1e-9)
          fail(std::string(name) + " = " + to_string(val) + ", expected 1");
    }
  } else {
    const double s = xbar_value > 0 ? 1.0 : -1.0;
    for (const auto& [name, val, want] : {std::tuple{"sigma(+1)", sp, s}, std::tuple{"sigma(-1)", sn, -s}})
      if (!val.is_finite() || std::abs(val.value() - want) > 1e-9)
        fail(std::string(name) + " = " + to_string(val) + ", expected " + std::to_string(want));
  }
  if (r.report.verdict != Verdict::holds) fail(std::string("inclusion verdict is ") + to_string(r.report.verdict));
  return r;
}

enum class InstanceClass { max_affine_polyhedral, max_affine_whole_space };

inline InstanceClass instance_class_from_string(const std::string& s) {
  if (s == "max_affine_polyhedral") return InstanceClass::max_affine_polyhedral;
  if (s == "max_affine_whole_space") return InstanceClass::max_affine_whole_space;
  throw ValidationError("unknown instance class '" + s + "'");
}

/// Seeded random max-of-affine instance. Polyhedral graphs are unions of
/// 1-3 boxes (each containing x in [-0.5, 0.5]) with 0-2 extra cuts that keep
/// (0, centre) strictly inside; whole-space objectives keep 0 in conv{b_i}.
inline MarginalProblem random_instance(std::uint64_t seed, Eigen::Index n, Eigen::Index m,
                                       InstanceClass cls = InstanceClass::max_affine_polyhedral) {
  if (n < 1 || m < 1 || n > 4 || m > 4) throw ValidationError("random_instance: n and m must lie in [1, 4]");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(m), static_cast<std::uint32_t>(cls)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  const int s = pick(2, 4);
  std::vector<Vector> as, bs;
  std::vector<double> cs;
  for (int i = 0; i < s; ++i) {
    Vector a(n), b(m);
    for (auto& v : a.reshaped()) v = U(rng);
    for (auto& v : b.reshaped()) v = U(rng);
    as.push_back(a);
    bs.push_back(b);
    cs.push_back(U(rng));
  }
  if (cls == InstanceClass::max_affine_whole_space) {
    Vector mean = Vector::Zero(m);
    double wsum = 0.0;
    std::vector<double> w(static_cast<size_t>(s));
    for (int i = 0; i < s; ++i) {
      w[i] = uni(0.2, 1.0);
      mean += w[i] * bs[i];
      wsum += w[i];
    }
    mean /= wsum;
    double big = 0.0;
    for (auto& b : bs) {
      b -= mean;
      big = std::max(big, b.lpNorm<Eigen::Infinity>());
    }
    if (big > 2.0)
      for (auto& b : bs) b *= 2.0 / big;
  }
  std::vector<SmoothComponent> comps;
  double lip = 0.5;
  for (int i = 0; i < s; ++i) {
    lip = std::max(lip, bs[i].norm());
    comps.push_back(SmoothComponent::affine(as[i], bs[i], cs[i], "f" + std::to_string(i + 1)));
  }
  MarginalProblem p;
  p.n = n;
  p.m = m;
  p.objective = MaxSmoothObjective(std::move(comps));
  p.lipschitz_y = lip;
  p.penalty_excess = 2.0;
  if (cls == InstanceClass::max_affine_whole_space) {
    p.map = WholeSpace{};
  } else {
    const Eigen::Index d = n + m;
    PolyhedralUnionGraph g;
    const int pieces = pick(1, 3);
    for (int q = 0; q < pieces; ++q) {
      HPolyhedron Q(d);
      for (Eigen::Index i = 0; i < n; ++i) {
        Q.add_inequality(Vector::Unit(d, i), uni(0.5, 1.5));
        Q.add_inequality(-Vector::Unit(d, i), uni(0.5, 1.5));
      }
      Vector centre(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        centre(i) = uni(-1.0, 1.0);
        const double half = uni(0.3, 1.0);
        Q.add_inequality(Vector::Unit(d, n + i), centre(i) + half);
        Q.add_inequality(-Vector::Unit(d, n + i), -(centre(i) - half));
      }
      const int cuts = pick(0, 2);
      const Vector z0 = concat(Vector::Zero(n), centre);
      for (int c = 0; c < cuts; ++c) {
        Vector h(d);
        for (auto& v : h.reshaped()) v = std::normal_distribution<double>(0.0, 1.0)(rng);
        h /= h.norm();
        Q.add_inequality(h, h.dot(z0) + uni(0.3, 1.0));
      }
      g.pieces.push_back(std::move(Q));
    }
    p.map = std::move(g);
  }
  p.validate();
  return p;
}

/// Sampling used by the fuzz suite. Random instances can have kinks of phi a
/// few thousandths away from x̄; the default radii would straddle them.
inline SampledLimsupParams fuzz_sampling() {
  SampledLimsupParams s;
  s.radii = {1e-4, 1e-5, 1e-6};
  s.steps = {1e-5, 1e-6, 1e-7};
  return s;
}

/// Dimensions (n, m) in [1, 3]^2 assigned to a fuzz seed.
inline std::pair<Eigen::Index, Eigen::Index> fuzz_dims(std::uint64_t seed) {
  return {1 + static_cast<Eigen::Index>(seed % 3), 1 + static_cast<Eigen::Index>((seed / 3) % 3)};
}

/// Coderivative-form inclusion checks at x̄ = 0 on `count` random polyhedral
/// instances with seeds first_seed, first_seed + 1, ...
inline std::vector<InclusionReport> run_fuzz(int count, std::uint64_t first_seed, InclusionOptions opt = {}) {
  if (count < 1) throw ValidationError("fuzz: count must be >= 1");
  std::vector<InclusionReport> out;
  for (int i = 0; i < count; ++i) {
    const std::uint64_t seed = first_seed + static_cast<std::uint64_t>(i);
    const auto [n, m] = fuzz_dims(seed);
    const auto p = random_instance(seed, n, m);
    const Vector x0 = Vector::Zero(n);
    opt.label = "random-seed-" + std::to_string(seed);
    out.push_back(inclusion_check(p, x0, coderivative_estimate(p, x0), opt));
  }
  return out;
}

} // namespace margsub
