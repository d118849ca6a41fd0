// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "margsub/margsub.hpp"

using namespace margsub;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

class Check {
public:
  void require(bool cond, const std::string& what) {
    if (!cond && failures_++ < 3) msg_ << (msg_.tellp() > 0 ? "; " : "") << what;
  }
  Outcome done(const std::string& summary) const {
    if (failures_ == 0) return {true, summary};
    return {false, std::to_string(failures_) + " failure(s): " + msg_.str()};
  }

private:
  int failures_ = 0;
  std::ostringstream msg_;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Vector random_vector(std::mt19937_64& rng, Eigen::Index d, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> U(lo, hi);
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = U(rng);
  return v;
}

// sigma at u of {x : (x, 0) in conv V} by an LP over convex weights; nullopt if empty.
std::optional<double> slice_support(const std::vector<Vector>& V, Eigen::Index n, const Vector& u) {
  const Eigen::Index k = static_cast<Eigen::Index>(V.size()), m = V.front().size() - n;
  HPolyhedron P(k);
  for (Eigen::Index j = 0; j < k; ++j) P.add_inequality(-Vector::Unit(k, j), 0);
  P.add_equality(Vector::Ones(k), 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    Vector row(k);
    for (Eigen::Index j = 0; j < k; ++j) row(j) = V[j](n + i);
    P.add_equality(row, 0);
  }
  Vector obj(k);
  for (Eigen::Index j = 0; j < k; ++j) obj(j) = V[j].head(n).dot(u);
  const auto r = lp_solve(obj, P, Sense::maximize);
  if (!r.optimal()) return std::nullopt;
  return r.value;
}

Outcome criterion1() {
  Check c;
  const auto p = example311_problem(2);
  const auto e = coderivative_estimate(p, vec({0}));
  // The marginal function is |x|, whose Clarke subdifferential at 0 is [-1, 1].
  for (double s : {1.0, -1.0}) {
    const Vector u = vec({s});
    const Extended o = e.oracle(u), g = support(e.value, u);
    c.require(o.is_finite() && std::abs(o.value() - 1.0) <= 1e-9, "oracle sigma(" + num(s) + ") != 1");
    c.require(g.is_finite() && std::abs(g.value() - 1.0) <= 1e-9, "generated sigma(" + num(s) + ") != 1");
  }
  return c.done("sigma(+1) = sigma(-1) = 1, estimate = [-1, 1]");
}

Outcome criterion2() {
  Check c;
  const auto p = example311_problem(1);
  const auto nc = normal_cone(graph_pieces(p), vec({0, 0}));
  c.require(nc.tangent.rays.empty() && nc.tangent.lineality.empty(), "tangent cone is not {0}");
  c.require(nc.halfspaces.A.rows() == 0 && nc.halfspaces.E.rows() == 0, "normal cone has constraints");
  for (const auto& u : {vec({1, 0}), vec({-1, 0}), vec({0, 1}), vec({0, -1})})
    c.require(support(nc.cone, u).is_plus_infinity(), "normal cone bounded in some axis direction");
  const auto e = coderivative_estimate(p, vec({0}));
  for (double s : {1.0, -1.0}) {
    c.require(e.oracle(vec({s})).is_plus_infinity(), "oracle bounded at " + num(s));
    c.require(support(e.value, vec({s})).is_plus_infinity(), "generated estimate bounded at " + num(s));
  }
  return c.done("tangent cone {0}, normal cone R^2, estimate unbounded at +-1");
}

Outcome criterion3() {
  Check c;
  InclusionOptions opt;
  opt.directions = 64;
  opt.tol_incl = 1e-6;
  opt.sampling = fuzz_sampling();
  const auto reports = run_fuzz(100, 7, opt);
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& r : reports) {
    c.require(r.verdict == Verdict::holds, r.problem + " " + to_string(r.verdict));
    c.require(r.directions.size() >= 2, r.problem + " has too few directions");
    for (const auto& d : r.directions) {
      c.require(d.margin >= -1e-6, r.problem + " margin " + num(d.margin));
      worst = std::min(worst, d.margin);
    }
  }
  return c.done("100/100 hold, worst margin " + num(worst));
}

Outcome criterion4() {
  Check c;
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  int equivalences = 0;
  for (int t = 0; t < 200; ++t) {
    std::vector<Vector> V;
    for (int j = 0; j < 6; ++j) V.push_back(random_vector(rng, 4));
    // Three vertices whose y-parts surround a disc of radius 0.5 about 0.
    for (double a : {0.0, 2.0943951023931953, 4.1887902047863905})
      V.push_back((Vector(4) << random_vector(rng, 2), 1.5 * std::cos(a), 1.5 * std::sin(a)).finished());
    const GeneratedConvexSet G(4, V);
    const Vector u = random_vector(rng, 2);
    const auto ci = claim_identities(G, u);
    const auto oracle = slice_support(V, 2, u);
    c.require(ci.gap.has_value(), "polytope " + std::to_string(t) + ": a side is infinite");
    if (ci.gap) {
      worst = std::max(worst, *ci.gap);
      c.require(*ci.gap <= 1e-8, "polytope " + std::to_string(t) + ": gap " + num(*ci.gap));
      c.require(oracle && std::abs(*oracle - ci.lhs.value()) <= 1e-8, "lhs disagrees with weight LP");
    }
    const bool eq = ci.rhs.is_finite() == ci.slice_nonempty && ci.slice_nonempty == ci.zero_in_y_projection &&
                    ci.slice_nonempty;
    c.require(eq, "three-way equivalence fails on polytope " + std::to_string(t));
    equivalences += eq;
  }
  for (int t = 0; t < 50; ++t) {
    // y-parts strictly inside {y1 >= 0.2}: the slice at y = 0 is empty.
    std::vector<Vector> V;
    for (int j = 0; j < 6; ++j) {
      Vector v = random_vector(rng, 4);
      v(2) = 0.2 + std::abs(v(2));
      V.push_back(v);
    }
    const auto ci = claim_identities(GeneratedConvexSet(4, V), random_vector(rng, 2));
    const bool eq = !ci.rhs.is_finite() && !ci.slice_nonempty && !ci.zero_in_y_projection;
    c.require(eq, "slice-empty case " + std::to_string(t) + " disagrees");
    c.require(!slice_support(V, 2, vec({1, 0})).has_value(), "weight LP finds a point in an empty slice");
    equivalences += eq;
  }
  return c.done("max gap " + num(worst) + ", equivalence on " + std::to_string(equivalences) + "/250");
}

Outcome criterion5() {
  Check c;
  const int K = 1000;
  for (const auto& name : gallery_names()) {
    const auto run = ekeland_sequences(gallery_oracle(name), K);
    const double inf = name == "abs-plus-one" ? 1.0 : 0.0;
    c.require(static_cast<int>(run.records.size()) == K, name + ": wrong record count");
    for (const auto& r : run.records) {
      const double k = r.k;
      c.require(r.ystar.norm() <= 1.0 / k, name + ": |y*| bound at k=" + std::to_string(r.k));
      c.require(std::abs(r.ystar.dot(r.v)) <= 2.0 / k, name + ": <y*,v> bound at k=" + std::to_string(r.k));
      c.require(r.g_v - inf <= 2.0 / k + 1e-9, name + ": value bound at k=" + std::to_string(r.k));
    }
  }
  return c.done("3 gallery functions x 1000 records within bounds");
}

Outcome criterion6() {
  Check c;
  const double h = 1e-3;
  struct Case {
    std::string name;
    MarginalProblem p;
    Vector x, lo, hi;
  };
  std::vector<Case> cases;
  cases.push_back({"case1", example311_problem(1), vec({0}), vec({-2}), vec({2})});
  cases.push_back({"case2", example311_problem(2), vec({0.3}), vec({-3}), vec({3})});
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(seed % 3);
    cases.push_back({"random-" + std::to_string(seed), random_instance(seed, n, 1), Vector::Zero(n), vec({-8}), vec({8})});
  }
  double worst = 0.0;
  for (const auto& cs : cases) {
    const double L1 = cs.p.lipschitz_y;
    PenaltyOptions opt;
    opt.lprime = 2.0 * L1;
    const auto r = penalty_check(cs.p, cs.x, cs.lo, cs.hi, h, opt);
    worst = std::max(worst, r.residual / h);
    c.require(r.residual <= 4 * h, cs.name + ": residual " + num(r.residual));
    double prev = -std::numeric_limits<double>::infinity();
    for (double f : {0.25, 0.5, 1.0, 1.5, 2.0, 4.0}) {
      const double v = penalized_grid_min(cs.p, cs.x, cs.lo, cs.hi, h, f * L1, opt).first;
      c.require(v >= prev - 1e-12, cs.name + ": penalized infimum decreases at factor " + num(f));
      if (f > 1.0) c.require(std::abs(v - r.phi) <= 4 * h, cs.name + ": factor " + num(f) + " misses phi");
      prev = v;
    }
  }
  return c.done(std::to_string(cases.size()) + " instances, max residual " + num(worst) + " x spacing");
}

Outcome criterion7() {
  Check c;
  std::mt19937_64 rng(7);
  double lowest = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Eigen::Index d = 2 + t % 3, n = 1, m = d - 1;
    const Vector zbar = random_vector(rng, d);
    const int count = 3 + t % 4, tied = 2 + t % (count - 1);
    std::vector<SmoothComponent> cs;
    for (int i = 0; i < count; ++i) {
      const Vector a = random_vector(rng, d, -2, 2);
      const double drop = i < tied ? 0.0 : 0.5 + std::abs(random_vector(rng, 1)(0));
      cs.push_back(SmoothComponent::affine(a.head(n), a.tail(m), 1.0 - a.dot(zbar) - drop));
    }
    const MaxSmoothObjective f(cs);
    const ScalarFn fn = [&f, n, m](const Vector& z) { return f.value(z.head(n), z.tail(m)); };
    for (const auto& u : directions(d, 32)) {
      const double s = gen_dir_deriv_sampled(fn, zbar, u);
      const double e = gen_dir_deriv_exact(f, zbar.head(n), zbar.tail(m), u);
      c.require(s <= e + 1e-6, "instance " + std::to_string(t) + ": sampled above exact");
      c.require(s >= e - 5e-3, "instance " + std::to_string(t) + ": sampled " + num(s) + " < exact " + num(e));
      lowest = std::min(lowest, s - e);
    }
  }
  return c.done("50 tie points x 32 directions, min(sampled - exact) " + num(lowest));
}

Outcome criterion8() {
  Check c;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto [n, m] = fuzz_dims(seed);
    const auto p = random_instance(seed, n, m, InstanceClass::max_affine_whole_space);
    const Vector x = Vector::Zero(n);
    const auto cands = solution_set(p, x).points;
    const auto E = unconstrained_estimate_from(p.objective, x, cands);
    for (const auto& u : directions(n, 64)) {
      std::optional<double> want;
      for (const auto& y : cands) {
        const auto s = slice_support(clarke_subdiff_max(p.objective, x, y).vertices, n, u);
        if (s) want = want ? std::max(*want, *s) : *s;
      }
      const Extended got = E.oracle(u);
      if (!want) {
        c.require(got.is_minus_infinity(), "seed " + std::to_string(seed) + ": slice empty, estimate not");
        continue;
      }
      c.require(got.is_finite(), "seed " + std::to_string(seed) + ": estimate not finite");
      if (got.is_finite()) {
        worst = std::max(worst, std::abs(got.value() - *want));
        c.require(std::abs(got.value() - *want) <= 1e-9, "seed " + std::to_string(seed) + ": gap " +
                                                             num(std::abs(got.value() - *want)));
      }
    }
  }
  return c.done("100 instances, max support gap " + num(worst));
}

} // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all = {
      {1, "slab graph at 0: estimate equals [-1, 1]", 1.0, criterion1},
      {2, "abs graph at 0: normal cone R^2, estimate unbounded", 1.0, criterion2},
      {3, "inclusion fuzz suite, 100 instances", 60.0, criterion3},
      {4, "slice duality and emptiness equivalence", 0.0, criterion4},
      {5, "Ekeland decay rates, K = 1000", 10.0, criterion5},
      {6, "exact penalization residual and monotonicity", 0.0, criterion6},
      {7, "sampled vs exact directional derivatives", 0.0, criterion7},
      {8, "multiplier form vs slice form", 0.0, criterion8},
  };
  int failed = 0;
  for (const auto& cr : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cr.limit_s > 0 && secs >= cr.limit_s) {
      o.ok = false;
      o.detail += "; runtime " + num(secs) + " s exceeds " + num(cr.limit_s) + " s";
    }
    failed += !o.ok;
    std::cout << (o.ok ? "PASS" : "FAIL") << " " << cr.id << " " << cr.name << ": " << o.detail << " ("
              << num(secs) << " s)" << std::endl;
  }
  std::cout << (failed ? "FAIL" : "PASS") << ": " << (8 - failed) << "/8 acceptance criteria" << std::endl;
  return failed ? 1 : 0;
}
