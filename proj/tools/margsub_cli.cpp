#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "margsub/margsub.hpp"

namespace fs = std::filesystem;
using namespace margsub;

namespace {

enum Exit { kOk = 0, kFail = 1, kUsage = 2, kNumerical = 3 };

struct Config {
  std::string problem_path;
  std::string fixture;
  std::string x;
  std::string out;
  std::string mode = "coderivative";
  std::string estimate_path;
  std::string gallery = "quadratic";
  std::string box = "-3,3";
  double tol_active = kDefaultTolActive;
  double tol_incl = 1e-6;
  double lprime_factor = 0.0;
  double grid = 1e-3;
  int directions = 64;
  int fuzz = 0;
  int fuzz_count = 100;
  int K = 10;
  std::uint64_t seed = 42;
  bool claims = false;
};

std::vector<double> parse_list(const std::string& s, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (tok.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(tok);
    } catch (const std::logic_error&) {
      throw ParseError(flag + ": '" + tok + "' is not a number");
    }
  }
  if (out.empty()) throw ParseError(flag + ": expected a comma-separated list of numbers");
  return out;
}

MarginalProblem load(const Config& c, std::string& label) {
  if (!c.problem_path.empty() && !c.fixture.empty())
    throw ValidationError("--problem and --fixture are mutually exclusive");
  if (!c.problem_path.empty()) {
    label = fs::path(c.problem_path).stem().string();
    return load_problem(c.problem_path);
  }
  if (c.fixture == "ex311-1" || c.fixture == "ex311-2") {
    label = "example311-case" + c.fixture.substr(6);
    return example311_problem(c.fixture == "ex311-1" ? 1 : 2);
  }
  if (c.fixture.empty()) throw ValidationError("one of --problem FILE or --fixture ex311-1|ex311-2 is required");
  throw ValidationError("unknown fixture '" + c.fixture + "' (expected ex311-1 or ex311-2)");
}

Vector point(const Config& c, Eigen::Index n) {
  if (c.x.empty()) return Vector::Zero(n);
  const auto v = parse_list(c.x, "--x");
  if (static_cast<Eigen::Index>(v.size()) != n)
    throw DimensionError("--x has " + std::to_string(v.size()) + " entries, the problem has n = " + std::to_string(n));
  return Eigen::Map<const Vector>(v.data(), n);
}

SampledLimsupParams sampling(const Config& c) {
  SampledLimsupParams s;
  s.seed = c.seed;
  return s;
}

void emit(const Config& c, const std::string& name, const json& doc) {
  if (c.out.empty()) return;
  std::error_code ec;
  fs::create_directories(c.out, ec);
  const fs::path path = fs::path(c.out) / (name + ".json");
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot write output file: " + path.string());
  f << doc.dump(2) << "\n";
  std::cout << "wrote " << path.string() << "\n";
}

int cmd_eval(const Config& c) {
  std::string label;
  const auto p = load(c, label);
  const Vector x = point(c, p.n);
  const auto r = eval_phi(p, x);
  json doc;
  doc["problem"] = label;
  doc["x"] = vec12(x);
  doc["phi"] = num12(r.value);
  doc["exact"] = r.exact;
  doc["witnesses"] = json::array();
  for (const auto& w : r.witnesses) doc["witnesses"].push_back(vec12(w));
  std::cout << "phi" << vec_text(x) << " = " << fmt12(r.value.as_double()) << (r.exact ? "" : " (grid)") << "\n";
  for (const auto& w : r.witnesses) std::cout << "  witness y = " << vec_text(w) << "\n";
  doc["solutions"] = json::array();
  if (r.value.is_finite()) {
    const auto S = solution_set(p, x);
    std::cout << "S(x) candidates (tol_sol " << fmt12(S.tol_sol) << "):\n";
    for (const auto& y : S.points) {
      doc["solutions"].push_back(vec12(y));
      std::cout << "  " << vec_text(y) << "\n";
    }
  }
  emit(c, "eval", doc);
  return kOk;
}

EstimateSet build_estimate(const Config& c, const MarginalProblem& p, const Vector& x) {
  if (c.mode == "coderivative") return coderivative_estimate(p, x, c.tol_active);
  if (c.mode == "unconstrained") return unconstrained_estimate(p, x, c.tol_active);
  throw ValidationError("--mode must be unconstrained or coderivative, got '" + c.mode + "'");
}

int cmd_estimate(const Config& c) {
  std::string label;
  const auto p = load(c, label);
  const Vector x = point(c, p.n);
  const auto e = build_estimate(c, p, x);
  json support_rows = json::array();
  std::vector<Vector> unbounded;
  std::cout << "estimate (" << to_string(e.form) << ") at x = " << vec_text(x) << ": "
            << (e.empty() ? "empty" : "nonempty") << "\n";
  for (const auto& v : e.value.vertices) std::cout << "  vertex " << vec_text(v) << "\n";
  for (const auto& r : e.value.rays) std::cout << "  ray    " << vec_text(r) << "\n";
  for (const auto& u : directions(p.n, c.directions)) {
    const Extended s = e.oracle(u);
    json row;
    row["u"] = vec12(u);
    row["sigma"] = num12(s);
    row["unbounded"] = s.is_plus_infinity();
    support_rows.push_back(row);
    if (s.is_plus_infinity()) unbounded.push_back(u);
    std::cout << "  sigma" << vec_text(u) << " = " << fmt12(s.as_double())
              << (s.is_plus_infinity() ? "  unbounded" : "") << "\n";
  }
  json doc;
  doc["problem"] = label;
  doc["xbar"] = vec12(x);
  doc["estimate"] = estimate_json(e, unbounded);
  doc["support"] = support_rows;
  emit(c, "estimate", doc);
  return kOk;
}

int run_fuzz_cmd(const Config& c, int count) {
  InclusionOptions opt;
  opt.directions = c.directions;
  opt.tol_incl = c.tol_incl;
  opt.sampling = fuzz_sampling();
  const auto reports = run_fuzz(count, c.seed, opt);
  const auto r = render_report(reports);
  std::cout << r.text;
  json doc;
  doc["first_seed"] = c.seed;
  doc["reports"] = r.document;
  emit(c, "fuzz", doc);
  return r.all_hold ? kOk : kFail;
}

int cmd_verify(const Config& c) {
  if (c.fuzz > 0) return run_fuzz_cmd(c, c.fuzz);
  std::string label;
  const auto p = load(c, label);
  const Vector x = point(c, p.n);
  EstimateSet e;
  if (!c.estimate_path.empty()) {
    std::ifstream in(c.estimate_path);
    if (!in) throw ParseError("cannot open estimate file: " + c.estimate_path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& err) {
      throw ParseError(c.estimate_path + ": malformed JSON: " + err.what());
    }
    e = supplied_estimate(set_from_json(j, p.n, c.estimate_path));
  } else {
    e = build_estimate(c, p, x);
  }
  InclusionOptions opt;
  opt.directions = c.directions;
  opt.tol_incl = c.tol_incl;
  opt.sampling = sampling(c);
  opt.label = label;
  const auto rep = inclusion_check(p, x, e, opt);
  const auto r = render_report({rep});
  std::cout << r.text;
  bool ok = r.all_hold;
  json doc;
  doc["reports"] = r.document;
  if (c.claims) {
    const auto recs = claim1_check(p, x, directions(p.n, c.directions), opt.sampling, c.tol_incl);
    doc["claims"] = json::array();
    size_t held = 0;
    for (const auto& rec : recs) {
      json j;
      j["u"] = vec12(rec.u);
      j["lhs"] = num12(rec.lhs);
      j["rhs"] = num12(rec.rhs);
      j["holds"] = rec.holds;
      doc["claims"].push_back(j);
      if (rec.holds) ++held;
      else
        std::cout << "FAIL claim1 u=" << vec_text(rec.u) << " lhs=" << fmt12(rec.lhs)
                  << " rhs=" << fmt12(rec.rhs.as_double()) << "\n";
    }
    std::cout << (held == recs.size() ? "PASS" : "FAIL") << " claim1: " << held << "/" << recs.size()
              << " directions\n";
    ok = ok && held == recs.size();
  }
  emit(c, "verify", doc);
  return ok ? kOk : kFail;
}

int cmd_ekeland(const Config& c) {
  if (c.K < 1) throw PreconditionError("--K must be >= 1, got " + std::to_string(c.K));
  const auto g = gallery_oracle(c.gallery);
  const auto run = ekeland_sequences(g, c.K);
  json rows = json::array();
  bool ok = true;
  std::cout << "gallery " << g.name << ", inf estimate " << fmt12(run.inf_estimate)
            << (run.likely_unattained ? " (likely unattained)" : "") << "\n";
  std::cout << "k\ty_k\tlambda_k\tv_k\t|y_k*|\t<y_k*,v_k>\tg(v_k)-inf\tok\n";
  for (const auto& r : run.records) {
    const double k = r.k;
    const double nrm = r.ystar.norm(), ip = r.ystar.dot(r.v), gap = r.g_v - run.inf_estimate;
    const bool row_ok = nrm <= 1.0 / k + 1e-12 && std::abs(ip) <= 2.0 / k + 1e-12 && gap <= 2.0 / k + 1e-9;
    ok = ok && row_ok;
    std::cout << r.k << "\t" << vec_text(r.y) << "\t" << fmt12(r.lambda) << "\t" << vec_text(r.v) << "\t"
              << fmt12(nrm) << "\t" << fmt12(ip) << "\t" << fmt12(gap) << "\t" << (row_ok ? "yes" : "NO") << "\n";
    json j;
    j["k"] = r.k;
    j["y"] = vec12(r.y);
    j["lambda"] = num12(r.lambda);
    j["v"] = vec12(r.v);
    j["ystar"] = vec12(r.ystar);
    j["g_y"] = num12(r.g_y);
    j["g_v"] = num12(r.g_v);
    j["satisfied"] = row_ok;
    rows.push_back(j);
  }
  std::cout << (ok ? "PASS" : "FAIL") << " ekeland " << g.name << " K=" << c.K << "\n";
  json doc;
  doc["gallery"] = g.name;
  doc["K"] = c.K;
  doc["inf_estimate"] = num12(run.inf_estimate);
  doc["attained"] = run.attained;
  doc["likely_unattained"] = run.likely_unattained;
  doc["records"] = rows;
  emit(c, "ekeland", doc);
  return ok ? kOk : kFail;
}

int cmd_penalty(const Config& c) {
  std::string label;
  const auto p = load(c, label);
  const Vector x = point(c, p.n);
  const auto b = parse_list(c.box, "--box");
  Vector lo(p.m), hi(p.m);
  if (b.size() == 2) {
    lo.setConstant(b[0]);
    hi.setConstant(b[1]);
  } else if (static_cast<Eigen::Index>(b.size()) == 2 * p.m) {
    for (Eigen::Index i = 0; i < p.m; ++i) {
      lo(i) = b[static_cast<size_t>(i)];
      hi(i) = b[static_cast<size_t>(p.m + i)];
    }
  } else {
    throw DimensionError("--box expects lo,hi or 2m = " + std::to_string(2 * p.m) + " numbers");
  }
  PenaltyOptions opt;
  const double factor = c.lprime_factor > 0.0 ? c.lprime_factor : p.penalty_excess;
  opt.lprime = factor * p.lipschitz_y;
  const auto r = penalty_check(p, x, lo, hi, c.grid, opt);
  const bool ok = r.residual <= r.bound;
  std::cout << "phi" << vec_text(x) << " = " << fmt12(r.phi) << "\n"
            << "penalized grid minimum = " << fmt12(r.penalized_min) << " at y = " << vec_text(r.argmin) << "\n"
            << "L' = " << fmt12(r.lprime) << ", grid spacing = " << fmt12(r.spacing) << "\n"
            << (ok ? "PASS" : "FAIL") << " residual = " << fmt12(r.residual) << " (bound " << fmt12(r.bound) << ")\n";
  json doc;
  doc["problem"] = label;
  doc["x"] = vec12(x);
  doc["phi"] = num12(r.phi);
  doc["penalized_min"] = num12(r.penalized_min);
  doc["argmin"] = vec12(r.argmin);
  doc["lprime"] = num12(r.lprime);
  doc["spacing"] = num12(r.spacing);
  doc["residual"] = num12(r.residual);
  doc["bound"] = num12(r.bound);
  emit(c, "penalty", doc);
  return ok ? kOk : kFail;
}

void add_problem_flags(CLI::App* s, Config& c) {
  s->add_option("--problem", c.problem_path, "Problem JSON file");
  s->add_option("--fixture", c.fixture, "Built-in problem: ex311-1 or ex311-2");
  s->add_option("--x", c.x, "Point x̄ as comma-separated numbers (default 0)");
}

void add_common_flags(CLI::App* s, Config& c) {
  s->add_option("--tol-active", c.tol_active, "Active-index tolerance");
  s->add_option("--tol-incl", c.tol_incl, "Inclusion tolerance");
  s->add_option("--directions", c.directions, "Number of test directions");
  s->add_option("--seed", c.seed, "Sampling seed (first instance seed for fuzz)");
  s->add_option("--out", c.out, "Directory for JSON artifacts");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clarke subdifferential estimates for marginal functions"};
  app.require_subcommand(1);
  Config c;

  auto* eval = app.add_subcommand("eval", "Evaluate phi(x) and the solution set");
  add_problem_flags(eval, c);
  add_common_flags(eval, c);

  auto* est = app.add_subcommand("estimate", "Build the upper estimate of the subdifferential");
  add_problem_flags(est, c);
  add_common_flags(est, c);
  est->add_option("--mode", c.mode, "unconstrained or coderivative");

  auto* ver = app.add_subcommand("verify", "Check the inclusion by sampled directional derivatives");
  add_problem_flags(ver, c);
  add_common_flags(ver, c);
  ver->add_option("--mode", c.mode, "unconstrained or coderivative");
  ver->add_option("--estimate", c.estimate_path, "Check this set instead of the computed estimate");
  ver->add_flag("--claims", c.claims, "Also check the directional-derivative bound");
  ver->add_option("--fuzz", c.fuzz, "Run the random-instance suite with this many instances");

  auto* eke = app.add_subcommand("ekeland", "Print Ekeland sequences for a gallery function");
  eke->add_option("--gallery", c.gallery, "quadratic, abs-plus-one or exp-neg");
  eke->add_option("--K", c.K, "Number of records");
  eke->add_option("--out", c.out, "Directory for JSON artifacts");

  auto* pen = app.add_subcommand("penalty", "Check the exact-penalization residual");
  add_problem_flags(pen, c);
  add_common_flags(pen, c);
  pen->add_option("--Lprime-factor", c.lprime_factor, "L' = factor * L1 (default: problem penalty_excess)");
  pen->add_option("--box", c.box, "Search box lo,hi (all coordinates) or lo_1..lo_m,hi_1..hi_m");
  pen->add_option("--grid", c.grid, "Grid spacing");

  auto* fz = app.add_subcommand("fuzz", "Inclusion checks on seeded random instances");
  fz->add_option("--fuzz,--count", c.fuzz_count, "Number of instances");
  add_common_flags(fz, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*eval) return cmd_eval(c);
    if (*est) return cmd_estimate(c);
    if (*ver) {
      if (c.fuzz < 0) throw ValidationError("--fuzz must be >= 1");
      return cmd_verify(c);
    }
    if (*eke) return cmd_ekeland(c);
    if (*pen) return cmd_penalty(c);
    if (*fz) return run_fuzz_cmd(c, c.fuzz_count);
  } catch (const VerificationError& e) {
    std::cerr << "FAIL: " << e.what() << "\n";
    return kFail;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const ConvexityError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
