#pragma once

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "margsub/problem_io.hpp"
#include "margsub/verify.hpp"

namespace margsub {

/// Shortest decimal text with 12 significant digits.
inline std::string fmt12(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);
  return buf;
}

/// JSON number rounded to 12 significant digits; infinities become strings.
inline json num12(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return std::stod(fmt12(v));
}

inline json num12(const Extended& e) { return num12(e.as_double()); }

inline json vec12(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num12(v(i)));
  return a;
}

inline std::string vec_text(const Vector& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt12(v(i));
  return s + ")";
}

inline json set12(const GeneratedConvexSet& S) {
  json j;
  j["vertices"] = json::array();
  for (const auto& v : S.vertices) j["vertices"].push_back(vec12(v));
  j["rays"] = json::array();
  for (const auto& r : S.rays) j["rays"].push_back(vec12(r));
  return j;
}

inline json report_json(const InclusionReport& r) {
  json j;
  j["problem"] = r.problem;
  j["xbar"] = vec12(r.xbar);
  j["estimate_form"] = to_string(r.form);
  j["directions"] = json::array();
  for (const auto& d : r.directions) {
    json e;
    e["u"] = vec12(d.u);
    e["phi_dd"] = num12(d.phi_dd);
    e["sigma"] = num12(d.sigma);
    e["margin"] = num12(d.margin);
    e["unbounded"] = d.unbounded;
    j["directions"].push_back(e);
  }
  j["verdict"] = to_string(r.verdict);
  return j;
}

inline json estimate_json(const EstimateSet& e, const std::vector<Vector>& unbounded_directions = {}) {
  json j = set12(e.value);
  j["form"] = to_string(e.form);
  j["status"] = e.empty() ? "empty" : "ok";
  j["unbounded_directions"] = json::array();
  for (const auto& u : unbounded_directions) j["unbounded_directions"].push_back(vec12(u));
  j["provenance"] = json::array();
  for (const auto& p : e.provenance) {
    json q;
    q["ybar"] = vec12(p.ybar);
    q["contribution"] = set12(p.contribution);
    j["provenance"].push_back(q);
  }
  return j;
}

struct RenderedReport {
  std::string text;
  json document;
  bool all_hold = false;
};

/// Human summary plus JSON for a batch of inclusion reports.
inline RenderedReport render_report(const std::vector<InclusionReport>& reports) {
  RenderedReport out;
  out.document = json::array();
  std::ostringstream t;
  if (reports.empty()) {
    out.text = "NO CHECKS RUN\n";
    return out;
  }
  size_t failures = 0;
  for (const auto& r : reports) {
    out.document.push_back(report_json(r));
    const auto* w = r.worst();
    if (r.verdict == Verdict::holds) {
      t << "PASS " << r.problem << " xbar=" << vec_text(r.xbar) << " directions=" << r.directions.size();
      if (w) t << " min_margin=" << fmt12(w->margin);
      t << "\n";
    } else if (r.verdict == Verdict::violated) {
      ++failures;
      t << "FAIL " << r.problem << " xbar=" << vec_text(r.xbar) << " worst u=" << vec_text(w->u)
        << " phi_dd=" << fmt12(w->phi_dd) << " sigma=" << fmt12(w->sigma.as_double())
        << " margin=" << fmt12(w->margin) << "\n";
    } else {
      ++failures;
      t << "FAIL " << r.problem << " xbar=" << vec_text(r.xbar) << " " << to_string(r.verdict) << "\n";
    }
  }
  out.all_hold = failures == 0;
  t << (out.all_hold ? "PASS" : "FAIL") << ": " << reports.size() - failures << "/" << reports.size()
    << " reports hold (sampled derivatives under-approximate, so a pass is evidence and a failure is a "
       "counterexample up to tol_incl)\n";
  out.text = t.str();
  return out;
}

} // namespace margsub
