#ifndef DNAMIX_REPORT_HPP
#define DNAMIX_REPORT_HPP

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <json.hpp>

#include "dnamix/diagnostics.hpp"
#include "dnamix/errors.hpp"
#include "dnamix/inference.hpp"
#include "dnamix/io.hpp"
#include "dnamix/mle.hpp"

namespace dnamix::report {

using Json = nlohmann::ordered_json;

inline constexpr const char* tool_version = "1.0.0";

/// Doubles are rounded to 12 significant digits before serialization, so
/// the shortest round-trip form printed by the JSON writer has at most 12.
/// Non-finite values become strings ("-inf" for an impossible likelihood).
inline Json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  const double r = std::strtod(buf, nullptr);
  return r == 0.0 ? 0.0 : r;  // no negative zero
}

inline Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

inline std::string fixed12(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// Unsigned counts that may exceed 2^53 are written as decimal strings.
inline Json count(BigCount v) {
  if (v <= BigCount(std::uint64_t(1) << 53)) return static_cast<std::uint64_t>(v);
  return to_string(v);
}

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw NumericalError("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  return sha256_hex(std::string(std::istreambuf_iterator<char>(in), {}));
}

inline std::string base_name(const std::string& path) {
  const auto slash = path.find_last_of("/\\");
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

/// {"role": {"file": name, "sha256": digest}} for each non-empty path.
inline Json inputs(const std::vector<std::pair<std::string, std::string>>& files) {
  Json j = Json::object();
  for (const auto& [role, path] : files) {
    if (path.empty()) continue;
    j[role] = {{"file", base_name(path)}, {"sha256", file_digest(path)}};
  }
  return j;
}

inline Json header(const std::string& command, const Json& inputs) {
  Json j;
  j["tool"] = "dnamix";
  j["version"] = tool_version;
  j["command"] = command;
  j["inputs"] = inputs;
  return j;
}

// ---- parameters and fits ---------------------------------------------------

inline Json parameters(const Hypothesis& h, const std::vector<std::string>& traces,
                       const std::vector<ModelParameters>& psi) {
  Json a = Json::array();
  for (std::size_t t = 0; t < psi.size(); ++t) {
    Json p;
    p["trace"] = traces.at(t);
    p["threshold"] = number(psi[t].threshold);
    p["rho"] = number(psi[t].rho);
    p["eta"] = number(psi[t].eta);
    p["xi"] = number(psi[t].xi);
    p["mean_height"] = number(psi[t].rho * psi[t].eta);
    Json phi = Json::object();
    for (std::size_t i : h.trace_members.at(t)) phi[h.contributors[i].name] = number(psi[t].phi[i]);
    p["phi"] = phi;
    a.push_back(p);
  }
  return a;
}

inline Json marker_table(const CaseModel& model, const std::vector<double>& log_likelihoods) {
  Json a = Json::array();
  for (std::size_t m = 0; m < model.markers().size(); ++m)
    a.push_back({{"marker", model.marker(m).name()},
                 {"log_likelihood", number(log_likelihoods.at(m))},
                 {"log10_likelihood", number(log_likelihoods.at(m) / std::log(10.0))}});
  return a;
}

inline Json contributors(const Hypothesis& h) {
  Json a = Json::array();
  for (const auto& c : h.contributors) a.push_back({{"name", c.name}, {"known", c.known}});
  return a;
}

/// Fit block: fractions per contributor, ρ, η, ξ per trace with
/// optional standard errors, the maximized likelihood and optimizer state.
inline Json fit(const CaseModel& model, const FitResult& f) {
  const auto& h = model.hypothesis();
  Json j;
  j["hypothesis"] = h.name;
  j["contributors"] = contributors(h);
  j["log_likelihood"] = number(f.log_likelihood);
  j["log10_likelihood"] = number(f.log10_likelihood);
  j["parameters"] = f.parameters.empty() ? Json::array() : parameters(h, model.trace_names(), f.parameters);
  if (f.standard_errors) {
    Json se = Json::array();
    for (std::size_t t = 0; t < f.standard_errors->size(); ++t) {
      const auto& e = (*f.standard_errors)[t];
      Json phi = Json::object();
      for (std::size_t i : h.trace_members.at(t)) phi[h.contributors[i].name] = number(e.phi.at(i));
      se.push_back({{"trace", model.trace_names().at(t)},
                    {"rho", number(e.rho)},
                    {"eta", number(e.eta)},
                    {"xi", number(e.xi)},
                    {"phi", phi}});
    }
    j["standard_errors"] = se;
  } else {
    j["standard_errors"] = nullptr;
  }
  if (!f.marker_log_likelihoods.empty()) j["markers"] = marker_table(model, f.marker_log_likelihoods);
  j["optimizer"] = {{"converged", f.converged},
                    {"at_boundary", f.at_boundary},
                    {"iterations", f.iterations},
                    {"evaluations", f.evaluations},
                    {"restarts", f.restarts},
                    {"simplex_spread", number(f.simplex_spread)}};
  j["warnings"] = f.warnings;
  return j;
}

// ---- rankings --------------------------------------------------------------

inline std::string genotype_label(const GenotypeRanking& g, const std::vector<int>& counts, int dropout) {
  std::vector<std::string> parts;
  for (std::size_t a = 0; a < counts.size(); ++a)
    for (int c = 0; c < counts[a]; ++c) parts.push_back(g.columns[a]);
  for (int c = 0; c < dropout; ++c) parts.push_back("D");
  std::string s;
  for (const auto& p : parts) s += (s.empty() ? "" : "/") + p;
  return s;
}

/// Ranking block: one row per combination, allele columns (plus a
/// lumped dropout column) of counts per unknown, and the probability.
inline Json ranking(const Hypothesis& h, const GenotypeRanking& g) {
  const auto unknown = h.unknown_indices();
  Json j;
  j["marker"] = g.marker;
  Json cols = g.columns;
  if (g.dropout_column) cols.push_back("D");
  j["columns"] = cols;
  Json rows = Json::array();
  for (const auto& r : g.rows) {
    Json row;
    Json geno = Json::object();
    for (std::size_t u = 0; u < r.counts.size(); ++u) {
      std::vector<int> cells = r.counts[u];
      if (g.dropout_column) cells.push_back(r.dropout.empty() ? 0 : r.dropout[u]);
      geno[h.contributors.at(unknown.at(u)).name] = {
          {"genotype", genotype_label(g, r.counts[u], r.dropout.empty() ? 0 : r.dropout[u])}, {"counts", cells}};
    }
    row["unknowns"] = geno;
    row["probability"] = number(r.probability);
    rows.push_back(row);
  }
  j["rows"] = rows;
  j["total"] = number(g.covered_mass);
  j["target"] = number(g.target);
  j["reached"] = g.reached;
  j["samples"] = g.samples;
  return j;
}

inline void ranking_csv(std::ostream& out, const Hypothesis& h, const GenotypeRanking& g) {
  const auto unknown = h.unknown_indices();
  for (std::size_t r = 0; r < g.rows.size(); ++r) {
    const auto& row = g.rows[r];
    out << io::csv_field(g.marker) << ',' << r + 1 << ',' << fixed12(row.probability);
    for (std::size_t u = 0; u < row.counts.size(); ++u)
      out << ',' << io::csv_field(genotype_label(g, row.counts[u], row.dropout.empty() ? 0 : row.dropout[u]));
    out << '\n';
  }
  (void)unknown;
}

// ---- diagnostics -----------------------------------------------------------

inline Json qq(const std::vector<std::string>& traces, const std::vector<QqPoint>& pts) {
  Json a = Json::array();
  for (const auto& p : pts)
    a.push_back({{"marker", p.marker},
                 {"trace", traces.at(p.trace)},
                 {"allele", p.allele},
                 {"height", number(p.height)},
                 {"u", number(p.u)},
                 {"position", number(p.position)}});
  return a;
}

inline Json interval(const std::vector<std::string>& traces, const PredictionRow& r) {
  Json q = Json::array();
  for (std::size_t i = 0; i < r.quantiles.size(); ++i) q.push_back({{"level", number(r.levels[i])}, {"height", number(r.quantiles[i])}});
  return {{"marker", r.marker},
          {"trace", traces.at(r.trace)},
          {"allele", r.allele},
          {"height", number(r.height)},
          {"presence", number(r.presence)},
          {"absence", number(r.absence)},
          {"quantiles", r.quantiles.empty() ? Json(nullptr) : q}};
}

inline Json monitor(const std::vector<std::string>& traces, const MonitorResult& m) {
  Json rows = Json::array();
  for (const auto& r : m.rows)
    rows.push_back({{"step", r.step},
                    {"marker", r.marker},
                    {"trace", traces.at(r.trace)},
                    {"allele", r.allele},
                    {"p", number(r.p)},
                    {"observed", r.observed},
                    {"y", number(r.y)},
                    {"expectation", number(r.expectation)},
                    {"variance", number(r.variance)},
                    {"cumulative", number(r.cumulative)},
                    {"cumulative_variance", number(r.cumulative_variance)},
                    {"normalized", number(r.normalized)},
                    {"limit95", number(r.limit95)},
                    {"limit99", number(r.limit99)}});
  Json j;
  j["score"] = number(m.score);
  j["variance"] = number(m.variance);
  j["normalized"] = m.normalized ? number(*m.normalized) : Json(nullptr);
  j["skipped"] = m.skipped;
  j["rows"] = rows;
  return j;
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace dnamix::report

#endif  // DNAMIX_REPORT_HPP
