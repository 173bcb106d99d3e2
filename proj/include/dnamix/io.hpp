#ifndef DNAMIX_IO_HPP
#define DNAMIX_IO_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dnamix/case.hpp"
#include "dnamix/errors.hpp"
#include "dnamix/mixture_network.hpp"
#include "dnamix/mle.hpp"

namespace dnamix::io {

// ---- small text helpers ------------------------------------------------------

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

/// Comma-separated fields; double quotes protect commas and "" escapes a quote.
inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

inline std::optional<double> to_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<long long> to_integer(const std::string& s) {
  if (s.empty()) return std::nullopt;
  long long v = 0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) return std::nullopt;
  return v;
}

/// Shortest decimal form that reads back to the same double.
inline std::string exact(double v) {
  char buf[64];
  for (int digits = 15; digits <= 17; ++digits) {
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

// ---- CSV tables --------------------------------------------------------------

struct CsvTable {
  std::string file;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;
};

/// Reads a CSV with a header naming exactly `columns`, in order.
inline CsvTable read_csv(std::istream& in, const std::string& file, const std::vector<std::string>& columns) {
  CsvTable t;
  t.file = file;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    auto fields = split_csv(line);
    if (!header) {
      for (auto& f : fields) std::transform(f.begin(), f.end(), f.begin(), [](unsigned char c) { return std::tolower(c); });
      if (fields != columns) {
        std::string want;
        for (const auto& c : columns) want += (want.empty() ? "" : ",") + c;
        throw InputError(file, lineno, "header must be '" + want + "'");
      }
      header = true;
      continue;
    }
    if (fields.size() != columns.size())
      throw InputError(file, lineno, "expected " + std::to_string(columns.size()) + " fields, found " +
                                         std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
    t.lines.push_back(lineno);
  }
  if (!header) throw InputError(file, lineno, "missing header row");
  return t;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  return in;
}

// ---- frequencies -------------------------------------------------------------

/// Alleles sort by numeric value when every label of the marker is a
/// number (repeat counts such as 15.3); otherwise file order is kept.
inline void order_ladder(AlleleLadder& l) {
  std::vector<std::optional<double>> v;
  for (const auto& s : l.labels) v.push_back(to_number(s));
  if (std::any_of(v.begin(), v.end(), [](const auto& x) { return !x; })) return;
  std::vector<std::size_t> idx(l.labels.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return *v[a] < *v[b]; });
  AlleleLadder out{l.marker, {}, {}};
  for (std::size_t i : idx) {
    out.labels.push_back(l.labels[i]);
    out.frequencies.push_back(l.frequencies[i]);
  }
  l = std::move(out);
}

inline constexpr double frequency_tolerance = 1e-6;

inline std::vector<AlleleLadder> parse_frequencies(std::istream& in, const std::string& file = "frequencies.csv") {
  const auto t = read_csv(in, file, {"marker", "allele", "frequency"});
  std::vector<AlleleLadder> ladders;
  std::map<std::string, std::size_t> index;
  std::map<std::string, std::size_t> last_line;
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t line = t.lines[r];
    if (row[0].empty() || row[1].empty()) throw InputError(file, line, "empty marker or allele");
    if (!seen.insert({row[0], row[1]}).second)
      throw InputError(file, line, "duplicate allele " + row[1] + " at marker " + row[0]);
    const auto f = to_number(row[2]);
    if (!f || !(*f > 0.0) || *f > 1.0) throw InputError(file, line, "frequency must be a number in (0, 1]");
    auto [it, fresh] = index.emplace(row[0], ladders.size());
    if (fresh) ladders.push_back({row[0], {}, {}});
    ladders[it->second].labels.push_back(row[1]);
    ladders[it->second].frequencies.push_back(*f);
    last_line[row[0]] = line;
  }
  for (auto& l : ladders) {
    double sum = 0.0;
    for (double q : l.frequencies) sum += q;
    if (std::abs(sum - 1.0) > frequency_tolerance)
      throw InputError(file, last_line[l.marker], "frequencies of marker " + l.marker + " sum to " + exact(sum));
    // below 1e-12 the division would only move rounding noise around
    if (std::abs(sum - 1.0) > 1e-12)
      for (double& q : l.frequencies) q /= sum;
    order_ladder(l);
    l.validate();
  }
  return ladders;
}

inline void write_frequencies(std::ostream& out, const std::vector<AlleleLadder>& ladders) {
  out << "marker,allele,frequency\n";
  for (const auto& l : ladders)
    for (std::size_t a = 0; a < l.size(); ++a)
      out << csv_field(l.marker) << ',' << csv_field(l.labels[a]) << ',' << exact(l.frequencies[a]) << '\n';
}

// ---- peaks -------------------------------------------------------------------

struct PeakRow {
  std::string trace, marker, allele;
  double height = 0.0;
  std::size_t line = 0;

  friend bool operator==(const PeakRow& a, const PeakRow& b) {
    return a.trace == b.trace && a.marker == b.marker && a.allele == b.allele && a.height == b.height;
  }
};

inline std::vector<PeakRow> parse_peaks(std::istream& in, const std::string& file = "peaks.csv") {
  const auto t = read_csv(in, file, {"trace", "marker", "allele", "height"});
  std::vector<PeakRow> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row[0].empty() || row[1].empty() || row[2].empty())
      throw InputError(file, t.lines[r], "empty trace, marker or allele");
    const auto h = to_number(row[3]);
    if (!h || *h < 0.0) throw InputError(file, t.lines[r], "height must be a non-negative number");
    out.push_back({row[0], row[1], row[2], *h, t.lines[r]});
  }
  return out;
}

inline void write_peaks(std::ostream& out, const std::vector<PeakRow>& rows) {
  out << "trace,marker,allele,height\n";
  for (const auto& r : rows)
    out << csv_field(r.trace) << ',' << csv_field(r.marker) << ',' << csv_field(r.allele) << ',' << exact(r.height)
        << '\n';
}

/// Rows for the observed peaks of `data` (heights above zero only).
inline std::vector<PeakRow> peak_rows(const CaseData& data) {
  std::vector<PeakRow> out;
  for (std::size_t t = 0; t < data.traces.size(); ++t)
    for (const auto& m : data.markers)
      for (std::size_t a = 0; a < m.ladder.size(); ++a)
        if (m.heights[t][a] > 0.0) out.push_back({data.traces[t], m.ladder.marker, m.ladder.labels[a], m.heights[t][a], 0});
  return out;
}

// ---- profiles ----------------------------------------------------------------

struct ProfileRow {
  std::string individual, marker, allele;
  int count = 0;
  std::size_t line = 0;

  friend bool operator==(const ProfileRow& a, const ProfileRow& b) {
    return a.individual == b.individual && a.marker == b.marker && a.allele == b.allele && a.count == b.count;
  }
};

inline std::vector<ProfileRow> parse_profiles(std::istream& in, const std::string& file = "profiles.csv") {
  const auto t = read_csv(in, file, {"individual", "marker", "allele", "count"});
  std::vector<ProfileRow> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row[0].empty() || row[1].empty() || row[2].empty())
      throw InputError(file, t.lines[r], "empty individual, marker or allele");
    const auto c = to_integer(row[3]);
    if (!c || *c < 0 || *c > 2) throw InputError(file, t.lines[r], "count must be 0, 1 or 2");
    out.push_back({row[0], row[1], row[2], static_cast<int>(*c), t.lines[r]});
  }
  return out;
}

inline void write_profiles(std::ostream& out, const std::vector<ProfileRow>& rows) {
  out << "individual,marker,allele,count\n";
  for (const auto& r : rows)
    out << csv_field(r.individual) << ',' << csv_field(r.marker) << ',' << csv_field(r.allele) << ',' << r.count << '\n';
}

// ---- case configuration ------------------------------------------------------

/// One `[kind argument]` block of a configuration file.
struct ConfigSection {
  std::string kind, argument;
  std::size_t line = 0;
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::string, std::size_t>> values;  // key -> (value, line)

  bool has(const std::string& k) const { return values.count(k) > 0; }
};

/// Sections of an INI-like text: `[kind argument]` headers, `key = value`
/// lines, `#` or `;` comments.
inline std::vector<ConfigSection> parse_sections(std::istream& in, const std::string& file) {
  std::vector<ConfigSection> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    const std::string s = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw InputError(file, lineno, "unterminated section header");
      const std::string inner = trim(s.substr(1, s.size() - 2));
      const auto sp = inner.find_first_of(" \t");
      ConfigSection sec;
      sec.kind = inner.substr(0, sp);
      sec.argument = sp == std::string::npos ? "" : trim(inner.substr(sp));
      sec.line = lineno;
      out.push_back(std::move(sec));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw InputError(file, lineno, "expected 'key = value'");
    if (out.empty()) throw InputError(file, lineno, "key outside any section");
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) throw InputError(file, lineno, "empty key");
    auto& sec = out.back();
    if (!sec.values.emplace(key, std::make_pair(trim(s.substr(eq + 1)), lineno)).second)
      throw InputError(file, lineno, "duplicate key '" + key + "'");
    sec.order.push_back(key);
  }
  return out;
}

struct TraceConfig {
  std::string name;
  double threshold = 0.0;
  std::optional<std::vector<std::string>> contributors;
  std::size_t line = 0;
};

struct ParameterConfig {
  double rho = 0.0, eta = 0.0, xi = 0.0;
  std::map<std::string, double> phi;
  std::size_t line = 0;
};

/// A hypothesis file: contributors, traces with thresholds, optional
/// parameter values and optimizer settings.
struct CaseConfig {
  std::string file;
  Hypothesis hypothesis;
  std::vector<TraceConfig> traces;
  std::map<std::string, ParameterConfig> parameters;  // by trace name
  OptimizerConfig optimizer;

  std::vector<std::string> trace_names() const {
    std::vector<std::string> out;
    for (const auto& t : traces) out.push_back(t.name);
    return out;
  }

  bool has_parameters() const { return !parameters.empty(); }

  /// Parameters in trace order; every trace must have a section.
  std::vector<ModelParameters> model_parameters() const {
    std::vector<ModelParameters> psi;
    for (std::size_t t = 0; t < traces.size(); ++t) {
      const auto it = parameters.find(traces[t].name);
      if (it == parameters.end())
        throw InputError(file, traces[t].line, "no [parameters " + traces[t].name + "] section");
      const auto& pc = it->second;
      ModelParameters p;
      p.rho = pc.rho;
      p.eta = pc.eta;
      p.xi = pc.xi;
      p.threshold = traces[t].threshold;
      p.phi.assign(hypothesis.contributors.size(), 0.0);
      for (const auto& [who, f] : pc.phi) {
        std::size_t i = 0;
        while (i < hypothesis.contributors.size() && hypothesis.contributors[i].name != who) ++i;
        if (i == hypothesis.contributors.size())
          throw InputError(file, pc.line, "fraction given for " + who + ", who is not a contributor");
        if (!hypothesis.member(t, i))
          throw InputError(file, pc.line, who + " does not contribute to trace " + traces[t].name);
        p.phi[i] = f;
      }
      for (std::size_t i : hypothesis.trace_members[t])
        if (!pc.phi.count(hypothesis.contributors[i].name))
          throw InputError(file, pc.line, "no fraction for " + hypothesis.contributors[i].name);
      try {
        p.validate();
      } catch (const ValidationError& e) {
        throw InputError(file, pc.line, e.what());
      }
      psi.push_back(std::move(p));
    }
    return psi;
  }
};

namespace detail {

inline std::vector<std::string> name_list(const std::string& v) {
  std::vector<std::string> out;
  if (trim(v).empty()) return out;
  for (auto& s : split(v, ',')) {
    if (s.empty()) throw ValidationError("empty name in list");
    out.push_back(std::move(s));
  }
  return out;
}

inline double number_at(const ConfigSection& s, const std::string& key, const std::string& file) {
  const auto& [v, line] = s.values.at(key);
  const auto x = to_number(v);
  if (!x) throw InputError(file, line, key + " must be a number");
  return *x;
}

inline std::size_t count_at(const ConfigSection& s, const std::string& key, const std::string& file) {
  const auto& [v, line] = s.values.at(key);
  const auto x = to_integer(v);
  if (!x || *x < 0) throw InputError(file, line, key + " must be a non-negative integer");
  return static_cast<std::size_t>(*x);
}

inline bool flag_at(const ConfigSection& s, const std::string& key, const std::string& file) {
  const auto& [v, line] = s.values.at(key);
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw InputError(file, line, key + " must be true or false");
}

inline void only_keys(const ConfigSection& s, const std::set<std::string>& allowed, const std::string& file) {
  for (const auto& k : s.order)
    if (!allowed.count(k)) throw InputError(file, s.values.at(k).second, "unknown key '" + k + "' in [" + s.kind + "]");
}

}  // namespace detail

inline CaseConfig parse_case_config(std::istream& in, const std::string& file = "hypothesis.ini") {
  CaseConfig cfg;
  cfg.file = file;
  const auto sections = parse_sections(in, file);
  const ConfigSection* hyp = nullptr;
  for (const auto& s : sections)
    if (s.kind == "hypothesis") {
      if (hyp) throw InputError(file, s.line, "more than one [hypothesis] section");
      hyp = &s;
    }
  if (!hyp) throw InputError(file, 1, "missing [hypothesis] section");
  detail::only_keys(*hyp, {"name", "known", "unknowns"}, file);
  std::vector<std::string> known;
  try {
    known = hyp->has("known") ? detail::name_list(hyp->values.at("known").first) : std::vector<std::string>{};
  } catch (const ValidationError& e) {
    throw InputError(file, hyp->values.at("known").second, e.what());
  }
  const std::size_t unknowns = hyp->has("unknowns") ? detail::count_at(*hyp, "unknowns", file) : 0;
  const std::string name = hyp->has("name") ? hyp->values.at("name").first : (hyp->argument.empty() ? "H" : hyp->argument);
  std::vector<const ConfigSection*> trace_sections;
  for (const auto& s : sections) {
    if (s.kind == "trace") {
      if (s.argument.empty()) throw InputError(file, s.line, "[trace] needs a trace name");
      for (const auto* t : trace_sections)
        if (t->argument == s.argument) throw InputError(file, s.line, "trace " + s.argument + " defined twice");
      trace_sections.push_back(&s);
    } else if (s.kind != "hypothesis" && s.kind != "parameters" && s.kind != "optimizer") {
      throw InputError(file, s.line, "unknown section [" + s.kind + "]");
    }
  }
  if (trace_sections.empty()) throw InputError(file, hyp->line, "at least one [trace NAME] section is required");
  cfg.hypothesis = Hypothesis::simple(name, known, unknowns, trace_sections.size());
  for (std::size_t t = 0; t < trace_sections.size(); ++t) {
    const auto& s = *trace_sections[t];
    detail::only_keys(s, {"threshold", "contributors"}, file);
    TraceConfig tc;
    tc.name = s.argument;
    tc.line = s.line;
    if (!s.has("threshold")) throw InputError(file, s.line, "trace " + tc.name + " needs a threshold");
    tc.threshold = detail::number_at(s, "threshold", file);
    if (!(tc.threshold > 0.0)) throw InputError(file, s.values.at("threshold").second, "threshold must be positive");
    if (s.has("contributors")) {
      const auto line = s.values.at("contributors").second;
      std::vector<std::string> who;
      try {
        who = detail::name_list(s.values.at("contributors").first);
      } catch (const ValidationError& e) {
        throw InputError(file, line, e.what());
      }
      std::vector<std::size_t> members;
      for (const auto& w : who) {
        std::size_t i = 0;
        while (i < cfg.hypothesis.contributors.size() && cfg.hypothesis.contributors[i].name != w) ++i;
        if (i == cfg.hypothesis.contributors.size()) throw InputError(file, line, w + " is not a contributor");
        if (std::find(members.begin(), members.end(), i) != members.end()) throw InputError(file, line, w + " listed twice");
        members.push_back(i);
      }
      if (members.empty()) throw InputError(file, line, "a trace needs at least one contributor");
      std::sort(members.begin(), members.end());
      cfg.hypothesis.trace_members[t] = members;
      tc.contributors = who;
    }
    cfg.traces.push_back(std::move(tc));
  }
  try {
    cfg.hypothesis.validate(cfg.traces.size());
  } catch (const ValidationError& e) {
    throw InputError(file, hyp->line, e.what());
  }
  for (const auto& s : sections) {
    if (s.kind == "parameters") {
      detail::only_keys(s, {"rho", "eta", "xi", "phi"}, file);
      if (std::none_of(cfg.traces.begin(), cfg.traces.end(), [&](const TraceConfig& t) { return t.name == s.argument; }))
        throw InputError(file, s.line, "[parameters] names unknown trace '" + s.argument + "'");
      if (cfg.parameters.count(s.argument)) throw InputError(file, s.line, "parameters for " + s.argument + " given twice");
      for (const char* k : {"rho", "eta", "xi", "phi"})
        if (!s.has(k)) throw InputError(file, s.line, std::string("[parameters] lacks ") + k);
      ParameterConfig pc;
      pc.line = s.line;
      pc.rho = detail::number_at(s, "rho", file);
      pc.eta = detail::number_at(s, "eta", file);
      pc.xi = detail::number_at(s, "xi", file);
      const auto& [phi, line] = s.values.at("phi");
      for (const auto& item : split(phi, ',')) {
        const auto colon = item.find(':');
        const auto v = colon == std::string::npos ? std::nullopt : to_number(trim(item.substr(colon + 1)));
        if (!v) throw InputError(file, line, "phi entries look like NAME: fraction");
        if (!pc.phi.emplace(trim(item.substr(0, colon)), *v).second) throw InputError(file, line, "duplicate phi entry");
      }
      cfg.parameters.emplace(s.argument, std::move(pc));
    } else if (s.kind == "optimizer") {
      detail::only_keys(s,
                        {"restarts", "seed", "tolerance", "max_evaluations", "polish_rounds", "initial_step",
                         "restart_spread", "standard_errors"},
                        file);
      auto& o = cfg.optimizer;
      if (s.has("restarts")) o.restarts = detail::count_at(s, "restarts", file);
      if (s.has("seed")) o.seed = detail::count_at(s, "seed", file);
      if (s.has("tolerance")) o.tolerance = detail::number_at(s, "tolerance", file);
      if (s.has("max_evaluations")) o.max_evaluations = detail::count_at(s, "max_evaluations", file);
      if (s.has("polish_rounds")) o.polish_rounds = detail::count_at(s, "polish_rounds", file);
      if (s.has("initial_step")) o.initial_step = detail::number_at(s, "initial_step", file);
      if (s.has("restart_spread")) o.restart_spread = detail::number_at(s, "restart_spread", file);
      if (s.has("standard_errors")) o.standard_errors = detail::flag_at(s, "standard_errors", file);
      if (!(o.tolerance > 0.0) || !(o.initial_step > 0.0) || !(o.restart_spread >= 0.0))
        throw InputError(file, s.line, "optimizer tolerance, step and spread must be positive");
    }
  }
  if (cfg.has_parameters()) cfg.model_parameters();  // validate eagerly
  return cfg;
}

/// Inverse of parse_case_config up to comments and formatting.
inline void write_case_config(std::ostream& out, const CaseConfig& cfg) {
  const auto& h = cfg.hypothesis;
  out << "[hypothesis]\nname = " << h.name << "\nknown = ";
  bool first = true;
  for (const auto& c : h.contributors)
    if (c.known) {
      out << (first ? "" : ", ") << c.name;
      first = false;
    }
  out << "\nunknowns = " << h.unknown_indices().size() << "\n";
  for (std::size_t t = 0; t < cfg.traces.size(); ++t) {
    out << "\n[trace " << cfg.traces[t].name << "]\nthreshold = " << exact(cfg.traces[t].threshold) << "\n";
    if (cfg.traces[t].contributors) {
      out << "contributors = ";
      for (std::size_t i = 0; i < cfg.traces[t].contributors->size(); ++i)
        out << (i ? ", " : "") << (*cfg.traces[t].contributors)[i];
      out << "\n";
    }
  }
  for (const auto& t : cfg.traces) {
    const auto it = cfg.parameters.find(t.name);
    if (it == cfg.parameters.end()) continue;
    const auto& p = it->second;
    out << "\n[parameters " << t.name << "]\nrho = " << exact(p.rho) << "\neta = " << exact(p.eta)
        << "\nxi = " << exact(p.xi) << "\nphi = ";
    bool f = true;
    for (const auto& [who, v] : p.phi) {
      out << (f ? "" : ", ") << who << ": " << exact(v);
      f = false;
    }
    out << "\n";
  }
  const auto& o = cfg.optimizer;
  out << "\n[optimizer]\nrestarts = " << o.restarts << "\nseed = " << o.seed << "\ntolerance = " << exact(o.tolerance)
      << "\nmax_evaluations = " << o.max_evaluations << "\npolish_rounds = " << o.polish_rounds
      << "\ninitial_step = " << exact(o.initial_step) << "\nrestart_spread = " << exact(o.restart_spread)
      << "\nstandard_errors = " << (o.standard_errors ? "true" : "false") << "\n";
}

// ---- case assembly -----------------------------------------------------------

struct CaseFiles {
  std::string frequencies = "frequencies.csv";
  std::string peaks = "peaks.csv";
  std::string profiles = "profiles.csv";
};

/// Builds CaseData from parsed tables for the traces named in `traces`.
/// Every error points at the offending row.
inline CaseData assemble_case(const std::vector<AlleleLadder>& ladders, const std::vector<PeakRow>& peaks,
                              const std::vector<ProfileRow>& profiles, const std::vector<TraceConfig>& traces,
                              const CaseFiles& files = {}) {
  CaseData d;
  std::map<std::string, std::size_t> trace_index, marker_index;
  for (const auto& t : traces) {
    trace_index.emplace(t.name, d.traces.size());
    d.traces.push_back(t.name);
    d.thresholds.push_back(t.threshold);
  }
  for (const auto& l : ladders) {
    marker_index.emplace(l.marker, d.markers.size());
    d.markers.push_back({l, std::vector<std::vector<double>>(traces.size(), std::vector<double>(l.size(), 0.0))});
  }
  auto allele_of = [&](const std::string& marker, const std::string& allele, const std::string& file,
                       std::size_t line) -> std::pair<std::size_t, std::size_t> {
    const auto m = marker_index.find(marker);
    if (m == marker_index.end()) throw InputError(file, line, "marker " + marker + " has no allele frequencies");
    const auto a = d.markers[m->second].ladder.index_of(allele);
    if (!a) throw InputError(file, line, "allele " + allele + " is not in the ladder of " + marker);
    return {m->second, *a};
  };
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
  for (const auto& p : peaks) {
    const auto t = trace_index.find(p.trace);
    if (t == trace_index.end()) throw InputError(files.peaks, p.line, "trace " + p.trace + " is not configured");
    const auto [m, a] = allele_of(p.marker, p.allele, files.peaks, p.line);
    if (!seen.insert({t->second, m, a}).second)
      throw InputError(files.peaks, p.line, "duplicate peak for " + p.marker + ":" + p.allele + " in " + p.trace);
    if (p.height > 0.0 && p.height < d.thresholds[t->second])
      throw InputError(files.peaks, p.line, "height " + exact(p.height) + " lies below the threshold of " + p.trace);
    d.markers[m].heights[t->second][a] = p.height;
  }
  struct Pending {
    std::vector<Profile> counts;
    std::vector<std::size_t> last_line;
    std::size_t first_line = 0;
  };
  std::map<std::string, Pending> pending;
  std::set<std::tuple<std::string, std::size_t, std::size_t>> seen_profile;
  for (const auto& r : profiles) {
    const auto [m, a] = allele_of(r.marker, r.allele, files.profiles, r.line);
    auto [it, fresh] = pending.try_emplace(r.individual);
    auto& p = it->second;
    if (fresh) {
      p.first_line = r.line;
      for (const auto& md : d.markers) p.counts.emplace_back(md.ladder.size(), 0);
      p.last_line.assign(d.markers.size(), 0);
    }
    if (!seen_profile.insert({r.individual, m, a}).second)
      throw InputError(files.profiles, r.line, "duplicate row for " + r.individual + " at " + r.marker + ":" + r.allele);
    p.counts[m][a] = r.count;
    p.last_line[m] = r.line;
  }
  for (auto& [who, p] : pending) {
    for (std::size_t m = 0; m < d.markers.size(); ++m) {
      if (p.last_line[m] == 0)
        throw InputError(files.profiles, p.first_line, who + " has no genotype at marker " + d.markers[m].ladder.marker);
      int sum = 0;
      for (int c : p.counts[m]) sum += c;
      if (sum != 2)
        throw InputError(files.profiles, p.last_line[m],
                         "counts of " + who + " at " + d.markers[m].ladder.marker + " sum to " + std::to_string(sum));
    }
    d.profiles.emplace(who, std::move(p.counts));
  }
  d.validate();
  return d;
}

/// Everything a command needs: the case under one hypothesis file.
struct CaseBundle {
  CaseFiles files;
  std::vector<AlleleLadder> ladders;
  std::vector<PeakRow> peaks;
  std::vector<ProfileRow> profiles;
  CaseConfig config;
  CaseData data;
};

/// Empty peak or profile paths mean no peaks and no reference profiles.
inline CaseBundle load_case(const CaseFiles& files, const std::string& hypothesis_file) {
  CaseBundle b;
  b.files = files;
  {
    auto in = open_input(files.frequencies);
    b.ladders = parse_frequencies(in, files.frequencies);
  }
  if (!files.peaks.empty()) {
    auto in = open_input(files.peaks);
    b.peaks = parse_peaks(in, files.peaks);
  }
  if (!files.profiles.empty()) {
    auto in = open_input(files.profiles);
    b.profiles = parse_profiles(in, files.profiles);
  }
  {
    auto in = open_input(hypothesis_file);
    b.config = parse_case_config(in, hypothesis_file);
  }
  b.data = assemble_case(b.ladders, b.peaks, b.profiles, b.config.traces, files);
  try {
    b.data.validate_against(b.config.hypothesis);
  } catch (const ValidationError& e) {
    throw InputError(hypothesis_file, 1, e.what());
  }
  return b;
}

}  // namespace dnamix::io

#endif  // DNAMIX_IO_HPP
