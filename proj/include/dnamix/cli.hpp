#ifndef DNAMIX_CLI_HPP
#define DNAMIX_CLI_HPP

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dnamix/diagnostics.hpp"
#include "dnamix/inference.hpp"
#include "dnamix/io.hpp"
#include "dnamix/mle.hpp"
#include "dnamix/report.hpp"

namespace dnamix::cli {

enum ExitCode : int { ok = 0, internal = 1, validation = 2, numerical = 3 };

struct Options {
  std::string frequencies, peaks, profiles, hypothesis;
  std::string hp, hd;
  std::string out = "-";
  std::string table;
  std::string method = "optimal";
  unsigned threads = 0;
  std::optional<std::uint64_t> seed;
  // command specific
  double mass = 0.99;
  bool joint = false, lump = false, presence = false, compressed = false;
  std::size_t max_samples = 200000;
  std::string condition = "none";
  std::string kind;
  std::string mode = "all-others";
  std::vector<double> levels{0.005, 0.995};
  std::string tree_a, tree_k, tree_n;
};

namespace detail {

using report::Json;
using report::number;

inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write " + path);
  f << text;
}

/// "3", "2,4,6" or "3..8".
inline std::vector<std::size_t> size_list(const std::string& s, const std::string& flag) {
  std::vector<std::size_t> out;
  const auto dots = s.find("..");
  if (dots != std::string::npos) {
    const auto lo = io::to_integer(io::trim(s.substr(0, dots)));
    const auto hi = io::to_integer(io::trim(s.substr(dots + 2)));
    if (!lo || !hi || *lo < 0 || *hi < *lo) throw ValidationError(flag + " expects N, a list or a range lo..hi");
    for (long long v = *lo; v <= *hi; ++v) out.push_back(static_cast<std::size_t>(v));
    return out;
  }
  for (const auto& part : io::split(s, ',')) {
    const auto v = io::to_integer(part);
    if (!v || *v < 0) throw ValidationError(flag + " expects non-negative integers");
    out.push_back(static_cast<std::size_t>(*v));
  }
  return out;
}

inline unsigned thread_count(const Options& o, std::size_t markers) {
  if (o.threads > 0) return o.threads;
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::clamp<std::size_t>(markers, 1, hw));
}

inline io::CaseFiles files_of(const Options& o) { return {o.frequencies, o.peaks, o.profiles}; }

inline io::CaseBundle load(const Options& o, const std::string& hypothesis) {
  if (hypothesis.empty()) throw ValidationError("a hypothesis file is required");
  return io::load_case(files_of(o), hypothesis);
}

inline Json inputs(const Options& o, std::vector<std::pair<std::string, std::string>> hypotheses) {
  std::vector<std::pair<std::string, std::string>> files{
      {"frequencies", o.frequencies}, {"peaks", o.peaks}, {"profiles", o.profiles}};
  for (auto& h : hypotheses) files.push_back(std::move(h));
  return report::inputs(files);
}

inline OptimizerConfig optimizer(const Options& o, const io::CaseBundle& b, unsigned threads) {
  OptimizerConfig c = b.config.optimizer;
  if (o.seed) c.seed = *o.seed;
  if (b.config.has_parameters()) c.start = b.config.model_parameters();  // the fit starts there
  c.threads = threads;
  return c;
}

inline std::uint64_t seed_of(const Options& o, const io::CaseBundle& b) { return o.seed ? *o.seed : b.config.optimizer.seed; }

/// Parameters from the hypothesis file, or a maximum-likelihood fit when the
/// file gives none. Records which in `j`.
inline std::vector<ModelParameters> parameters_or_fit(const Options& o, const io::CaseBundle& b, const CaseModel& model,
                                                     unsigned threads, Json& j) {
  if (b.config.has_parameters()) {
    j["parameter_source"] = "given";
    return b.config.model_parameters();
  }
  if (b.data.observed_peaks() == 0) throw ValidationError("no parameters given and no peaks to fit them from");
  const CaseModel fit_model(b.data, b.config.hypothesis, parse_tree_method(o.method));
  const auto f = maximize_likelihood(fit_model, optimizer(o, b, threads));
  j["parameter_source"] = "fitted";
  j["fit"] = report::fit(fit_model, f);
  if (!std::isfinite(f.log_likelihood)) throw NumericalError("maximum likelihood fit failed: impossible evidence");
  return f.parameters;
}

// ---- commands --------------------------------------------------------------

inline int loglik(const Options& o, std::ostream& out) {
  const auto b = load(o, o.hypothesis);
  if (!b.config.has_parameters()) throw ValidationError(o.hypothesis + ": loglik needs [parameters] sections; use mle");
  const unsigned threads = thread_count(o, b.data.markers.size());
  const SlotLayout layout{o.presence, false};
  const CaseModel model(b.data, b.config.hypothesis, parse_tree_method(o.method), layout);
  const auto psi = b.config.model_parameters();
  const auto per = model.marker_log_likelihoods(psi, threads);
  const double total = dnamix::detail::ordered_sum(per);
  Json j = report::header("loglik", inputs(o, {{"hypothesis", o.hypothesis}}));
  j["hypothesis"] = b.config.hypothesis.name;
  j["contributors"] = report::contributors(b.config.hypothesis);
  j["parameters"] = report::parameters(b.config.hypothesis, model.trace_names(), psi);
  j["log_likelihood"] = number(total);
  j["log10_likelihood"] = number(total / std::log(10.0));
  j["markers"] = report::marker_table(model, per);
  if (o.presence) {
    const double pl = model.presence_log_likelihood(psi, threads);
    j["presence_log10_likelihood"] = number(pl / std::log(10.0));
  }
  emit(o.out, report::dump(j), out);
  if (!o.table.empty()) {
    std::ostringstream t;
    t << "marker,log_likelihood,log10_likelihood\n";
    for (std::size_t m = 0; m < per.size(); ++m)
      t << io::csv_field(model.marker(m).name()) << ',' << report::fixed12(per[m]) << ','
        << report::fixed12(per[m] / std::log(10.0)) << '\n';
    emit(o.table, t.str(), out);
  }
  return std::isfinite(total) ? ok : numerical;
}

inline int mle(const Options& o, std::ostream& out) {
  const auto b = load(o, o.hypothesis);
  const unsigned threads = thread_count(o, b.data.markers.size());
  const CaseModel model(b.data, b.config.hypothesis, parse_tree_method(o.method));
  const auto cfg = optimizer(o, b, threads);
  const auto f = maximize_likelihood(model, cfg);
  Json j = report::header("mle", inputs(o, {{"hypothesis", o.hypothesis}}));
  j["seed"] = cfg.seed;
  j["fit"] = report::fit(model, f);
  emit(o.out, report::dump(j), out);
  if (!o.table.empty()) {
    std::ostringstream t;
    t << "marker,log_likelihood,log10_likelihood\n";
    for (std::size_t m = 0; m < f.marker_log_likelihoods.size(); ++m)
      t << io::csv_field(model.marker(m).name()) << ',' << report::fixed12(f.marker_log_likelihoods[m]) << ','
        << report::fixed12(f.marker_log_likelihoods[m] / std::log(10.0)) << '\n';
    emit(o.table, t.str(), out);
  }
  return std::isfinite(f.log_likelihood) ? ok : numerical;
}

/// The defence file must describe the same traces as the prosecution file.
inline void check_same_traces(const io::CaseBundle& p, const io::CaseBundle& d) {
  if (p.config.trace_names() != d.config.trace_names())
    throw ValidationError("prosecution and defence files name different traces");
  for (std::size_t t = 0; t < p.config.traces.size(); ++t)
    if (p.config.traces[t].threshold != d.config.traces[t].threshold)
      throw ValidationError("prosecution and defence thresholds differ for trace " + p.config.traces[t].name);
}

/// Side-by-side fit table: one row per quantity, defence then
/// prosecution, each with its standard error.
inline std::string comparison_csv(const CaseModel& mp, const FitResult& fp, const CaseModel& md, const FitResult& fd) {
  struct Cell {
    double value = std::nan(""), se = std::nan("");
  };
  std::vector<std::pair<std::string, std::string>> keys;  // (trace, quantity)
  std::map<std::pair<std::string, std::string>, std::array<Cell, 2>> cells;
  auto add = [&](int side, const CaseModel& m, const FitResult& f) {
    const auto& h = m.hypothesis();
    for (std::size_t t = 0; t < f.parameters.size(); ++t) {
      const auto& p = f.parameters[t];
      const ParameterErrors* e = f.standard_errors ? &(*f.standard_errors)[t] : nullptr;
      const std::string tr = m.trace_names()[t];
      std::vector<std::tuple<std::string, double, double>> q;
      for (std::size_t i : h.trace_members[t])
        q.emplace_back("phi " + h.contributors[i].name, p.phi[i], e ? e->phi[i] : std::nan(""));
      q.emplace_back("rho", p.rho, e ? e->rho : std::nan(""));
      q.emplace_back("eta", p.eta, e ? e->eta : std::nan(""));
      q.emplace_back("xi", p.xi, e ? e->xi : std::nan(""));
      for (const auto& [name, v, s] : q) {
        const auto key = std::make_pair(tr, name);
        if (!cells.count(key)) keys.push_back(key);
        cells[key][side] = {v, s};
      }
    }
    const auto key = std::make_pair(std::string(), std::string("log10 L"));
    if (!cells.count(key)) keys.push_back(key);
    cells[key][side] = {f.log10_likelihood, std::nan("")};
  };
  add(0, md, fd);
  add(1, mp, fp);
  // per trace: fractions first, then rho, eta, xi; the likelihood row last
  auto rank = [](const std::pair<std::string, std::string>& k) {
    if (k.second == "log10 L") return 2;
    return k.second.rfind("phi ", 0) == 0 ? 0 : 1;
  };
  std::vector<std::string> trace_order;
  for (const auto& k : keys)
    if (std::find(trace_order.begin(), trace_order.end(), k.first) == trace_order.end()) trace_order.push_back(k.first);
  std::stable_sort(keys.begin(), keys.end(), [&](const auto& a, const auto& b) {
    if (rank(a) == 2 || rank(b) == 2) return rank(a) < rank(b);
    const auto ta = std::find(trace_order.begin(), trace_order.end(), a.first);
    const auto tb = std::find(trace_order.begin(), trace_order.end(), b.first);
    if (ta != tb) return ta < tb;
    return rank(a) < rank(b);
  });
  auto cell = [](double v) { return std::isnan(v) ? std::string() : report::fixed12(v); };
  std::ostringstream t;
  t << "trace,quantity," << io::csv_field(md.hypothesis().name) << ",se," << io::csv_field(mp.hypothesis().name)
    << ",se\n";
  for (const auto& k : keys) {
    const auto& c = cells[k];
    t << io::csv_field(k.first) << ',' << io::csv_field(k.second) << ',' << cell(c[0].value) << ',' << cell(c[0].se)
      << ',' << cell(c[1].value) << ',' << cell(c[1].se) << '\n';
  }
  return t.str();
}

inline int lr(const Options& o, std::ostream& out, bool presence_only) {
  if (o.hp.empty() || o.hd.empty()) throw ValidationError("--hp and --hd are required");
  const auto bp = load(o, o.hp);
  const auto bd = load(o, o.hd);
  check_same_traces(bp, bd);
  const unsigned threads = thread_count(o, bp.data.markers.size());
  const auto method = parse_tree_method(o.method);
  const SlotLayout layout{presence_only || o.presence, false};
  const CaseModel mp(bp.data, bp.config.hypothesis, method, layout);
  const CaseModel md(bd.data, bd.config.hypothesis, method, layout);
  Json j = report::header(presence_only ? "presence-lr" : "lr", inputs(o, {{"prosecution", o.hp}, {"defence", o.hd}}));
  const auto cfg_p = optimizer(o, bp, threads);
  const auto cfg_d = optimizer(o, bd, threads);
  j["seed"] = cfg_p.seed;
  int code = ok;
  std::vector<ModelParameters> psi_p, psi_d;
  const bool given = presence_only && bp.config.has_parameters() && bd.config.has_parameters();
  if (given) {
    j["parameter_source"] = "given";
    psi_p = bp.config.model_parameters();
    psi_d = bd.config.model_parameters();
  } else {
    LikelihoodRatio r;
    r.prosecution = maximize_likelihood(mp, cfg_p);
    r.defence = maximize_likelihood(md, cfg_d);
    r.log10_lr = r.prosecution.log10_likelihood - r.defence.log10_likelihood;
    j["parameter_source"] = "fitted";
    j["prosecution"] = report::fit(mp, r.prosecution);
    j["defence"] = report::fit(md, r.defence);
    const bool finite = std::isfinite(r.prosecution.log_likelihood) && std::isfinite(r.defence.log_likelihood);
    if (!finite) {
      j["log10_lr"] = nullptr;
      j["error"] = std::string("fit failed under ") +
                   (std::isfinite(r.prosecution.log_likelihood) ? md.hypothesis().name : mp.hypothesis().name);
      code = numerical;
    } else {
      j["log10_lr"] = number(r.log10_lr);
    }
    psi_p = r.prosecution.parameters;
    psi_d = r.defence.parameters;
    if (!o.table.empty()) emit(o.table, comparison_csv(mp, r.prosecution, md, r.defence), out);
  }
  if ((presence_only || o.presence) && code == ok) {
    const auto pr = presence_likelihood_ratio(mp, psi_p, md, psi_d, threads);
    j["presence"] = {{"log10_prosecution", number(pr.log10_prosecution)},
                     {"log10_defence", number(pr.log10_defence)},
                     {"log10_lr", number(pr.log10_lr)}};
    if (!std::isfinite(pr.log10_prosecution) || !std::isfinite(pr.log10_defence)) code = numerical;
  }
  emit(o.out, report::dump(j), out);
  return code;
}

inline int deconvolve_cmd(const Options& o, std::ostream& out) {
  const auto b = load(o, o.hypothesis);
  const unsigned threads = thread_count(o, b.data.markers.size());
  const CaseModel model(b.data, b.config.hypothesis, parse_tree_method(o.method));
  Json j = report::header("deconvolve", inputs(o, {{"hypothesis", o.hypothesis}}));
  const auto seed = seed_of(o, b);
  j["seed"] = seed;
  const auto psi = parameters_or_fit(o, b, model, threads, j);
  j["parameters"] = report::parameters(b.config.hypothesis, model.trace_names(), psi);
  DeconvolutionOptions opt;
  opt.mass = o.mass;
  opt.lump_unobserved = o.lump;
  opt.seed = seed;
  opt.max_samples = o.max_samples;
  std::vector<GenotypeRanking> rankings;
  if (o.joint) {
    rankings.push_back(deconvolve_joint(model, psi, opt));
  } else {
    for (const auto& m : model.markers()) rankings.push_back(deconvolve(m, psi, opt));
  }
  Json rs = Json::array();
  for (const auto& g : rankings) rs.push_back(report::ranking(b.config.hypothesis, g));
  j["mass"] = number(o.mass);
  j["rankings"] = rs;
  emit(o.out, report::dump(j), out);
  if (!o.table.empty()) {
    std::ostringstream t;
    t << "marker,rank,probability";
    for (std::size_t u : b.config.hypothesis.unknown_indices())
      t << ',' << io::csv_field(b.config.hypothesis.contributors[u].name);
    t << '\n';
    for (const auto& g : rankings) report::ranking_csv(t, b.config.hypothesis, g);
    emit(o.table, t.str(), out);
  }
  return ok;
}

inline int simulate_cmd(const Options& o, std::ostream& out) {
  SimulationCondition cond;
  if (o.condition == "none") cond.kind = SimulationCondition::Kind::none;
  else if (o.condition == "peaks") cond.kind = SimulationCondition::Kind::peaks;
  else if (o.condition == "presence") cond.kind = SimulationCondition::Kind::presence;
  else throw ValidationError("--condition must be none, peaks or presence");
  if (cond.kind != SimulationCondition::Kind::none && o.peaks.empty())
    throw ValidationError("conditioned simulation needs --peaks");
  const auto b = load(o, o.hypothesis);
  const unsigned threads = thread_count(o, b.data.markers.size());
  const SlotLayout layout{cond.kind == SimulationCondition::Kind::presence, false};
  const CaseModel model(b.data, b.config.hypothesis, parse_tree_method(o.method), layout);
  Json j = report::header("simulate", inputs(o, {{"hypothesis", o.hypothesis}}));
  const std::uint64_t seed = o.seed.value_or(1);
  j["seed"] = seed;
  j["condition"] = o.condition;
  const auto psi = parameters_or_fit(o, b, model, threads, j);
  j["parameters"] = report::parameters(b.config.hypothesis, model.trace_names(), psi);
  const auto sim = simulate_trace(model, psi, cond, seed);
  const auto data = with_simulated_heights(b.data, sim);
  const auto unknown = b.config.hypothesis.unknown_indices();
  Json genos = Json::array();
  for (std::size_t m = 0; m < data.markers.size(); ++m) {
    Json g = Json::object();
    const auto& ladder = data.markers[m].ladder;
    for (std::size_t u = 0; u < unknown.size(); ++u) {
      std::string s;
      for (std::size_t a = 0; a < ladder.size(); ++a)
        for (int c = 0; c < sim.genotypes[m][u][a]; ++c) s += (s.empty() ? "" : "/") + ladder.labels[a];
      g[b.config.hypothesis.contributors[unknown[u]].name] = s;
    }
    genos.push_back({{"marker", ladder.marker}, {"unknowns", g}});
  }
  j["genotypes"] = genos;
  const auto rows = io::peak_rows(data);
  Json peaks = Json::array();
  for (const auto& r : rows)
    peaks.push_back({{"trace", r.trace}, {"marker", r.marker}, {"allele", r.allele}, {"height", number(r.height)}});
  j["peaks"] = peaks;
  emit(o.out, report::dump(j), out);
  if (!o.table.empty()) {
    std::ostringstream t;
    io::write_peaks(t, rows);
    emit(o.table, t.str(), out);
  }
  return ok;
}

inline int diagnose_cmd(const Options& o, std::ostream& out) {
  if (o.kind != "qq" && o.kind != "intervals" && o.kind != "preq")
    throw ValidationError("diagnose expects qq, intervals or preq");
  const auto b = load(o, o.hypothesis);
  const unsigned threads = thread_count(o, b.data.markers.size());
  const CaseModel model(b.data, b.config.hypothesis, parse_tree_method(o.method));
  Json j = report::header("diagnose " + o.kind, inputs(o, {{"hypothesis", o.hypothesis}}));
  const auto psi = parameters_or_fit(o, b, model, threads, j);
  j["parameters"] = report::parameters(b.config.hypothesis, model.trace_names(), psi);
  const auto& traces = model.trace_names();
  std::ostringstream t;
  if (o.kind == "qq") {
    const auto mode = parse_conditioning_mode(o.mode);
    const auto pts = qq_points(model, psi, mode);
    std::vector<double> u;
    for (const auto& p : pts) u.push_back(p.u);
    j["mode"] = to_string(mode);
    j["peaks"] = pts.size();
    j["ks_distance"] = pts.empty() ? Json(nullptr) : number(ks_distance(u));
    j["points"] = report::qq(traces, pts);
    t << "marker,trace,allele,height,u,position\n";
    for (const auto& p : pts)
      t << io::csv_field(p.marker) << ',' << io::csv_field(traces[p.trace]) << ',' << io::csv_field(p.allele) << ','
        << report::fixed12(p.height) << ',' << report::fixed12(p.u) << ',' << report::fixed12(p.position) << '\n';
  } else if (o.kind == "intervals") {
    j["levels"] = report::numbers(o.levels);
    Json rows = Json::array();
    t << "marker,trace,allele,height,presence,absence";
    for (double l : o.levels) t << ",q" << report::fixed12(l);
    t << '\n';
    for (std::size_t tr = 0; tr < model.traces(); ++tr)
      for (const auto& m : model.markers())
        for (const auto& r : prediction_intervals(m, psi, tr, o.levels)) {
          rows.push_back(report::interval(traces, r));
          t << io::csv_field(r.marker) << ',' << io::csv_field(traces[r.trace]) << ',' << io::csv_field(r.allele) << ','
            << report::fixed12(r.height) << ',' << report::fixed12(r.presence) << ',' << report::fixed12(r.absence);
          for (std::size_t i = 0; i < o.levels.size(); ++i)
            t << ',' << (r.quantiles.empty() ? std::string() : report::fixed12(r.quantiles[i]));
          t << '\n';
        }
    j["rows"] = rows;
  } else {
    const auto mon = prequential_monitor(model, psi);
    j["monitor"] = report::monitor(traces, mon);
    t << "step,marker,trace,allele,p,observed,y,expectation,variance,cumulative,normalized,limit95,limit99\n";
    for (const auto& r : mon.rows)
      t << r.step << ',' << io::csv_field(r.marker) << ',' << io::csv_field(traces[r.trace]) << ','
        << io::csv_field(r.allele) << ',' << report::fixed12(r.p) << ',' << (r.observed ? 1 : 0) << ','
        << report::fixed12(r.y) << ',' << report::fixed12(r.expectation) << ',' << report::fixed12(r.variance) << ','
        << report::fixed12(r.cumulative) << ',' << report::fixed12(r.normalized) << ','
        << report::fixed12(r.limit95) << ',' << report::fixed12(r.limit99) << '\n';
  }
  emit(o.out, report::dump(j), out);
  if (!o.table.empty()) emit(o.table, t.str(), out);
  return ok;
}

inline int treesize(const Options& o, std::ostream& out) {
  const auto method = parse_tree_method(o.method);
  if (o.tree_a.empty() || o.tree_k.empty() || o.tree_n.empty()) throw ValidationError("treesize needs --A, --k and --N");
  const auto As = size_list(o.tree_a, "--A"), ks = size_list(o.tree_k, "--k"), Ns = size_list(o.tree_n, "--N");
  if (o.compressed && method != TreeMethod::slice) throw ValidationError("--compressed applies to the slice tree only");
  Json j = report::header("treesize", Json::object());
  j["method"] = to_string(method);
  Json rows = Json::array();
  std::ostringstream t;
  t << "method,A,k,N,total_size" << (o.compressed ? ",compressed_size" : "") << '\n';
  for (std::size_t A : As)
    for (std::size_t k : ks)
      for (std::size_t N : Ns) {
        if (A < 2 || k < 1 || N < 1) throw ValidationError("tree sizes need A >= 2, k >= 1 and N >= 1");
        const auto r = tree_size_report(method, A, k, N);
        Json row{{"A", A}, {"k", k}, {"N", N}, {"total_size", report::count(r.total_size)}};
        t << to_string(method) << ',' << A << ',' << k << ',' << N << ',' << to_string(r.total_size);
        if (o.compressed) {
          row["compressed_size"] = r.compressed_size ? report::count(*r.compressed_size) : Json(nullptr);
          t << ',' << (r.compressed_size ? to_string(*r.compressed_size) : std::string());
        }
        t << '\n';
        rows.push_back(row);
      }
  j["rows"] = rows;
  emit(o.out, report::dump(j), out);
  if (!o.table.empty()) emit(o.table, t.str(), out);
  return ok;
}

}  // namespace detail

/// Runs one subcommand; returns the process exit code. Reports go to
/// `out` (or files), messages to `err`.
inline int run_command(int argc, const char* const* argv, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  CLI::App app{"Peak-height mixture analysis with junction-tree propagation", "dnamix"};
  app.set_version_flag("--version", report::tool_version);
  app.require_subcommand(1);
  Options o;

  auto add_case = [&](CLI::App* s, bool hypothesis, bool peaks_required) {
    s->add_option("--frequencies", o.frequencies, "allele frequency CSV (marker,allele,frequency)")->required();
    auto* p = s->add_option("--peaks", o.peaks, "peak CSV (trace,marker,allele,height)");
    if (peaks_required) p->required();
    s->add_option("--profiles", o.profiles, "reference profile CSV (individual,marker,allele,count)");
    if (hypothesis) s->add_option("--hypothesis", o.hypothesis, "hypothesis/config file")->required();
    s->add_option("--method", o.method, "tree construction: slice, triangle, optimal")->capture_default_str();
    s->add_option("--threads", o.threads, "marker worker threads (0: markers capped at hardware)");
    s->add_option("--out", o.out, "JSON report path ('-' for stdout)")->capture_default_str();
    s->add_option("--table", o.table, "CSV side-table path");
  };
  auto seed = [&](CLI::App* s) {
    s->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& v) { o.seed = v; }, "random seed");
  };

  auto* loglik = app.add_subcommand("loglik", "log-likelihood at the parameters of the hypothesis file");
  add_case(loglik, true, true);
  loglik->add_flag("--presence", o.presence, "also report the presence-only likelihood");

  auto* mle = app.add_subcommand("mle", "maximum-likelihood parameter estimates");
  add_case(mle, true, true);
  seed(mle);

  auto* lr = app.add_subcommand("lr", "likelihood ratio between two hypothesis files");
  add_case(lr, false, true);
  lr->add_option("--hp", o.hp, "prosecution hypothesis file")->required();
  lr->add_option("--hd", o.hd, "defence hypothesis file")->required();
  lr->add_flag("--presence", o.presence, "add the presence-only ratio at the fitted parameters");
  seed(lr);

  auto* plr = app.add_subcommand("presence-lr", "likelihood ratio from peak presence only");
  add_case(plr, false, true);
  plr->add_option("--hp", o.hp, "prosecution hypothesis file")->required();
  plr->add_option("--hd", o.hd, "defence hypothesis file")->required();
  seed(plr);

  auto* dec = app.add_subcommand("deconvolve", "rank unknown-contributor genotypes");
  add_case(dec, true, true);
  dec->add_option("--mass", o.mass, "posterior mass to cover")->capture_default_str();
  dec->add_flag("--joint", o.joint, "rank combinations across all markers jointly");
  dec->add_flag("--lump", o.lump, "lump unobserved alleles into one dropout column");
  dec->add_option("--max-samples", o.max_samples, "sampling budget")->capture_default_str();
  seed(dec);

  auto* sim = app.add_subcommand("simulate", "simulate peak heights from the model");
  add_case(sim, true, false);
  sim->add_option("--condition", o.condition, "none, peaks or presence")->capture_default_str();
  seed(sim);

  auto* diag = app.add_subcommand("diagnose", "model diagnostics: qq, intervals, preq");
  add_case(diag, true, true);
  diag->add_option("kind", o.kind, "qq, intervals or preq")->required();
  diag->add_option("--mode", o.mode, "qq conditioning: marginal, all-others, preceding")->capture_default_str();
  diag->add_option("--levels", o.levels, "prediction levels")->delimiter(',');
  seed(diag);

  auto* ts = app.add_subcommand("treesize", "junction tree total sizes (N, list or lo..hi for each of A, k, N)");
  ts->add_option("--method", o.method, "slice, triangle or optimal")->required();
  ts->add_option("--A", o.tree_a, "alleles")->required();
  ts->add_option("--k", o.tree_k, "unknown contributors")->required();
  ts->add_option("--N", o.tree_n, "traces")->required();
  ts->add_flag("--compressed", o.compressed, "also report the compressed slice size");
  ts->add_option("--out", o.out, "JSON report path ('-' for stdout)");
  ts->add_option("--table", o.table, "CSV side-table path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : validation;
  }
  try {
    if (loglik->parsed()) return detail::loglik(o, out);
    if (mle->parsed()) return detail::mle(o, out);
    if (lr->parsed()) return detail::lr(o, out, false);
    if (plr->parsed()) return detail::lr(o, out, true);
    if (dec->parsed()) return detail::deconvolve_cmd(o, out);
    if (sim->parsed()) return detail::simulate_cmd(o, out);
    if (diag->parsed()) return detail::diagnose_cmd(o, out);
    if (ts->parsed()) return detail::treesize(o, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return validation;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return numerical;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return internal;
  }
  return validation;
}

}  // namespace dnamix::cli

#endif  // DNAMIX_CLI_HPP
