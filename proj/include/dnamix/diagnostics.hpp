#ifndef DNAMIX_DIAGNOSTICS_HPP
#define DNAMIX_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dnamix/errors.hpp"
#include "dnamix/gamma.hpp"
#include "dnamix/inference.hpp"
#include "dnamix/peak_model.hpp"

namespace dnamix {

enum class ConditioningMode { marginal, all_others, preceding };

inline const char* to_string(ConditioningMode m) {
  switch (m) {
    case ConditioningMode::marginal: return "marginal";
    case ConditioningMode::all_others: return "all-others";
    case ConditioningMode::preceding: return "preceding";
  }
  return "?";
}

inline ConditioningMode parse_conditioning_mode(const std::string& s) {
  if (s == "marginal") return ConditioningMode::marginal;
  if (s == "all-others" || s == "all_others") return ConditioningMode::all_others;
  if (s == "preceding") return ConditioningMode::preceding;
  throw ValidationError("unknown conditioning mode '" + s + "'");
}

/// Conditioning set of `target` within its marker; (trace, allele) pairs are
/// ordered trace-major.
inline std::vector<AlleleRef> conditioning_set(const MarkerModel& m, AlleleRef target, ConditioningMode mode) {
  std::vector<AlleleRef> out;
  if (mode == ConditioningMode::marginal) return out;
  for (const auto& r : m.all_alleles()) {
    if (r == target) continue;
    if (mode == ConditioningMode::preceding && !(r < target)) continue;
    out.push_back(r);
  }
  return out;
}

/// Law of the thresholded height at one allele given the conditioning,
/// as a mixture over the allele's parent configurations.
class ConditionalPeakDistribution {
 public:
  ConditionalPeakDistribution(std::vector<double> weights, std::vector<double> lambda, double eta, double threshold)
      : w_(std::move(weights)), lambda_(std::move(lambda)), eta_(eta), c_(threshold) {
    if (w_.size() != lambda_.size()) throw ValidationError("weights do not match the configurations");
    double g = 0.0;
    for (std::size_t i = 0; i < w_.size(); ++i) {
      g += w_[i] * gamma::cdf(c_, lambda_[i], eta_);
      presence_ += w_[i] * gamma::survival(c_, lambda_[i], eta_);
    }
    below_ = g;
  }

  /// P(Z >= C | conditioning).
  double presence() const { return presence_; }
  double absence() const { return 1.0 - presence_; }
  double threshold() const { return c_; }

  /// P(Z <= z | Z >= C, conditioning); throws when presence is zero.
  double cdf(double z) const {
    if (!(presence_ > 0.0)) throw NumericalError("conditioning gives zero probability of a peak");
    if (z <= c_) return 0.0;
    double g = 0.0;
    for (std::size_t i = 0; i < w_.size(); ++i) g += w_[i] * gamma::cdf(z, lambda_[i], eta_);
    return std::clamp((g - below_) / presence_, 0.0, 1.0);
  }

  /// Smallest z with cdf(z) = level, by bracket doubling and bisection.
  double quantile(double level, double tolerance = 1e-8) const {
    if (!(level > 0.0 && level < 1.0)) throw ValidationError("quantile levels must lie in (0, 1)");
    double lo = c_, hi = 2.0 * c_;
    for (int i = 0; cdf(hi) < level; ++i) {
      if (i > 1100) throw NumericalError("quantile bracket does not close");
      lo = hi;
      hi *= 2.0;
    }
    for (int i = 0; i < 400; ++i) {
      const double mid = 0.5 * (lo + hi);
      const double f = cdf(mid);
      if (std::abs(f - level) <= tolerance * level) return mid;
      (f < level ? lo : hi) = mid;
      if (hi - lo <= 1e-14 * hi) break;
    }
    return 0.5 * (lo + hi);
  }

 private:
  std::vector<double> w_, lambda_;
  double eta_, c_;
  double presence_ = 0.0, below_ = 0.0;
};

/// Distribution at `target` read from a charge already conditioned as wanted.
inline ConditionalPeakDistribution peak_distribution(const MarkerModel& m, const Charge& conditioned,
                                                     const ModelParameters& psi, AlleleRef target) {
  const auto parents = m.network().slot_parents(target.allele);
  auto weights = conditioned.marginal(parents).values;
  const auto cpts = m.bundle(target.trace, psi);
  return {std::move(weights), cpts.alleles[target.allele].lambda, psi.eta, psi.threshold};
}

inline ConditionalPeakDistribution conditional_peak_distribution(const MarkerModel& m,
                                                                 const std::vector<ModelParameters>& psi,
                                                                 AlleleRef target, ConditioningMode mode) {
  const Charge c = m.posterior(psi, conditioning_set(m, target, mode));
  return peak_distribution(m, c, psi.at(target.trace), target);
}

/// P(Z_a <= z | Z_a >= C, conditioning) through the Q and D auxiliary
/// variables of `target`: {P(Q = 1) - P(D = 0)} / P(D = 1).
inline double conditional_peak_cdf(const MarkerModel& m, const std::vector<ModelParameters>& psi, AlleleRef target,
                                   double z, ConditioningMode mode) {
  const auto& x = psi.at(target.trace);
  if (z < x.threshold) throw ValidationError("conditional peak CDF needs z >= C");
  if (!m.layout().presence || !m.layout().query)
    throw ValidationError("conditional peak CDF needs a model with presence and query slots");
  auto b = m.bundles(psi);
  std::vector<std::vector<double>> queries(m.alleles());
  queries[target.allele] = {z};
  b[target.trace] = m.bundle(target.trace, x, queries);
  DiscreteNetwork net = m.bind(b);
  const NodeId q = m.slot_node(target, SlotKind::query);
  const NodeId d = m.slot_node(target, SlotKind::presence);
  net.set_cpt(q, binary_cpt(b[target.trace].alleles[target.allele].q[0]));
  Charge c = m.charge(net);
  c.propagate();
  for (const auto& r : conditioning_set(m, target, mode))
    if (!m.enter_peak_evidence(c, b, r)) throw ImpossibleEvidence();
  c.propagate();
  const NodeId qn[1] = {q}, dn[1] = {d};
  const double p_q = c.marginal(qn).values[1];
  const double p_d = c.marginal(dn).values[1];
  if (!(p_d > 0.0)) throw NumericalError("conditioning gives zero probability of a peak");
  return std::clamp((p_q - (1.0 - p_d)) / p_d, 0.0, 1.0);
}

// ---- QQ points -------------------------------------------------------------

struct QqPoint {
  std::string marker;
  std::size_t trace = 0;
  std::string allele;
  double height = 0.0;
  double u = 0.0;
  double position = 0.0;
};

/// One probability transform per observed peak, sorted by u, with plotting
/// positions (i - 0.5)/n.
inline std::vector<QqPoint> qq_points(const CaseModel& model, const std::vector<ModelParameters>& psi,
                                      ConditioningMode mode) {
  std::vector<QqPoint> out;
  for (const auto& m : model.markers()) {
    auto emit = [&](const Charge& c, AlleleRef r) {
      const double z = m.height(r);
      const auto dist = peak_distribution(m, c, psi.at(r.trace), r);
      out.push_back({m.name(), r.trace, m.network().ladder.labels[r.allele], z, dist.cdf(z), 0.0});
    };
    const auto b = m.bundles(psi);
    const auto refs = m.all_alleles();
    if (mode == ConditioningMode::marginal) {
      const Charge c = m.posterior(psi, {});
      for (const auto& r : refs)
        if (m.height(r) > 0.0) emit(c, r);
    } else if (mode == ConditioningMode::preceding) {
      Charge c = m.charge(m.bind(b));
      c.propagate();
      for (const auto& r : refs) {
        if (m.height(r) > 0.0) emit(c, r);
        if (!m.enter_peak_evidence(c, b, r)) throw ImpossibleEvidence();
        c.propagate();
      }
    } else {
      Charge full = m.charge(m.bind(b));
      full.propagate();
      for (const auto& r : refs)
        if (!m.enter_peak_evidence(full, b, r)) throw ImpossibleEvidence();
      full.propagate();
      for (const auto& r : refs) {
        if (!(m.height(r) > 0.0)) continue;
        Charge c = full;
        c.retract_evidence(m.slot_node(r, SlotKind::observed));
        c.propagate();
        emit(c, r);
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const QqPoint& a, const QqPoint& b) { return a.u < b.u; });
  const double n = static_cast<double>(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i].position = (static_cast<double>(i) + 0.5) / n;
  return out;
}

/// sup |F_n - U(0,1)| of the transforms.
inline double ks_distance(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    d = std::max(d, static_cast<double>(i + 1) / n - u[i]);
    d = std::max(d, u[i] - static_cast<double>(i) / n);
  }
  return d;
}

// ---- prediction intervals --------------------------------------------------

struct PredictionRow {
  std::string marker;
  std::size_t trace = 0;
  std::string allele;
  double height = 0.0;
  double presence = 0.0;
  double absence = 0.0;
  std::vector<double> levels;
  std::vector<double> quantiles;  // empty when a peak is impossible
};

/// Per-allele quantiles of the height given every other observation of the
/// marker and presence at the allele, plus the presence probability.
inline std::vector<PredictionRow> prediction_intervals(const MarkerModel& m, const std::vector<ModelParameters>& psi,
                                                       std::size_t trace, const std::vector<double>& levels) {
  for (double l : levels)
    if (!(l > 0.0 && l < 1.0)) throw ValidationError("prediction levels must lie in (0, 1)");
  const auto b = m.bundles(psi);
  Charge full = m.charge(m.bind(b));
  full.propagate();
  const auto refs = m.all_alleles();
  for (const auto& r : refs)
    if (!m.enter_peak_evidence(full, b, r)) throw ImpossibleEvidence();
  std::vector<PredictionRow> rows;
  for (std::size_t a = 0; a < m.alleles(); ++a) {
    const AlleleRef target{trace, a};
    Charge c = full;
    c.retract_evidence(m.slot_node(target, SlotKind::observed));
    c.propagate();
    const auto dist = peak_distribution(m, c, psi.at(trace), target);
    PredictionRow row{m.name(), trace, m.network().ladder.labels[a], m.height(target), dist.presence(),
                      dist.absence(), levels, {}};
    if (dist.presence() > 0.0)
      for (double l : levels) row.quantiles.push_back(dist.quantile(l));
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---- prequential monitor ---------------------------------------------------

struct PrequentialStep {
  std::size_t marker = 0;
  AlleleRef ref;
};

/// Traces in order, then markers in input order, then alleles ascending.
inline std::vector<PrequentialStep> default_ordering(const CaseModel& model) {
  std::vector<PrequentialStep> out;
  for (std::size_t t = 0; t < model.traces(); ++t)
    for (std::size_t m = 0; m < model.markers().size(); ++m)
      for (std::size_t a = 0; a < model.marker(m).alleles(); ++a) out.push_back({m, {t, a}});
  return out;
}

struct LogScoreMoments {
  double y = 0.0;
  double expectation = 0.0;
  double variance = 0.0;
  bool informative = false;
};

/// Y = -log P(observed outcome) with its mean and variance under p.
inline LogScoreMoments log_score(double p, bool observed) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("presence probability outside [0, 1]");
  if (p == 0.0 || p == 1.0) {
    if ((p == 0.0 && observed) || (p == 1.0 && !observed))
      throw NumericalError("an observation has zero predictive probability");
    return {};
  }
  const double lp = std::log(p), lq = std::log1p(-p);
  LogScoreMoments s;
  s.informative = true;
  s.y = observed ? -lp : -lq;
  s.expectation = -p * lp - (1.0 - p) * lq;
  const double r = lp - lq;
  s.variance = p * (1.0 - p) * r * r;
  return s;
}

struct MonitorRow {
  std::size_t step = 0;
  std::string marker;
  std::size_t trace = 0;
  std::string allele;
  double p = 0.0;
  bool observed = false;
  double y = 0.0;
  double expectation = 0.0;
  double variance = 0.0;
  double cumulative = 0.0;           // M
  double cumulative_variance = 0.0;  // sum of Var
  double normalized = 0.0;
  double limit95 = 0.0;
  double limit99 = 0.0;
};

struct MonitorResult {
  std::vector<MonitorRow> rows;  // informative steps only
  double score = 0.0;
  double variance = 0.0;
  std::optional<double> normalized;
  std::size_t skipped = 0;
};

inline constexpr double normal_quantile_95 = 1.6448536269514722;
inline constexpr double normal_quantile_99 = 2.3263478740408408;

/// Sequential presence predictions p = P(Z >= C | preceding observations),
/// each followed by conditioning on the observation itself.
inline MonitorResult prequential_monitor(const CaseModel& model, const std::vector<ModelParameters>& psi,
                                         const std::vector<PrequentialStep>& ordering) {
  struct State {
    std::optional<Charge> charge;
    std::vector<AuxCptBundle> bundles;
  };
  std::vector<State> states(model.markers().size());
  MonitorResult out;
  std::size_t index = 0;
  for (const auto& step : ordering) {
    const auto& m = model.marker(step.marker);
    auto& s = states[step.marker];
    if (!s.charge) {
      s.bundles = m.bundles(psi);
      s.charge.emplace(m.charge(m.bind(s.bundles)));
    }
    if (!s.charge->canonical()) s.charge->propagate();
    const auto dist = peak_distribution(m, *s.charge, psi.at(step.ref.trace), step.ref);
    const double p = std::clamp(dist.presence(), 0.0, 1.0);
    const bool observed = m.height(step.ref) > 0.0;
    const auto score = log_score(p, observed);
    ++index;
    if (score.informative) {
      MonitorRow row;
      row.step = index;
      row.marker = m.name();
      row.trace = step.ref.trace;
      row.allele = m.network().ladder.labels[step.ref.allele];
      row.p = p;
      row.observed = observed;
      row.y = score.y;
      row.expectation = score.expectation;
      row.variance = score.variance;
      out.score += score.y - score.expectation;
      out.variance += score.variance;
      row.cumulative = out.score;
      row.cumulative_variance = out.variance;
      const double sd = std::sqrt(out.variance);
      row.normalized = sd > 0.0 ? out.score / sd : 0.0;
      row.limit95 = normal_quantile_95 * sd;
      row.limit99 = normal_quantile_99 * sd;
      out.rows.push_back(std::move(row));
    } else {
      ++out.skipped;
    }
    if (!m.enter_peak_evidence(*s.charge, s.bundles, step.ref)) throw ImpossibleEvidence();
  }
  if (out.variance > 0.0) out.normalized = out.score / std::sqrt(out.variance);
  return out;
}

inline MonitorResult prequential_monitor(const CaseModel& model, const std::vector<ModelParameters>& psi) {
  return prequential_monitor(model, psi, default_ordering(model));
}

}  // namespace dnamix

#endif  // DNAMIX_DIAGNOSTICS_HPP
