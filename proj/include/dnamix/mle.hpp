#ifndef DNAMIX_MLE_HPP
#define DNAMIX_MLE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dnamix/case.hpp"
#include "dnamix/errors.hpp"
#include "dnamix/inference.hpp"

namespace dnamix {

/// Unconstrained coordinates for the per-trace parameters: log rho, log eta,
/// logit xi and the additive log-ratio of the trace members' fractions with
/// the last member as reference.
class ParameterCoder {
 public:
  ParameterCoder(const Hypothesis& h, std::vector<double> thresholds)
      : roster_(h.contributors.size()), members_(h.trace_members), thresholds_(std::move(thresholds)) {
    if (thresholds_.size() != members_.size()) throw ValidationError("one threshold per trace is required");
  }

  std::size_t traces() const { return members_.size(); }
  std::size_t dimension() const {
    std::size_t d = 0;
    for (const auto& m : members_) d += 3 + m.size() - 1;
    return d;
  }
  const std::vector<std::size_t>& members(std::size_t t) const { return members_.at(t); }

  std::vector<ModelParameters> decode(const std::vector<double>& theta) const {
    std::vector<ModelParameters> psi(traces());
    std::size_t p = 0;
    for (std::size_t t = 0; t < traces(); ++t) {
      auto& x = psi[t];
      x.rho = std::exp(theta[p++]);
      x.eta = std::exp(theta[p++]);
      x.xi = 1.0 / (1.0 + std::exp(-theta[p++]));
      if (x.xi >= 1.0) x.xi = std::nextafter(1.0, 0.0);
      x.threshold = thresholds_[t];
      x.phi.assign(roster_, 0.0);
      const auto& m = members_[t];
      // stable softmax with a zero logit for the reference member
      std::vector<double> logits(m.size(), 0.0);
      for (std::size_t j = 0; j + 1 < m.size(); ++j) logits[j] = theta[p++];
      const double mx = *std::max_element(logits.begin(), logits.end());
      double sum = 0.0;
      for (double& l : logits) sum += (l = std::exp(l - mx));
      for (std::size_t j = 0; j < m.size(); ++j) x.phi[m[j]] = logits[j] / sum;
    }
    return psi;
  }

  std::vector<double> encode(const std::vector<ModelParameters>& psi) const {
    if (psi.size() != traces()) throw ValidationError("one parameter set per trace is required");
    std::vector<double> theta;
    constexpr double floor = 1e-300;
    for (std::size_t t = 0; t < traces(); ++t) {
      const auto& x = psi[t];
      x.validate();
      theta.push_back(std::log(x.rho));
      theta.push_back(std::log(x.eta));
      const double xi = std::clamp(x.xi, 1e-300, 1.0 - 1e-16);
      theta.push_back(std::log(xi) - std::log1p(-xi));
      const auto& m = members_[t];
      const double ref = std::max(x.phi.at(m.back()), floor);
      for (std::size_t j = 0; j + 1 < m.size(); ++j) theta.push_back(std::log(std::max(x.phi.at(m[j]), floor) / ref));
    }
    return theta;
  }

  /// d(natural parameter)/d(theta) rows for trace `t`, natural order
  /// (rho, eta, xi, phi over members).
  Eigen::MatrixXd jacobian(const std::vector<ModelParameters>& psi, std::size_t t) const {
    std::size_t offset = 0;
    for (std::size_t s = 0; s < t; ++s) offset += 3 + members_[s].size() - 1;
    const auto& x = psi[t];
    const auto& m = members_[t];
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(3 + m.size()),
                                              static_cast<Eigen::Index>(dimension()));
    const auto o = static_cast<Eigen::Index>(offset);
    J(0, o) = x.rho;
    J(1, o + 1) = x.eta;
    J(2, o + 2) = x.xi * (1.0 - x.xi);
    for (std::size_t j = 0; j < m.size(); ++j)
      for (std::size_t l = 0; l + 1 < m.size(); ++l) {
        const double pj = x.phi[m[j]], pl = x.phi[m[l]];
        J(static_cast<Eigen::Index>(3 + j), o + 3 + static_cast<Eigen::Index>(l)) = (j == l ? pj : 0.0) - pj * pl;
      }
    return J;
  }

 private:
  std::size_t roster_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<double> thresholds_;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  double spread = std::numeric_limits<double>::infinity();
  bool converged = false;
};

/// Minimizes `f` from `x0` with an axis-aligned initial simplex. Converged
/// when the spread of function values over the simplex drops below `tol`.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    const std::vector<double>& x0, double step, double tol,
                                    std::size_t max_evaluations) {
  const std::size_t n = x0.size();
  NelderMeadResult r;
  auto eval = [&](const std::vector<double>& x) {
    ++r.evaluations;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };
  if (n == 0) {
    r.x = x0;
    r.value = eval(x0);
    r.spread = 0.0;
    r.converged = true;
    return r;
  }
  std::vector<std::vector<double>> simplex(n + 1, x0);
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += step;
  for (std::size_t i = 0; i <= n; ++i) values[i] = eval(simplex[i]);
  std::vector<std::size_t> idx(n + 1);
  auto sort_simplex = [&] {
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<std::vector<double>> s(n + 1);
    std::vector<double> v(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      s[i] = std::move(simplex[idx[i]]);
      v[i] = values[idx[i]];
    }
    simplex = std::move(s);
    values = std::move(v);
  };
  auto point = [&](const std::vector<double>& c, const std::vector<double>& w, double t) {
    std::vector<double> p(n);
    for (std::size_t j = 0; j < n; ++j) p[j] = c[j] + t * (w[j] - c[j]);
    return p;
  };
  sort_simplex();
  while (true) {
    r.spread = values[n] - values[0];
    if (std::isfinite(values[n]) && r.spread < tol) {
      r.converged = true;
      break;
    }
    if (r.evaluations >= max_evaluations) break;
    ++r.iterations;
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / static_cast<double>(n);
    const auto xr = point(centroid, simplex[n], -1.0);
    const double fr = eval(xr);
    if (fr < values[0]) {
      const auto xe = point(centroid, simplex[n], -2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[n] = xe;
        values[n] = fe;
      } else {
        simplex[n] = xr;
        values[n] = fr;
      }
    } else if (fr < values[n - 1]) {
      simplex[n] = xr;
      values[n] = fr;
    } else {
      const bool outside = fr < values[n];
      const auto xc = outside ? point(centroid, simplex[n], -0.5) : point(centroid, simplex[n], 0.5);
      const double fc = eval(xc);
      if (fc < std::min(fr, values[n])) {
        simplex[n] = xc;
        values[n] = fc;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          simplex[i] = point(simplex[0], simplex[i], 0.5);
          values[i] = eval(simplex[i]);
        }
      }
    }
    sort_simplex();
  }
  r.x = simplex[0];
  r.value = values[0];
  return r;
}

struct OptimizerConfig {
  std::size_t restarts = 5;
  std::uint64_t seed = 1;
  double tolerance = 1e-8;
  std::size_t max_evaluations = 5000;  // per simplex run
  std::size_t polish_rounds = 3;
  double initial_step = 0.5;
  double restart_spread = 1.0;  // sd of the random perturbation of the start
  bool standard_errors = true;
  unsigned threads = 1;
  double boundary_coordinate = 15.0;
  std::optional<std::vector<ModelParameters>> start;
};

struct ParameterErrors {
  double rho = 0.0, eta = 0.0, xi = 0.0;
  std::vector<double> phi;  // per roster entry; 0 outside the trace
};

struct FitResult {
  std::string hypothesis;
  std::vector<ModelParameters> parameters;
  double log_likelihood = negative_infinity;
  double log10_likelihood = negative_infinity;
  std::vector<double> marker_log_likelihoods;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  std::size_t restarts = 0;
  double simplex_spread = std::numeric_limits<double>::infinity();
  bool converged = false;
  bool at_boundary = false;
  std::optional<std::vector<ParameterErrors>> standard_errors;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<ModelParameters> heuristic_start(const CaseModel& model, const ParameterCoder& coder) {
  std::vector<ModelParameters> psi(model.traces());
  for (std::size_t t = 0; t < model.traces(); ++t) {
    double total = 0.0;
    for (const auto& m : model.markers())
      for (double z : m.heights()[t]) total += z;
    const double per_marker = model.markers().empty() ? 0.0 : total / static_cast<double>(model.markers().size());
    auto& x = psi[t];
    x.threshold = model.thresholds()[t];
    if (per_marker > 0.0) {
      x.rho = std::sqrt(per_marker / 2.0);
      x.eta = std::sqrt(per_marker / 2.0);
    } else {
      x.rho = 1.0;
      x.eta = x.threshold / 10.0;
    }
    x.xi = 0.05;
    x.phi.assign(model.hypothesis().contributors.size(), 0.0);
    const auto& m = coder.members(t);
    for (std::size_t i : m) x.phi[i] = 1.0 / static_cast<double>(m.size());
  }
  return psi;
}

// Relabels unknowns so their fractions are non-increasing in the first
// trace; only done when every unknown sits in the same traces, where the
// relabeling leaves the likelihood unchanged.
inline void canonicalize_unknowns(const Hypothesis& h, std::vector<ModelParameters>& psi) {
  const auto unknown = h.unknown_indices();
  if (unknown.size() < 2) return;
  for (std::size_t t = 0; t < h.traces(); ++t)
    for (std::size_t i : unknown)
      if (h.member(t, i) != h.member(t, unknown[0])) return;
  std::size_t ref = 0;
  while (ref < h.traces() && !h.member(ref, unknown[0])) ++ref;
  if (ref == h.traces()) return;
  std::vector<std::size_t> order(unknown.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return psi[ref].phi[unknown[a]] > psi[ref].phi[unknown[b]]; });
  for (auto& x : psi) {
    const auto old = x.phi;
    for (std::size_t j = 0; j < unknown.size(); ++j) x.phi[unknown[j]] = old[unknown[order[j]]];
  }
}

inline std::optional<std::vector<ParameterErrors>> standard_errors(
    const std::function<double(const std::vector<double>&)>& loglik, const ParameterCoder& coder,
    const std::vector<double>& theta, std::vector<std::string>& warnings) {
  const std::size_t n = theta.size();
  Eigen::MatrixXd H(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const double f0 = loglik(theta);
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = 1e-4 * std::max(1.0, std::abs(theta[i]));
  auto at = [&](std::size_t i, double di, std::size_t j, double dj) {
    auto x = theta;
    x[i] += di;
    x[j] += dj;
    return loglik(x);
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    H(ii, ii) = (at(i, h[i], i, 0.0) - 2.0 * f0 + at(i, -h[i], i, 0.0)) / (h[i] * h[i]);
    for (std::size_t j = 0; j < i; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double v = (at(i, h[i], j, h[j]) - at(i, h[i], j, -h[j]) - at(i, -h[i], j, h[j]) + at(i, -h[i], j, -h[j])) /
                       (4.0 * h[i] * h[j]);
      H(ii, jj) = H(jj, ii) = v;
    }
  }
  if (!H.allFinite()) {
    warnings.push_back("Hessian is not finite; standard errors omitted");
    return std::nullopt;
  }
  const Eigen::MatrixXd info = -H;
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (n > 0 && llt.info() != Eigen::Success) {
    warnings.push_back("observed information is not positive definite; standard errors omitted");
    return std::nullopt;
  }
  const Eigen::MatrixXd cov = n > 0 ? Eigen::MatrixXd(llt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols())))
                                    : Eigen::MatrixXd();
  const auto psi = coder.decode(theta);
  std::vector<ParameterErrors> out(coder.traces());
  for (std::size_t t = 0; t < coder.traces(); ++t) {
    const Eigen::MatrixXd J = coder.jacobian(psi, t);
    const Eigen::MatrixXd V = J * cov * J.transpose();
    auto se = [&](Eigen::Index r) { return std::sqrt(std::max(0.0, V(r, r))); };
    out[t].rho = se(0);
    out[t].eta = se(1);
    out[t].xi = se(2);
    out[t].phi.assign(psi[t].phi.size(), 0.0);
    const auto& m = coder.members(t);
    for (std::size_t j = 0; j < m.size(); ++j) out[t].phi[m[j]] = se(static_cast<Eigen::Index>(3 + j));
  }
  return out;
}

}  // namespace detail

/// Maximum-likelihood fit: simplex search from a heuristic start and
/// `restarts` seeded perturbations of it, each run polished by restarting
/// from its best vertex.
inline FitResult maximize_likelihood(const CaseModel& model, const OptimizerConfig& config = {}) {
  const ParameterCoder coder(model.hypothesis(), model.thresholds());
  const auto objective = [&](const std::vector<double>& theta) {
    const double ll = model.log_likelihood(coder.decode(theta), config.threads);
    return std::isfinite(ll) ? -ll : std::numeric_limits<double>::infinity();
  };
  FitResult fit;
  fit.hypothesis = model.hypothesis().name;
  const auto base = config.start ? coder.encode(*config.start) : coder.encode(detail::heuristic_start(model, coder));
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, config.restart_spread);
  NelderMeadResult best;
  const std::size_t starts = 1 + config.restarts;
  for (std::size_t s = 0; s < starts; ++s) {
    auto x0 = base;
    if (s > 0)
      for (double& v : x0) v += normal(rng);
    auto run = nelder_mead(objective, x0, config.initial_step, config.tolerance, config.max_evaluations);
    fit.iterations += run.iterations;
    fit.evaluations += run.evaluations;
    for (std::size_t p = 0; p < config.polish_rounds; ++p) {
      auto again = nelder_mead(objective, run.x, config.initial_step / 4.0, config.tolerance, config.max_evaluations);
      fit.iterations += again.iterations;
      fit.evaluations += again.evaluations;
      const double gain = run.value - again.value;
      if (again.value <= run.value) run = std::move(again);
      if (!(gain > config.tolerance)) break;
    }
    if (s > 0) ++fit.restarts;
    if (run.value < best.value || best.x.empty()) best = std::move(run);
  }
  fit.converged = best.converged;
  fit.simplex_spread = best.spread;
  fit.parameters = coder.decode(best.x);
  detail::canonicalize_unknowns(model.hypothesis(), fit.parameters);
  fit.marker_log_likelihoods = model.marker_log_likelihoods(fit.parameters, config.threads);
  fit.log_likelihood = detail::ordered_sum(fit.marker_log_likelihoods);
  fit.log10_likelihood = fit.log_likelihood / std::log(10.0);
  if (!fit.converged) fit.warnings.push_back("simplex did not converge within the evaluation budget");
  const auto theta = coder.encode(fit.parameters);
  for (double v : theta)
    if (std::abs(v) > config.boundary_coordinate) fit.at_boundary = true;
  std::size_t peaks = 0;
  for (const auto& m : model.markers())
    for (const auto& t : m.heights())
      for (double z : t) peaks += z > 0.0;
  if (peaks == 0) {
    fit.at_boundary = true;
    fit.warnings.push_back("no observed peaks; the likelihood is maximized on the parameter boundary");
  } else if (fit.at_boundary) {
    fit.warnings.push_back("estimate lies near the boundary of the parameter space");
  }
  if (!std::isfinite(fit.log_likelihood)) fit.warnings.push_back("likelihood is zero at every visited parameter");
  if (config.standard_errors && std::isfinite(fit.log_likelihood) && !fit.at_boundary) {
    const auto loglik = [&](const std::vector<double>& th) { return model.log_likelihood(coder.decode(th), config.threads); };
    fit.standard_errors = detail::standard_errors(loglik, coder, theta, fit.warnings);
  }
  return fit;
}

struct LikelihoodRatio {
  FitResult prosecution;
  FitResult defence;
  double log10_lr = 0.0;
};

/// Raised when a hypothesis cannot be fitted; carries whatever was computed.
class FitError : public NumericalError {
 public:
  FitError(const std::string& what, LikelihoodRatio partial)
      : NumericalError(what), partial_(std::make_shared<LikelihoodRatio>(std::move(partial))) {}
  const LikelihoodRatio& partial() const { return *partial_; }

 private:
  std::shared_ptr<const LikelihoodRatio> partial_;
};

inline LikelihoodRatio likelihood_ratio(const CaseModel& hp, const CaseModel& hd, const OptimizerConfig& config = {}) {
  LikelihoodRatio lr;
  lr.prosecution = maximize_likelihood(hp, config);
  lr.defence = maximize_likelihood(hd, config);
  const bool ok_p = std::isfinite(lr.prosecution.log_likelihood);
  const bool ok_d = std::isfinite(lr.defence.log_likelihood);
  if (!ok_p || !ok_d) {
    lr.log10_lr = std::numeric_limits<double>::quiet_NaN();
    throw FitError(std::string("fit failed under ") + (!ok_p ? hp.hypothesis().name : hd.hypothesis().name), lr);
  }
  lr.log10_lr = lr.prosecution.log10_likelihood - lr.defence.log10_likelihood;
  return lr;
}

inline LikelihoodRatio likelihood_ratio(const CaseData& data, const Hypothesis& hp, const Hypothesis& hd,
                                        const OptimizerConfig& config = {}, TreeMethod method = TreeMethod::optimal) {
  return likelihood_ratio(CaseModel(data, hp, method), CaseModel(data, hd, method), config);
}

struct PresenceRatio {
  double log10_prosecution = 0.0;
  double log10_defence = 0.0;
  double log10_lr = 0.0;
};

/// Presence-only likelihood ratio at given (typically height-fitted)
/// parameters; no refitting.
inline PresenceRatio presence_likelihood_ratio(const CaseModel& hp, const std::vector<ModelParameters>& psi_p,
                                               const CaseModel& hd, const std::vector<ModelParameters>& psi_d,
                                               unsigned threads = 1) {
  PresenceRatio r;
  r.log10_prosecution = hp.presence_log_likelihood(psi_p, threads) / std::log(10.0);
  r.log10_defence = hd.presence_log_likelihood(psi_d, threads) / std::log(10.0);
  r.log10_lr = r.log10_prosecution - r.log10_defence;
  return r;
}

}  // namespace dnamix

#endif  // DNAMIX_MLE_HPP
