// Random cases and adapters to the enumeration oracle.
#ifndef DNAMIX_TESTS_FIXTURES_HPP
#define DNAMIX_TESTS_FIXTURES_HPP

#include <random>
#include <string>
#include <vector>

#include "dnamix/case.hpp"
#include "dnamix/inference.hpp"
#include "oracles.hpp"

namespace fixture {

using namespace dnamix;

struct RandomCase {
  CaseData data;
  Hypothesis h;
  std::vector<ModelParameters> psi;
  std::vector<std::vector<std::vector<int>>> truth;  // [marker][roster][allele]
};

struct CaseShape {
  std::size_t markers = 1;
  std::size_t min_alleles = 2, max_alleles = 5;
  std::size_t known = 0, unknown = 1;
  std::size_t traces = 1;
  bool partial_membership = false;  // drop one contributor from every other trace
  double threshold = 50.0;
};

template <class Rng>
std::vector<double> random_frequencies(std::size_t A, Rng& rng) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<double> q(A);
  double sum = 0.0;
  for (double& x : q) sum += x = u(rng);
  for (double& x : q) x /= sum;
  return q;
}

template <class Rng>
std::vector<int> random_genotype(const std::vector<double>& q, Rng& rng) {
  std::discrete_distribution<std::size_t> d(q.begin(), q.end());
  std::vector<int> c(q.size(), 0);
  ++c[d(rng)];
  ++c[d(rng)];
  return c;
}

inline double lambda_of(std::size_t a, const std::vector<std::vector<int>>& roster, const ModelParameters& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < roster.size(); ++i) {
    const double next = a + 1 < roster[i].size() ? roster[i][a + 1] : 0.0;
    s += ((1.0 - p.xi) * roster[i][a] + p.xi * next) * p.phi[i];
  }
  return p.rho * s;
}

template <class Rng>
std::vector<std::vector<double>> draw_heights(const std::vector<std::vector<int>>& roster,
                                              const std::vector<ModelParameters>& psi, Rng& rng) {
  const std::size_t A = roster.front().size();
  std::vector<std::vector<double>> out(psi.size(), std::vector<double>(A, 0.0));
  for (std::size_t t = 0; t < psi.size(); ++t)
    for (std::size_t a = 0; a < A; ++a) {
      const double lambda = lambda_of(a, roster, psi[t]);
      if (lambda == 0.0) continue;
      const double h = std::gamma_distribution<double>(lambda, psi[t].eta)(rng);
      out[t][a] = h >= psi[t].threshold ? h : 0.0;
    }
  return out;
}

template <class Rng>
RandomCase random_case(const CaseShape& s, Rng& rng) {
  RandomCase rc;
  std::vector<std::string> known;
  for (std::size_t i = 0; i < s.known; ++i) known.push_back("K" + std::to_string(i + 1));
  rc.h = Hypothesis::simple("H", known, s.unknown, s.traces);
  const std::size_t n = s.known + s.unknown;
  if (s.partial_membership && n > 1)
    for (std::size_t t = 1; t < s.traces; t += 2) rc.h.trace_members[t].erase(rc.h.trace_members[t].begin());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t t = 0; t < s.traces; ++t) {
    rc.data.traces.push_back("T" + std::to_string(t + 1));
    rc.data.thresholds.push_back(s.threshold);
    ModelParameters p;
    p.rho = 4.0 + 8.0 * u(rng);
    p.eta = 15.0 + 25.0 * u(rng);
    p.xi = 0.15 * u(rng);
    p.threshold = s.threshold;
    p.phi.assign(n, 0.0);
    double sum = 0.0;
    for (std::size_t i : rc.h.trace_members[t]) sum += p.phi[i] = 0.2 + u(rng);
    for (double& f : p.phi) f /= sum;
    rc.psi.push_back(p);
  }
  std::uniform_int_distribution<std::size_t> alleles(s.min_alleles, s.max_alleles);
  for (std::size_t m = 0; m < s.markers; ++m) {
    const std::size_t A = alleles(rng);
    MarkerData md;
    md.ladder.marker = "M" + std::to_string(m + 1);
    for (std::size_t a = 0; a < A; ++a) md.ladder.labels.push_back(std::to_string(8 + a));
    md.ladder.frequencies = random_frequencies(A, rng);
    std::vector<std::vector<int>> roster;
    for (std::size_t i = 0; i < n; ++i) roster.push_back(random_genotype(md.ladder.frequencies, rng));
    md.heights = draw_heights(roster, rc.psi, rng);
    for (std::size_t i = 0; i < s.known; ++i) rc.data.profiles[known[i]].push_back(roster[i]);
    rc.data.markers.push_back(std::move(md));
    rc.truth.push_back(std::move(roster));
  }
  return rc;
}

/// Oracle for one marker of a case under `h` at `psi`.
inline oracle::MixtureEnumeration enumeration(const CaseData& data, std::size_t marker, const Hypothesis& h,
                                              const std::vector<ModelParameters>& psi, bool presence_only = false) {
  oracle::MixtureEnumeration e;
  e.q = data.markers[marker].ladder.frequencies;
  for (const auto& c : h.contributors) {
    e.known.push_back(c.known);
    if (c.known) e.profiles.push_back(data.profiles.at(c.name).at(marker));
  }
  for (std::size_t t = 0; t < psi.size(); ++t) {
    oracle::Params p{psi[t].rho, psi[t].xi, psi[t].eta, psi[t].threshold, psi[t].phi};
    for (std::size_t i = 0; i < p.phi.size(); ++i)
      if (!h.member(t, i)) p.phi[i] = 0.0;
    e.traces.push_back(p);
  }
  e.heights = data.markers[marker].heights;
  e.presence_only = presence_only;
  return e;
}

inline double oracle_log_likelihood(const CaseData& data, const Hypothesis& h, const std::vector<ModelParameters>& psi,
                                    bool presence_only = false) {
  double s = 0.0;
  for (std::size_t m = 0; m < data.markers.size(); ++m)
    s += enumeration(data, m, h, psi, presence_only).log_likelihood();
  return s;
}

}  // namespace fixture

#endif  // DNAMIX_TESTS_FIXTURES_HPP
