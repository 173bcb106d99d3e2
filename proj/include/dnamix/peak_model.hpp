#ifndef DNAMIX_PEAK_MODEL_HPP
#define DNAMIX_PEAK_MODEL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dnamix/errors.hpp"
#include "dnamix/gamma.hpp"
#include "dnamix/mixture_network.hpp"

namespace dnamix {

/// Peak-height parameters of one trace. `phi` is indexed by the position of
/// the contributor in the hypothesis roster; contributors absent from the
/// trace have fraction 0.
struct ModelParameters {
  double rho = 1.0;
  double xi = 0.0;
  double eta = 1.0;
  double threshold = 1.0;
  std::vector<double> phi;

  void validate() const {
    if (!(rho > 0.0) || !(eta > 0.0)) throw ValidationError("rho and eta must be positive");
    if (!(xi >= 0.0 && xi < 1.0)) throw ValidationError("xi must lie in [0, 1)");
    if (!(threshold > 0.0)) throw ValidationError("detection threshold must be positive");
    double sum = 0.0;
    for (double f : phi) {
      if (!(f >= 0.0)) throw ValidationError("mixture fractions must be non-negative");
      sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("mixture fractions must sum to 1");
  }
};

struct PeakObservation {
  std::size_t allele = 0;
  double height = 0.0;  // 0 encodes below threshold
};

/// Fractions of the marker network's contributors in one trace: unknowns in
/// chain order and known contributors in the order of `known_counts`.
struct ContributorFractions {
  std::vector<double> unknown;
  std::vector<double> known;
};

/// Gamma shape rho * sum_i {(1 - xi) n_{ia} + xi n_{i,a+1}} phi_i.
/// Counts and fractions are aligned per contributor.
inline double shape(std::span<const int> counts_here, std::span<const int> counts_next, std::span<const double> phi,
                    double rho, double xi) {
  double dose = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double next = i < counts_next.size() ? counts_next[i] : 0.0;
    dose += ((1.0 - xi) * counts_here[i] + xi * next) * phi[i];
  }
  return rho * dose;
}

/// Shape at allele `a` for unknown counts (n_a, n_{a+1}) plus the known
/// contributors' fixed counts.
inline double marker_shape(const MarkerNetwork& m, std::size_t a, std::span<const int> here, std::span<const int> next,
                           const ContributorFractions& f, double rho, double xi) {
  const bool has_next = a + 1 < m.alleles();
  double dose = 0.0;
  for (std::size_t i = 0; i < here.size(); ++i)
    dose += ((1.0 - xi) * here[i] + xi * (has_next ? next[i] : 0)) * f.unknown[i];
  for (std::size_t j = 0; j < m.known_counts.size(); ++j) {
    const auto& c = m.known_counts[j];
    dose += ((1.0 - xi) * c[a] + xi * (has_next ? c[a + 1] : 0)) * f.known[j];
  }
  return rho * dose;
}

inline void check_observation(double z, double threshold) {
  if (z < 0.0 || (z > 0.0 && z < threshold))
    throw ValidationError("peak height " + std::to_string(z) + " lies between 0 and the threshold");
}

/// log f(z | lambda): gamma log density for z >= C, log G(C) for z = 0.
inline double log_peak_factor(double z, double lambda, double eta, double threshold) {
  check_observation(z, threshold);
  if (z == 0.0) {
    if (lambda == 0.0) return 0.0;
    return std::log(gamma::cdf(threshold, lambda, eta));
  }
  if (lambda == 0.0) return -std::numeric_limits<double>::infinity();
  return gamma::log_pdf(z, lambda, eta);
}

inline double peak_factor(double z, double lambda, double eta, double threshold) {
  return std::exp(log_peak_factor(z, lambda, eta, threshold));
}

/// P(Z <= z | lambda) for the thresholded height Z = H 1{H >= C}.
inline double peak_cdf(double z, double lambda, double eta, double threshold) {
  if (z < 0.0) return 0.0;
  if (z < threshold) return gamma::cdf(threshold, lambda, eta);
  return gamma::cdf(z, lambda, eta);
}

/// Auxiliary CPTs for one allele, each giving P(Y = 1 | configuration) over
/// the slot's parent configurations.
struct AlleleCpts {
  bool observed = false;
  bool possible = true;        // false when an observed peak has zero density everywhere
  std::vector<double> o;       // P(O = 1 | .): peak above threshold
  std::vector<double> o_off;   // P(O = 0 | .) for unobserved alleles
  double log_scale = 0.0;      // log k_a (0 for unobserved alleles)
  std::vector<double> d;       // P(D = 1 | .) = 1 - G(C)
  std::vector<double> d_off;   // P(D = 0 | .) = G(C), not as 1 - d
  std::vector<double> lambda;  // shape per configuration
  std::vector<double> query_heights;
  std::vector<std::vector<double>> q;  // P(Q = 1 | .) = P(Z <= z) per query height
};

struct AuxCptBundle {
  std::vector<AlleleCpts> alleles;
};

struct PeakParameters {
  double rho = 1.0, xi = 0.0, eta = 1.0, threshold = 1.0;
};

inline PeakParameters peak_parameters(const ModelParameters& p) { return {p.rho, p.xi, p.eta, p.threshold}; }

/// Builds the O, D and Q tables for every allele of a marker.
/// `heights[a]` is the observed height (0 when unobserved). The O scale k_a
/// is the largest density over configurations; it changes with the
/// parameters, so bundles are rebuilt for every parameter value.
inline AuxCptBundle build_aux_cpts(const MarkerNetwork& m, std::span<const double> heights, const PeakParameters& psi,
                                   const ContributorFractions& fractions,
                                   const std::vector<std::vector<double>>& query_heights = {}) {
  const std::size_t A = m.alleles();
  if (heights.size() != A) throw ValidationError("height vector does not match the ladder of " + m.ladder.marker);
  if (fractions.unknown.size() != m.unknowns() || fractions.known.size() != m.known_counts.size())
    throw ValidationError("contributor fractions do not match the marker network");
  AuxCptBundle bundle;
  bundle.alleles.resize(A);
  for (std::size_t a = 0; a < A; ++a) {
    AlleleCpts& t = bundle.alleles[a];
    const double z = heights[a];
    check_observation(z, psi.threshold);
    t.observed = z > 0.0;
    const std::size_t rows = m.slot_configurations(a);
    t.lambda.resize(rows);
    std::vector<double> log_g(rows);
    t.d.resize(rows);
    t.d_off.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto [here, next] = m.decode_slot_configuration(a, r);
      const double lambda = marker_shape(m, a, here, next, fractions, psi.rho, psi.xi);
      t.lambda[r] = lambda;
      t.d[r] = gamma::survival(psi.threshold, lambda, psi.eta);
      t.d_off[r] = lambda == 0.0 ? 1.0 : gamma::cdf(psi.threshold, lambda, psi.eta);
      if (t.observed) log_g[r] = log_peak_factor(z, lambda, psi.eta, psi.threshold);
    }
    t.o.resize(rows);
    if (t.observed) {
      const double log_k = *std::max_element(log_g.begin(), log_g.end());
      if (std::isinf(log_k)) {
        t.possible = false;
        std::fill(t.o.begin(), t.o.end(), 0.0);
        t.log_scale = 0.0;
      } else {
        t.log_scale = log_k;
        for (std::size_t r = 0; r < rows; ++r) t.o[r] = std::exp(log_g[r] - log_k);
      }
    } else {
      t.o = t.d;
      t.o_off = t.d_off;
    }
    if (a < query_heights.size()) {
      t.query_heights = query_heights[a];
      for (double qz : t.query_heights) {
        std::vector<double> col(rows);
        for (std::size_t r = 0; r < rows; ++r) col[r] = peak_cdf(qz, t.lambda[r], psi.eta, psi.threshold);
        t.q.push_back(std::move(col));
      }
    }
  }
  return bundle;
}

/// Likelihood evidence on O_a: (0, k_a) when seen, (1, 0) when unseen.
/// Returns the vector and the log of its common scale factor.
inline std::pair<std::array<double, 2>, double> o_evidence(const AlleleCpts& t) {
  if (t.observed) return {{0.0, 1.0}, t.log_scale};
  return {{1.0, 0.0}, 0.0};
}

/// Draw H ~ Gamma(lambda, eta) (H = 0 when lambda = 0) and return H 1{H >= C}.
template <class Rng>
double sample_height(double lambda, double eta, double threshold, Rng& rng) {
  if (lambda == 0.0) return 0.0;
  std::gamma_distribution<double> dist(lambda, eta);
  const double h = dist(rng);
  return h >= threshold ? h : 0.0;
}

}  // namespace dnamix

#endif  // DNAMIX_PEAK_MODEL_HPP
