#include <gtest/gtest.h>

#include <random>

#include <boost/math/distributions/gamma.hpp>

#include "dnamix/peak_model.hpp"

using namespace dnamix;

namespace {

AlleleLadder ladder(std::size_t A) {
  AlleleLadder l;
  l.marker = "M";
  for (std::size_t a = 0; a < A; ++a) {
    l.labels.push_back(std::to_string(a + 1));
    l.frequencies.push_back(1.0 / static_cast<double>(A));
  }
  return l;
}

double boost_cdf(double x, double a, double s) {
  return boost::math::cdf(boost::math::gamma_distribution<double>(a, s), x);
}

}  // namespace

TEST(Gamma, CdfAgreesWithReference) {
  for (double a : {0.05, 0.3, 1.0, 2.5, 7.0, 30.0, 150.0, 800.0})
    for (double s : {1.0, 10.0, 45.0})
      for (double r : {0.01, 0.2, 0.7, 1.0, 1.3, 3.0, 8.0}) {
        const double x = r * a * s;
        const double ref = boost_cdf(x, a, s);
        const double refq = boost::math::cdf(boost::math::complement(boost::math::gamma_distribution<double>(a, s), x));
        EXPECT_NEAR(gamma::cdf(x, a, s), ref, 1e-12 * ref + 1e-300) << a << " " << s << " " << x;
        EXPECT_NEAR(gamma::survival(x, a, s), refq, 1e-11 * refq + 1e-300) << a << " " << s << " " << x;
        const double pdf = boost::math::pdf(boost::math::gamma_distribution<double>(a, s), x);
        if (pdf > 1e-290) EXPECT_NEAR(gamma::log_pdf(x, a, s), std::log(pdf), 1e-10 * std::max(1.0, std::abs(std::log(pdf))));
      }
}

TEST(Gamma, DerivativeOfCdfIsDensity) {
  for (double a : {0.7, 3.0, 12.0}) {
    const double s = 20.0;
    for (double x : {5.0, 40.0, 90.0, 300.0}) {
      const double h = 1e-4 * x;
      const double numeric = (gamma::cdf(x + h, a, s) - gamma::cdf(x - h, a, s)) / (2 * h);
      const double dens = gamma::pdf(x, a, s);
      EXPECT_NEAR(numeric, dens, 1e-6 * dens + 1e-15);
    }
  }
}

TEST(Gamma, DegenerateShape) {
  EXPECT_EQ(gamma::cdf(0.0, 3.0, 2.0), 0.0);
  EXPECT_EQ(gamma::cdf(5.0, 0.0, 2.0), 1.0);
  EXPECT_EQ(gamma::survival(5.0, 0.0, 2.0), 0.0);
}

TEST(PeakShape, ExampleValues) {
  const int here[1] = {2}, next[1] = {0}, zero[1] = {0}, two[1] = {2};
  const double phi[1] = {1.0};
  EXPECT_DOUBLE_EQ(shape(here, next, phi, 2.0, 0.1), 3.6);
  EXPECT_EQ(shape(zero, two, phi, 2.0, 0.0), 0.0);
  EXPECT_EQ(shape(zero, zero, phi, 2.0, 0.3), 0.0);
}

TEST(PeakShape, KnownContributorsEnterAsOffsets) {
  auto m = build_marker_network(ladder(3), 1, {{0, 1, 1}}, 1);
  const ContributorFractions f{{0.6}, {0.4}};
  const std::vector<int> here{1}, next{0};
  // allele 2: unknown has one copy here; known has one copy here and one at allele 3
  const double lambda = marker_shape(m, 1, here, next, f, 10.0, 0.2);
  EXPECT_NEAR(lambda, 10.0 * (0.8 * 1 * 0.6 + (0.8 * 1 + 0.2 * 1) * 0.4), 1e-12);
}

TEST(PeakFactor, Limits) {
  EXPECT_EQ(peak_factor(0.0, 0.0, 30.0, 50.0), 1.0);
  EXPECT_EQ(peak_factor(500.0, 0.0, 30.0, 50.0), 0.0);
  const double ref = boost::math::pdf(boost::math::gamma_distribution<double>(3.6, 30.0), 150.0);
  EXPECT_NEAR(peak_factor(150.0, 3.6, 30.0, 50.0), ref, 1e-12 * ref);
  EXPECT_NEAR(peak_factor(0.0, 3.6, 30.0, 50.0), boost_cdf(50.0, 3.6, 30.0), 1e-13);
  EXPECT_THROW(peak_factor(20.0, 3.6, 30.0, 50.0), ValidationError);
  EXPECT_THROW(peak_factor(-1.0, 3.6, 30.0, 50.0), ValidationError);
}

TEST(PeakFactor, ContinuousAsShapeVanishes) {
  double prev = 0.0;
  for (double lambda : {1.0, 1e-2, 1e-4, 1e-8}) {
    const double g = peak_factor(0.0, lambda, 30.0, 50.0);
    EXPECT_GT(g, prev);
    prev = g;
  }
  EXPECT_NEAR(prev, 1.0, 1e-6);
}

TEST(PeakCdf, Endpoints) {
  EXPECT_EQ(peak_cdf(-1.0, 2.0, 30.0, 50.0), 0.0);
  EXPECT_NEAR(peak_cdf(0.0, 2.0, 30.0, 50.0), boost_cdf(50.0, 2.0, 30.0), 1e-13);
  EXPECT_NEAR(peak_cdf(49.0, 2.0, 30.0, 50.0), boost_cdf(50.0, 2.0, 30.0), 1e-13);
  EXPECT_NEAR(peak_cdf(1e6, 2.0, 30.0, 50.0), 1.0, 1e-15);
  EXPECT_EQ(peak_cdf(10.0, 0.0, 30.0, 50.0), 1.0);
}

TEST(AuxCpts, Invariants) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t A = 4;
    auto m = build_marker_network(ladder(A), 2, {}, 1);
    std::vector<double> heights(A, 0.0);
    for (double& h : heights)
      if (u(rng) < 0.5) h = 50.0 + 400.0 * u(rng);
    const double f = u(rng);
    const ContributorFractions fr{{f, 1.0 - f}, {}};
    const PeakParameters psi{5.0 + 50.0 * u(rng), 0.2 * u(rng), 10.0 + 30.0 * u(rng), 50.0};
    const std::vector<std::vector<double>> queries(A, std::vector<double>{0.0, 120.0});
    const auto b = build_aux_cpts(m, heights, psi, fr, queries);
    for (std::size_t a = 0; a < A; ++a) {
      const auto& t = b.alleles[a];
      EXPECT_EQ(t.observed, heights[a] > 0.0);
      double mx = 0.0;
      for (std::size_t r = 0; r < t.o.size(); ++r) {
        EXPECT_GE(t.o[r], 0.0);
        EXPECT_LE(t.o[r], 1.0);
        mx = std::max(mx, t.o[r]);
        // D = 1 - P(unobserved); Q at the threshold equals P(D = 0)
        EXPECT_NEAR(t.d[r], 1.0 - peak_factor(0.0, t.lambda[r], psi.eta, psi.threshold), 1e-14);
        EXPECT_NEAR(t.q[0][r], 1.0 - t.d[r], 1e-14);
        EXPECT_GE(t.q[1][r], t.q[0][r]);
        if (t.lambda[r] == 0.0) {
          EXPECT_EQ(t.d[r], 0.0);
          if (!t.observed) EXPECT_EQ(t.o[r], 0.0);
        }
        if (t.observed) {
          const double g = peak_factor(heights[a], t.lambda[r], psi.eta, psi.threshold);
          EXPECT_NEAR(t.o[r] * std::exp(t.log_scale), g, 1e-10 * g + 1e-300);
        }
      }
      if (t.observed) {
        EXPECT_EQ(mx, 1.0);
      } else {
        EXPECT_EQ(t.log_scale, 0.0);
      }
    }
  }
}

TEST(AuxCpts, ImpossiblePeakIsFlagged) {
  // one unknown with xi = 0 can always explain a peak, but no one can when rho * phi is zero everywhere
  auto m = build_marker_network(ladder(3), 0, {{2, 0, 0}}, 1);
  const std::vector<double> heights{0.0, 0.0, 200.0};
  const auto b = build_aux_cpts(m, heights, {10.0, 0.0, 20.0, 50.0}, {{}, {1.0}});
  EXPECT_FALSE(b.alleles[2].possible);
  EXPECT_TRUE(b.alleles[0].possible);
}

TEST(AuxCpts, RejectsSubThresholdHeight) {
  auto m = build_marker_network(ladder(2), 1, {}, 1);
  const std::vector<double> heights{10.0, 0.0};
  EXPECT_THROW(build_aux_cpts(m, heights, {10.0, 0.0, 20.0, 50.0}, {{1.0}, {}}), ValidationError);
}

TEST(OEvidence, ObservedScaleAndUnobserved) {
  AlleleCpts seen;
  seen.observed = true;
  seen.log_scale = -3.0;
  const auto [e1, s1] = o_evidence(seen);
  EXPECT_EQ(e1[0], 0.0);
  EXPECT_EQ(e1[1], 1.0);
  EXPECT_EQ(s1, -3.0);
  const auto [e0, s0] = o_evidence(AlleleCpts{});
  EXPECT_EQ(e0[0], 1.0);
  EXPECT_EQ(e0[1], 0.0);
  EXPECT_EQ(s0, 0.0);
}

TEST(SampleHeight, ZeroShapeAndMoments) {
  std::mt19937_64 rng(6);
  EXPECT_EQ(sample_height(0.0, 30.0, 50.0, rng), 0.0);
  const std::size_t n = 100000;
  double sum = 0.0;
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double h = sample_height(4.0, 25.0, 1e-9, rng);
    sum += h;
  }
  // mean 100, sd 50 per draw
  EXPECT_NEAR(sum / n, 100.0, 4.0 * 50.0 / std::sqrt(double(n)));
  for (std::size_t i = 0; i < n; ++i) {
    const double h = sample_height(1.0, 30.0, 50.0, rng);
    zeros += h == 0.0;
    if (h != 0.0) EXPECT_GE(h, 50.0);
  }
  const double p = boost_cdf(50.0, 1.0, 30.0);
  EXPECT_NEAR(double(zeros) / n, p, 4.0 * std::sqrt(p * (1 - p) / n));
}
