#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fock_oracle.hpp"
#include "kerrcat/conditioning.hpp"
#include "kerrcat/kerr.hpp"
#include "kerrcat/quadrature.hpp"

using namespace kerrcat;

namespace {

double total_probability(const TwoModeProductSuperposition& tm, double alpha) {
  const double lim = alpha + 12.0;
  return quadrature::integrate_panels([&](double x) { return x_outcome_density(tm, x); }, -lim, lim, 1.0, 1e-10).value;
}

}  // namespace

TEST(BeamSplitter, CoherentAndVacuum) {
  const auto tm = beamsplit_with_vacuum(CoherentSuperposition::coherent(Complex{2, -1}));
  ASSERT_EQ(tm.size(), 1u);
  EXPECT_NEAR(std::abs(tm.components()[0].amp - Complex{2, -1} / std::numbers::sqrt2), 0.0, 1e-15);
  EXPECT_NEAR(squared_norm(tm), 1.0, 1e-15);

  const auto vac = beamsplit_with_vacuum(CoherentSuperposition::coherent(0.0));
  EXPECT_EQ(vac.components()[0].amp, Complex{});
}

TEST(BeamSplitter, KerrOutputKeepsNormAndAmplitudes) {
  const auto d = kerr_decompose(20.0, 20);
  const auto tm = beamsplit_with_vacuum(d.state);
  ASSERT_EQ(tm.size(), 20u);
  for (int n = 1; n <= 20; ++n) {
    const Complex want = -20.0 * std::polar(1.0, 2.0 * std::numbers::pi * n / 20) / std::numbers::sqrt2;
    EXPECT_NEAR(std::abs(tm.components()[n - 1].amp - want), 0.0, 1e-13);
  }
  EXPECT_NEAR(squared_norm(tm), 1.0, 1e-10);
  EXPECT_NEAR(squared_norm(tm), squared_norm(d.state), 1e-12);
}

TEST(BeamSplitter, RequiresNormalizedInput) {
  EXPECT_THROW(beamsplit_with_vacuum(CoherentSuperposition({{2.0, 1.0}})), std::invalid_argument);
}

TEST(OutcomeDensity, VacuumAndTwoHumps) {
  const auto vac = beamsplit_with_vacuum(CoherentSuperposition::coherent(0.0));
  for (double x : {-1.0, 0.0, 0.8}) {
    EXPECT_NEAR(x_outcome_density(vac, x), std::exp(-x * x) / std::sqrt(std::numbers::pi), 1e-15);
  }
  // Yurke-Stoler input: humps at X = -+alpha with cross term ~ e^{-alpha^2/2}.
  const double a = 3.0;
  const auto tm = beamsplit_with_vacuum(kerr_decompose(a, 2).state);
  const double g = 1.0 / std::sqrt(std::numbers::pi);
  for (double x : {-3.0, -1.0, 0.0, 2.0, 3.5}) {
    const double closed = 0.5 * g * (std::exp(-(x - a) * (x - a)) + std::exp(-(x + a) * (x + a)));
    EXPECT_NEAR(x_outcome_density(tm, x), closed, 1e-3 * g);
  }
}

TEST(OutcomeDensity, MatchesFockPipeline) {
  for (int big_n : {2, 3, 4, 8}) {
    const double a = 3.0;
    const int cutoff = 9 + 30 + 50;
    const auto tm = beamsplit_with_vacuum(kerr_decompose(a, big_n).state);
    const auto psi = fock::kerr_pi_over(a, big_n, cutoff);
    for (double x : {-2.5, -0.3, 0.0, 1.7}) {
      EXPECT_NEAR(x_outcome_density(tm, x), fock::norm2(fock::split_and_project(psi, x)), 1e-10) << big_n;
    }
  }
}

TEST(OutcomeDensity, TotalProbabilityIsOne) {
  for (double a : {5.0, 20.0}) {
    for (int big_n : {2, 20, 60}) {
      EXPECT_NEAR(total_probability(beamsplit_with_vacuum(kerr_decompose(a, big_n).state), a), 1.0, 1e-6);
    }
  }
}

TEST(OutcomeDensity, LocalMaximumAtOriginForFlagship) {
  const auto tm = beamsplit_with_vacuum(kerr_decompose(20.0, 20).state);
  const double d0 = x_outcome_density(tm, 0.0);
  EXPECT_GT(d0, 0.0);
  EXPECT_GT(d0, x_outcome_density(tm, 0.5));
  EXPECT_GT(d0, x_outcome_density(tm, -0.5));
}

TEST(ConditionOnX, YurkeStolerAtOriginIsBalanced) {
  const auto tm = beamsplit_with_vacuum(kerr_decompose(4.0, 2).state);
  const auto s = condition_on_x(tm, {0.0});
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(std::abs(s.components()[0].coeff), std::abs(s.components()[1].coeff), 1e-14);
  EXPECT_NEAR(squared_norm(s), 1.0, 1e-12);
}

TEST(ConditionOnX, FlagshipDominantPair) {
  const auto tm = beamsplit_with_vacuum(kerr_decompose(20.0, 20).state);
  const auto s = condition_on_x(tm, {0.0});
  const auto comps = s.components();
  const double c5 = std::abs(comps[4].coeff), c15 = std::abs(comps[14].coeff);
  EXPECT_NEAR(c5, c15, 1e-12);
  EXPECT_NEAR(std::abs(comps[4].amp - Complex{0, -20.0 / std::numbers::sqrt2}), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(comps[14].amp - Complex{0, 20.0 / std::numbers::sqrt2}), 0.0, 1e-12);
  // Equal |C_n|, so the ratio is the Gaussian factor exp(-(sqrt2 Re b_n)^2 / 2).
  for (int n = 1; n <= 20; ++n) {
    if (n == 5 || n == 15) continue;
    const double re_b = -(20.0 / std::numbers::sqrt2) * std::cos(2.0 * std::numbers::pi * n / 20);
    const double want = std::exp(-re_b * re_b);
    EXPECT_NEAR(std::abs(comps[n - 1].coeff) / c5, want, 1e-10 * want) << n;
    EXPECT_LT(std::abs(comps[n - 1].coeff) / c5, 1e-8) << n;
  }
}

TEST(ConditionOnX, OffCentreOutcomeShiftsWeight) {
  const auto tm = beamsplit_with_vacuum(kerr_decompose(20.0, 20).state);
  const auto s = condition_on_x(tm, {25.0});
  EXPECT_NEAR(squared_norm(s), 1.0, 1e-10);
  std::size_t best = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (std::abs(s.components()[i].coeff) > std::abs(s.components()[best].coeff)) best = i;
  }
  const double centre = std::numbers::sqrt2 * s.components()[best].amp.real();
  for (const auto& c : s.components()) {
    EXPECT_LE(std::abs(centre - 25.0), std::abs(std::numbers::sqrt2 * c.amp.real() - 25.0) + 1e-12);
  }
}

TEST(ConditionOnX, ProjectiveAndRepeatable) {
  const auto tm = beamsplit_with_vacuum(kerr_decompose(6.0, 8).state);
  const auto once = condition_on_x(tm, {0.7});
  const auto again = condition_on_x(tm, {0.7});
  EXPECT_NEAR(std::abs(inner_product(once, again)), 1.0, 1e-14);
  // Each coefficient is the input coefficient times <X|b_n>, up to one common factor.
  const auto in = tm.components();
  const auto out = once.components();
  const Complex ref = out[0].coeff / (in[0].coeff * x_amplitude(0.7, in[0].amp));
  for (std::size_t i = 1; i < out.size(); ++i) {
    const Complex r = out[i].coeff / (in[i].coeff * x_amplitude(0.7, in[i].amp));
    EXPECT_NEAR(std::abs(r - ref), 0.0, 1e-10 * std::abs(ref));
  }
}

TEST(ConditionOnX, DegenerateOutcomeThrows) {
  const auto tm = beamsplit_with_vacuum(kerr_decompose(5.0, 4).state);
  EXPECT_THROW(condition_on_x(tm, {60.0}), DegenerateStateError);
  EXPECT_THROW(condition_on_x(tm, {NAN}), std::invalid_argument);
  EXPECT_THROW(condition_on_x(TwoModeProductSuperposition({{2.0, 0.0}}, false), {0.0}), std::invalid_argument);
}

TEST(ConditionOnX, StateMatchesFockPipeline) {
  const double a = 4.0;
  const int cutoff = 16 + 40 + 50;
  for (int big_n : {2, 4, 5, 8}) {
    const auto tm = beamsplit_with_vacuum(kerr_decompose(a, big_n).state);
    for (double x : {-1.2, 0.0, 0.9}) {
      const auto s = condition_on_x(tm, {x});
      fock::Vec oracle = fock::split_and_project(fock::kerr_pi_over(a, big_n, cutoff), x);
      const double d = fock::norm2(oracle);
      for (auto& v : oracle) v /= std::sqrt(d);
      fock::Vec mine(cutoff + 1);
      for (const auto& c : s.components()) {
        const auto v = fock::coherent(c.amp, cutoff);
        for (int n = 0; n <= cutoff; ++n) mine[n] += c.coeff * v[n];
      }
      EXPECT_NEAR(std::abs(fock::inner(oracle, mine)), 1.0, 1e-10) << big_n << " " << x;
    }
  }
}

TEST(HomodyneKernel, AgreesWithGeneralPath) {
  for (int big_n : {2, 7, 20, 60}) {
    const auto tm = beamsplit_with_vacuum(kerr_decompose(20.0, big_n).state);
    const HomodyneKernel k(tm);
    for (double x : {-13.0, -2.2, 0.0, 0.4, 9.0}) {
      const double a = k.density(x), b = x_outcome_density(tm, x);
      EXPECT_NEAR(a, b, 1e-10 * std::max(b, 1e-300) + 1e-300) << big_n << " " << x;
      const auto s1 = k.conditioned(x), s2 = condition_on_x(tm, {x});
      EXPECT_NEAR(std::abs(inner_product(s1, s2)), 1.0, 1e-10);
    }
  }
}

TEST(HomodyneKernel, RotationLeavesGramUnchanged) {
  const auto d = kerr_decompose(6.0, 8);
  const HomodyneKernel k(beamsplit_with_vacuum(d.state));
  const double angle = 0.37;
  std::vector<CoherentComponent> rot;
  for (const auto& c : d.state.components()) rot.push_back({c.coeff, c.amp * std::polar(1.0, angle)});
  const auto tm_rot = beamsplit_with_vacuum(CoherentSuperposition(rot, true));
  const auto c = k.conditioned_coefficients(1.1, angle);
  const auto amps = k.rotated_amplitudes(angle);
  std::vector<CoherentComponent> mine;
  for (std::size_t i = 0; i < c.size(); ++i) mine.push_back({c[i], amps[i]});
  const auto ref = condition_on_x(tm_rot, {1.1});
  EXPECT_NEAR(std::abs(inner_product(CoherentSuperposition(mine, true), ref)), 1.0, 1e-12);
}
