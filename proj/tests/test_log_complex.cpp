#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kerrcat/log_complex.hpp"

using kerrcat::Complex;
using kerrcat::LogComplex;
using kerrcat::LogSum;
using kerrcat::wrap_phase;

TEST(WrapPhase, MapsIntoHalfOpenInterval) {
  const double pi = std::numbers::pi;
  EXPECT_DOUBLE_EQ(wrap_phase(0.0), 0.0);
  EXPECT_DOUBLE_EQ(wrap_phase(pi), pi);
  EXPECT_DOUBLE_EQ(wrap_phase(-pi), pi);
  EXPECT_NEAR(wrap_phase(3.0 * pi), pi, 1e-15);
  EXPECT_NEAR(wrap_phase(2.5 * pi), 0.5 * pi, 1e-15);
  EXPECT_NEAR(wrap_phase(-0.5 * pi - 8.0 * pi), -0.5 * pi, 1e-14);
}

TEST(LogComplex, ZeroIsNegativeInfinity) {
  const LogComplex z = LogComplex::from(Complex{});
  EXPECT_TRUE(z.is_zero());
  EXPECT_EQ(z.value(), Complex{});
  EXPECT_TRUE((z * LogComplex::from(Complex{3, 4})).is_zero());
  EXPECT_TRUE(z.conj().is_zero());
}

TEST(LogComplex, RoundTripsOrdinaryValues) {
  for (Complex z : {Complex{1, 0}, Complex{-2, 0}, Complex{0, -3}, Complex{1e-200, 1e-200}, Complex{-7.5, 2.25}}) {
    const Complex back = LogComplex::from(z).value();
    // exp(log|z|) carries a relative error of about |log|z|| * eps
    EXPECT_NEAR(std::abs(back - z), 0.0, 1e-13 * std::abs(z));
  }
}

TEST(LogComplex, ProductHoldsMagnitudesFarBelowUnderflow) {
  const LogComplex a = LogComplex::from_log(-900.0, 2.0);
  const LogComplex p = a * a;
  EXPECT_DOUBLE_EQ(p.log_magnitude, -1800.0);
  EXPECT_NEAR(p.phase, wrap_phase(4.0), 1e-15);
  EXPECT_EQ(p.value(), Complex{});  // only the final conversion underflows
}

TEST(LogComplex, ConjugateNegatesPhase) {
  const LogComplex a = LogComplex::from(Complex{1, 2});
  EXPECT_NEAR(std::abs(a.conj().value() - Complex{1, -2}), 0.0, 1e-15);
}

TEST(LogSum, MatchesPlainSum) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3, 3);
  LogSum acc;
  Complex plain{};
  for (int i = 0; i < 200; ++i) {
    const Complex z{u(rng), u(rng)};
    acc.add(LogComplex::from(z));
    plain += z;
  }
  EXPECT_NEAR(std::abs(acc.result().value() - plain), 0.0, 1e-12);
}

TEST(LogSum, ScaleInvariantAtTinyMagnitudes) {
  LogSum tiny;
  LogSum unit;
  for (Complex z : {Complex{1, 1}, Complex{-0.25, 2}, Complex{0.5, -0.75}}) {
    const LogComplex l = LogComplex::from(z);
    unit.add(l);
    tiny.add(LogComplex::from_log(l.log_magnitude - 1500.0, l.phase));
  }
  EXPECT_NEAR(tiny.result().log_magnitude + 1500.0, unit.result().log_magnitude, 1e-12);
  EXPECT_NEAR(tiny.result().phase, unit.result().phase, 1e-12);
}

TEST(LogSum, ExactCancellationGivesZero) {
  LogSum acc;
  acc.add(LogComplex::from(Complex{2.0, 0.0}));
  acc.add(LogComplex::from(Complex{-2.0, 0.0}));
  EXPECT_LT(std::abs(acc.result().value()), 1e-15);
  EXPECT_TRUE(LogSum{}.result().is_zero());
}
