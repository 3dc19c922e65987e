#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "thinlimit/bessel.hpp"
#include "thinlimit/errors.hpp"

using namespace thinlimit;

TEST(Bessel, ValuesAtOrigin) {
  EXPECT_EQ(bessel_j(0, 0.0), 1.0);
  EXPECT_EQ(bessel_j(1, 0.0), 0.0);
  EXPECT_EQ(bessel_j(7, 0.0), 0.0);
  EXPECT_NEAR(bessel_j(0, 1e-300), 1.0, 1e-15);
}

TEST(Bessel, FirstZeroOfJ0) {
  const double x = oracle::bessel_zero(0, 1);
  EXPECT_NEAR(x, 2.404825557695773, 1e-14);
  EXPECT_LT(std::abs(bessel_jy(0, x).j), 1e-12);
  EXPECT_LT(std::abs(bessel_j(0, x)), 1e-12);
}

TEST(Bessel, ZerosMatchOracle) {
  EXPECT_NEAR(bessel_j_zero(0, 1), 2.404825557695773, 1e-12 * 2.404825557695773);
  EXPECT_NEAR(bessel_j_zero(1, 1), 3.831705970207512, 1e-12 * 3.831705970207512);
  for (int n = 0; n <= 10; ++n) {
    double prev = 0.0;
    for (int k = 1; k <= 12; ++k) {
      const double z = bessel_j_zero(n, k);
      EXPECT_NEAR(z, oracle::bessel_zero(n, k), 1e-12 * z) << n << "," << k;
      EXPECT_GT(z, prev);
      prev = z;
    }
  }
}

TEST(Bessel, ZerosInterlace) {
  for (int n = 0; n < 6; ++n) {
    for (int k = 1; k < 8; ++k) {
      EXPECT_LT(bessel_j_zero(n, k), bessel_j_zero(n + 1, k));
      EXPECT_LT(bessel_j_zero(n + 1, k), bessel_j_zero(n, k + 1));
    }
  }
}

TEST(Bessel, WronskianOnMillionRandomPoints) {
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<int> order(0, 10);
  std::uniform_real_distribution<double> logx(std::log(1e-3), std::log(200.0));
  double worst = 0.0;
  for (int i = 0; i < 1'000'000; ++i) {
    const int n = order(rng);
    const double x = std::exp(logx(rng));
    const auto b = bessel_jy(n, x);
    const double expected = 2.0 / (std::numbers::pi * x);
    worst = std::max(worst, std::abs(b.j * b.yp - b.y * b.jp - expected) / expected);
  }
  EXPECT_LE(worst, 1e-9);
}

TEST(Bessel, RecurrenceConsistency) {
  // Measured against the size of the summands: near a zero of J_n both sides
  // are small by cancellation and a pointwise ratio is meaningless.
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> order(1, 10);
  std::uniform_real_distribution<double> logx(std::log(1e-3), std::log(200.0));
  for (int i = 0; i < 100'000; ++i) {
    const int n = order(rng);
    const double x = std::exp(logx(rng));
    const double a = bessel_j(n - 1, x), b = bessel_j(n + 1, x), c = bessel_j(n, x);
    const double scale = std::abs(a) + std::abs(b);
    ASSERT_LE(std::abs(a + b - 2.0 * n / x * c), 1e-10 * scale) << n << " " << x;
  }
}

TEST(Bessel, DerivativeMatchesFiniteDifference) {
  const double d = 1e-5;
  for (int n = 0; n <= 10; ++n) {
    for (double x = 0.5; x <= 50.0; x += 0.37) {
      const auto b = bessel_jy(n, x);
      EXPECT_LE(std::abs(b.jp - (bessel_j(n, x + d) - bessel_j(n, x - d)) / (2 * d)), 1e-6);
      const double yfd = (bessel_jy(n, x + d).y - bessel_jy(n, x - d).y) / (2 * d);
      EXPECT_LE(std::abs(b.yp - yfd), 1e-6 * std::max(1.0, std::abs(b.yp)));
    }
  }
}

TEST(Bessel, AgreesWithReferenceLibrary) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> order(0, 10);
  std::uniform_real_distribution<double> logx(std::log(1e-3), std::log(200.0));
  for (int i = 0; i < 20'000; ++i) {
    const int n = order(rng);
    const double x = std::exp(logx(rng));
    const auto b = bessel_jy(n, x);
    // Absolute scale: J is bounded by 1, Y blows up like x^{-n} near 0.
    const double sj = std::max(1e-300, std::abs(oracle::J(n, x))) + 1e-16;
    EXPECT_LE(std::abs(b.j - oracle::J(n, x)), 1e-12 + 1e-10 * sj) << n << " " << x;
    EXPECT_LE(std::abs(b.y - oracle::Y(n, x)), 1e-10 * std::max(1.0, std::abs(oracle::Y(n, x)))) << n << " " << x;
    EXPECT_LE(std::abs(b.jp - oracle::Jp(n, x)), 1e-11 + 1e-10 * std::abs(oracle::Jp(n, x))) << n << " " << x;
    EXPECT_LE(std::abs(b.yp - oracle::Yp(n, x)), 1e-10 * std::max(1.0, std::abs(oracle::Yp(n, x)))) << n << " " << x;
  }
}

TEST(Bessel, SeriesOracleAgreesAtSmallArgument) {
  for (int n : {0, 1, 4}) {
    for (double x : {0.01, 0.5, 3.0, 9.0}) {
      EXPECT_NEAR(bessel_j(n, x), static_cast<double>(oracle::series_j(n, x)), 1e-13);
    }
  }
}

TEST(Bessel, DomainErrors) {
  EXPECT_THROW(bessel_jy(0, 0.0), DomainError);
  EXPECT_THROW(bessel_jy(1, -1.0), DomainError);
  EXPECT_THROW(bessel_jy(-1, 1.0), DomainError);
  EXPECT_THROW(bessel_j(0, -0.5), DomainError);
  EXPECT_THROW(bessel_j_zero(0, 0), DomainError);
}
