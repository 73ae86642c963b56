// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "das/conversion.hpp"
#include "oracles.hpp"

namespace das {
namespace {

TEST(Conversion, CountsToVoltsExamples) {
  EXPECT_EQ(counts_to_volts(0), 0.0);
  EXPECT_EQ(counts_to_volts(1023), 5.0);
  EXPECT_NEAR(counts_to_volts(512), 2.502444, 1e-6);
  EXPECT_NEAR(counts_to_volts(512), static_cast<double>(oracle::volts(512)), 1e-15);
  EXPECT_THROW(counts_to_volts(1024), OutOfRange);
  EXPECT_THROW(counts_to_volts(-1), OutOfRange);
}

TEST(Conversion, VoltsToCountsExamples) {
  EXPECT_EQ(volts_to_counts(2.5), 512);
  EXPECT_EQ(volts_to_counts(6.0), 1023);
  EXPECT_EQ(volts_to_counts(-0.1), 0);
  EXPECT_THROW(volts_to_counts(std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
}

TEST(Conversion, ZenerClampExamples) {
  EXPECT_EQ(zener_clamp(7.3), 5.1);
  EXPECT_EQ(zener_clamp(2.0), 2.0);
  EXPECT_EQ(zener_clamp(-1.0), 0.0);
}

TEST(Conversion, ZenerClampIsIdempotent) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> v(-20.0, 20.0);
  for (int i = 0; i < 10000; ++i) {
    const double x = v(rng);
    EXPECT_EQ(zener_clamp(zener_clamp(x)), zener_clamp(x));
  }
}

TEST(Conversion, ExhaustiveRoundTrip) {
  for (int c = 0; c <= kMaxCounts; ++c) EXPECT_EQ(volts_to_counts(counts_to_volts(c)), c);
}

TEST(Conversion, RoundingAgreesWithBruteForceScan) {
  // Dense grid, skipping points within 1e-9 V of a decision boundary where
  // binary rounding of the product can legitimately go either way.
  for (int i = 0; i <= 200000; ++i) {
    const double v = -0.5 + 6.0 * i / 200000.0;
    const long double x = std::clamp(static_cast<long double>(v), 0.0L, 5.0L) * 1023.0L / 5.0L;
    const long double frac = x - std::floor(x);
    if (std::fabs(frac - 0.5L) < 1e-9L) continue;
    ASSERT_EQ(volts_to_counts(v), oracle::nearest_code(v)) << v;
  }
  // Exact midpoints between codes round up.
  for (int c = 0; c < kMaxCounts; ++c) {
    const double mid = (2.0 * c + 1.0) * 2.5 / 1023.0;
    const long double x = static_cast<long double>(mid) * 1023.0L;
    if (x != 5.0L * c + 2.5L) continue;  // midpoint not representable
    EXPECT_EQ(volts_to_counts(mid), c + 1);
  }
}

TEST(Conversion, QuantizationErrorWithinHalfLsb) {
  EXPECT_NEAR(half_lsb_volts(), 0.002444, 1e-6);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> v(0.0, 5.0);
  for (int i = 0; i < 100000; ++i) {
    const double x = v(rng);
    EXPECT_LE(std::fabs(x - counts_to_volts(volts_to_counts(x))), half_lsb_volts() + 1e-15);
  }
}

TEST(Conversion, Monotonicity) {
  for (int c = 1; c <= kMaxCounts; ++c) EXPECT_LT(counts_to_volts(c - 1), counts_to_volts(c));
  for (const auto& map : {LinearMap::temperature(), LinearMap::humidity()}) {
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 10000; ++i) {
      const double v = map.v_lo() + (map.v_hi() - map.v_lo()) * i / 10000.0;
      const double q = map.apply(v).value;
      EXPECT_LT(prev, q);
      prev = q;
    }
  }
}

TEST(Conversion, ApplyMapExamples) {
  const auto t = LinearMap::temperature();
  const auto h = LinearMap::humidity();
  auto check = [](MappedValue m, double value, QualityFlag flag) {
    EXPECT_EQ(m.value, value);
    EXPECT_EQ(m.flag, flag);
  };
  check(t.apply(5.0), 50.0, QualityFlag::kOk);
  check(h.apply(1.0), 10.0, QualityFlag::kOk);
  check(h.apply(5.0), 90.0, QualityFlag::kOk);
  check(h.apply(3.0), 50.0, QualityFlag::kOk);
  check(h.apply(0.8), 10.0, QualityFlag::kUnderRange);
  check(h.apply(5.05), 90.0, QualityFlag::kOverRange);
}

TEST(Conversion, ApplyMatchesAffineOracle) {
  const auto t = LinearMap::temperature();
  const auto h = LinearMap::humidity();
  for (int c = 0; c <= kMaxCounts; ++c) {
    const double v = counts_to_volts(c);
    EXPECT_NEAR(t.apply(v).value, static_cast<double>(oracle::temperature_of(oracle::volts(c))), 1e-12);
    if (v >= 1.0) {
      EXPECT_NEAR(h.apply(v).value, static_cast<double>(oracle::humidity_of(oracle::volts(c))), 1e-12);
    }
  }
}

TEST(Conversion, InvertMapExamples) {
  EXPECT_NEAR(LinearMap::temperature().invert(25.0), 2.5, 1e-12);
  EXPECT_EQ(LinearMap::humidity().invert(90.0), 5.0);
  EXPECT_EQ(LinearMap::humidity().invert(10.0), 1.0);
  EXPECT_THROW(LinearMap::humidity().invert(95.0), OutOfRange);
}

TEST(Conversion, ApplyAndInvertAreInverses) {
  std::mt19937_64 rng(9);
  const LinearMap custom(0.5, 4.5, 100.0, -40.0, "kPa");
  for (const auto& map : {LinearMap::temperature(), LinearMap::humidity(), custom}) {
    std::uniform_real_distribution<double> v(map.v_lo(), map.v_hi());
    for (int i = 0; i < 10000; ++i) {
      const double x = v(rng);
      EXPECT_NEAR(map.invert(map.apply(x).value), x, 1e-9);
      const double q = map.apply(x).value;
      EXPECT_NEAR(map.apply(map.invert(q)).value, q, 1e-9);
    }
  }
}

TEST(Conversion, LsbValues) {
  EXPECT_NEAR(lsb_volts(), 0.004888, 1e-6);
  EXPECT_NEAR(lsb_in_units(LinearMap::temperature()), 0.04888, 1e-5);
  EXPECT_NEAR(lsb_in_units(LinearMap::humidity()), 0.09775, 1e-5);
}

TEST(Conversion, MapInvariantsAreEnforced) {
  EXPECT_THROW(LinearMap(2.0, 2.0, 0.0, 1.0, "x"), std::invalid_argument);
  EXPECT_THROW(LinearMap(3.0, 2.0, 0.0, 1.0, "x"), std::invalid_argument);
  EXPECT_THROW(LinearMap(0.0, 1.0, 5.0, 5.0, "x"), std::invalid_argument);
  EXPECT_THROW(LinearMap(0.0, std::numeric_limits<double>::infinity(), 0.0, 1.0, "x"),
               std::invalid_argument);
  EXPECT_THROW(LinearMap(0.0, 1.0, 0.0, 1.0, "a,b"), std::invalid_argument);
  EXPECT_NO_THROW(LinearMap(0.0, 1.0, 0.0, 1.0, ""));
}

TEST(Conversion, FullScaleCountIsSaturated) {
  const auto t = LinearMap::temperature();
  EXPECT_EQ(convert_counts(t, 1023).flag, QualityFlag::kSaturated);
  EXPECT_EQ(convert_counts(t, 1023).value, 50.0);
  EXPECT_EQ(convert_counts(t, 1022).flag, QualityFlag::kOk);
  EXPECT_EQ(convert_counts(LinearMap::humidity(), 100).flag, QualityFlag::kUnderRange);
  const LinearMap narrow(0.0, 4.0, 0.0, 40.0, "u");
  EXPECT_EQ(convert_counts(narrow, 1023).flag, QualityFlag::kOverRange);
}

TEST(Conversion, QualityFlagText) {
  for (auto f : {QualityFlag::kOk, QualityFlag::kUnderRange, QualityFlag::kOverRange,
                 QualityFlag::kSaturated}) {
    EXPECT_EQ(parse_quality_flag(to_string(f)), f);
  }
  EXPECT_THROW(parse_quality_flag("bogus"), std::invalid_argument);
}

}  // namespace
}  // namespace das
