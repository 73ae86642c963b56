// SPDX-License-Identifier: Apache-2.0
// Measurement algebra: ADC quantization, input clamp and volts to
// engineering-unit calibration maps.
//
// The ADC spans 0..5 V in 1023 steps, so one LSB is 5/1023 V (about 4.888 mV).
// The divisor is 1023, not the 1024 levels most converter datasheets use.
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "das/codec.hpp"

namespace das {

inline constexpr double kFullScaleVolts = 5.0;
inline constexpr double kZenerVolts = 5.1;

enum class QualityFlag { kOk, kUnderRange, kOverRange, kSaturated };

std::string_view to_string(QualityFlag flag) noexcept;
/// Throws std::invalid_argument for unknown text.
QualityFlag parse_quality_flag(std::string_view text);

class OutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// c * 5 / 1023. Throws OutOfRange for c > 1023.
double counts_to_volts(int counts);

/// round(clamp(v, 0, 5) * 1023 / 5), ties away from zero. Non-finite input
/// throws std::invalid_argument.
Counts volts_to_counts(double volts);

/// Overvoltage protection: clamp to [0, 5.1] V.
double zener_clamp(double volts);

double lsb_volts() noexcept;
double half_lsb_volts() noexcept;

struct MappedValue {
  double value;
  QualityFlag flag;
};

/// Affine calibration q(v) = q_lo + (v - v_lo) * (q_hi - q_lo) / (v_hi - v_lo).
/// Out-of-range inputs clamp to the nearest endpoint and are flagged.
class LinearMap {
 public:
  /// Throws std::invalid_argument unless v_lo < v_hi and all values are finite.
  LinearMap(double v_lo, double v_hi, double q_lo, double q_hi, std::string unit);

  static LinearMap temperature();  // 0..5 V -> 0..50 degC
  static LinearMap humidity();     // 1..5 V -> 10..90 %RH

  double v_lo() const noexcept { return v_lo_; }
  double v_hi() const noexcept { return v_hi_; }
  double q_lo() const noexcept { return q_lo_; }
  double q_hi() const noexcept { return q_hi_; }
  const std::string& unit() const noexcept { return unit_; }
  double slope() const noexcept { return (q_hi_ - q_lo_) / (v_hi_ - v_lo_); }

  MappedValue apply(double volts) const noexcept;

  /// Exact inverse on [min(q_lo,q_hi), max(q_lo,q_hi)]; throws OutOfRange outside.
  double invert(double quantity) const;

  /// Affine inverse without the range check, for forward-modelling
  /// out-of-range physical inputs.
  double extrapolate_volts(double quantity) const noexcept;

  double lsb_in_units() const noexcept;

  friend bool operator==(const LinearMap&, const LinearMap&) = default;

 private:
  double v_lo_;
  double v_hi_;
  double q_lo_;
  double q_hi_;
  std::string unit_;
};

inline MappedValue apply_map(const LinearMap& map, double volts) { return map.apply(volts); }
inline double invert_map(const LinearMap& map, double quantity) { return map.invert(quantity); }
inline double lsb_in_units(const LinearMap& map) { return map.lsb_in_units(); }

/// Converts a raw count through a map. A count at full scale is reported as
/// saturated unless the map already flags the voltage as out of range,
/// since the input may have been clipped by the reference or the clamp.
MappedValue convert_counts(const LinearMap& map, Counts counts);

}  // namespace das
