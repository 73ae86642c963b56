// SPDX-License-Identifier: Apache-2.0
#include "das/conversion.hpp"

#include <algorithm>
#include <cmath>

namespace das {

std::string_view to_string(QualityFlag flag) noexcept {
  switch (flag) {
    case QualityFlag::kOk: return "ok";
    case QualityFlag::kUnderRange: return "under-range";
    case QualityFlag::kOverRange: return "over-range";
    case QualityFlag::kSaturated: return "saturated";
  }
  return "ok";
}

QualityFlag parse_quality_flag(std::string_view text) {
  if (text == "ok") return QualityFlag::kOk;
  if (text == "under-range") return QualityFlag::kUnderRange;
  if (text == "over-range") return QualityFlag::kOverRange;
  if (text == "saturated") return QualityFlag::kSaturated;
  throw std::invalid_argument("unknown quality flag '" + std::string(text) + "'");
}

double counts_to_volts(int counts) {
  if (counts < 0 || counts > kMaxCounts) {
    throw OutOfRange("ADC count " + std::to_string(counts) + " outside 0..1023");
  }
  return counts * kFullScaleVolts / kMaxCounts;
}

Counts volts_to_counts(double volts) {
  if (!std::isfinite(volts)) throw std::invalid_argument("voltage is not finite");
  const double clamped = std::clamp(volts, 0.0, kFullScaleVolts);
  // std::round rounds halfway cases away from zero.
  return static_cast<Counts>(std::round(clamped * kMaxCounts / kFullScaleVolts));
}

double zener_clamp(double volts) {
  if (!std::isfinite(volts)) throw std::invalid_argument("voltage is not finite");
  return std::min(std::max(volts, 0.0), kZenerVolts);
}

double lsb_volts() noexcept { return kFullScaleVolts / kMaxCounts; }
double half_lsb_volts() noexcept { return 0.5 * lsb_volts(); }

LinearMap::LinearMap(double v_lo, double v_hi, double q_lo, double q_hi, std::string unit)
    : v_lo_(v_lo), v_hi_(v_hi), q_lo_(q_lo), q_hi_(q_hi), unit_(std::move(unit)) {
  if (!std::isfinite(v_lo) || !std::isfinite(v_hi) || !std::isfinite(q_lo) ||
      !std::isfinite(q_hi)) {
    throw std::invalid_argument("map endpoints must be finite");
  }
  if (!(v_lo < v_hi)) throw std::invalid_argument("map requires v_lo < v_hi");
  if (q_lo == q_hi) throw std::invalid_argument("map requires q_lo != q_hi");
  // Units end up in CSV column names.
  for (unsigned char c : unit_) {
    if (c < 0x20 || c == ',' || c == '"' || c == '[' || c == ']' || c == 0x7F) {
      throw std::invalid_argument("unit label contains a reserved character");
    }
  }
}

LinearMap LinearMap::temperature() { return {0.0, 5.0, 0.0, 50.0, "degC"}; }
LinearMap LinearMap::humidity() { return {1.0, 5.0, 10.0, 90.0, "%RH"}; }

MappedValue LinearMap::apply(double volts) const noexcept {
  if (volts < v_lo_) return {q_lo_, QualityFlag::kUnderRange};
  if (volts > v_hi_) return {q_hi_, QualityFlag::kOverRange};
  if (volts == v_hi_) return {q_hi_, QualityFlag::kOk};
  return {q_lo_ + (volts - v_lo_) * (q_hi_ - q_lo_) / (v_hi_ - v_lo_), QualityFlag::kOk};
}

double LinearMap::invert(double quantity) const {
  const double lo = std::min(q_lo_, q_hi_);
  const double hi = std::max(q_lo_, q_hi_);
  if (!(quantity >= lo && quantity <= hi)) {
    throw OutOfRange("quantity outside calibrated range of map (" + unit_ + ")");
  }
  if (quantity == q_hi_) return v_hi_;
  return extrapolate_volts(quantity);
}

double LinearMap::extrapolate_volts(double quantity) const noexcept {
  return v_lo_ + (quantity - q_lo_) * (v_hi_ - v_lo_) / (q_hi_ - q_lo_);
}

double LinearMap::lsb_in_units() const noexcept { return std::abs(slope()) * lsb_volts(); }

MappedValue convert_counts(const LinearMap& map, Counts counts) {
  auto mapped = map.apply(counts_to_volts(counts));
  if (mapped.flag == QualityFlag::kOk && counts == kMaxCounts) {
    mapped.flag = QualityFlag::kSaturated;
  }
  return mapped;
}

}  // namespace das
