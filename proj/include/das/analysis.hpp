// SPDX-License-Identifier: Apache-2.0
// Agreement between two time series, e.g. an acquired channel against the
// simulator's ground truth or against another instrument.
#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "das/persistence.hpp"

namespace das::analysis {

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Point {
  double t_s;
  double value;
};

class Series {
 public:
  Series() = default;
  /// Throws AnalysisError unless times are strictly increasing and finite.
  Series(std::string unit, std::vector<Point> points);

  const std::string& unit() const noexcept { return unit_; }
  const std::vector<Point>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }

  /// Same times, every value shifted by `offset`.
  Series shifted(double offset) const;

 private:
  std::string unit_;
  std::vector<Point> points_;
};

struct AlignedPair {
  double t_s;
  double a;
  double b;
};

/// Pairs each sample of `a` inside b's time span with b linearly
/// interpolated at that time. The pairing follows a's grid, so
/// align(a, b) and align(b, a) generally differ.
std::vector<AlignedPair> align(const Series& a, const Series& b);

struct AgreementStats {
  double max_abs_diff = 0.0;
  double mean_abs_diff = 0.0;
  double rmse = 0.0;
  std::size_t n_points = 0;
};

AgreementStats stats_of(const std::vector<AlignedPair>& pairs);
AgreementStats compare(const Series& a, const Series& b);

/// Values of one channel from a CSV log, timed in seconds since the first row.
Series series_from_log(const LogData& log, int channel);

/// One channel of a simulator truth export ("t_s,seq,chN...").
Series series_from_truth(std::istream& in, int channel);

/// Loads either file kind, recognized by its header.
Series load_series(const std::filesystem::path& path, int channel);

std::string stats_json(const AgreementStats& stats, const std::string& unit);

/// time_s,a,b,diff rows for external plotting.
void write_plot_csv(std::ostream& out, const std::vector<AlignedPair>& pairs);

}  // namespace das::analysis
