// SPDX-License-Identifier: Apache-2.0
#include "das/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

namespace das::analysis {

Series::Series(std::string unit, std::vector<Point> points)
    : unit_(std::move(unit)), points_(std::move(points)) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i].t_s) || !std::isfinite(points_[i].value)) {
      throw AnalysisError("series contains a non-finite point");
    }
    if (i > 0 && !(points_[i - 1].t_s < points_[i].t_s)) {
      throw AnalysisError("series times must be strictly increasing");
    }
  }
}

Series Series::shifted(double offset) const {
  auto points = points_;
  for (auto& p : points) p.value += offset;
  return Series(unit_, std::move(points));
}

std::vector<AlignedPair> align(const Series& a, const Series& b) {
  const auto& bp = b.points();
  std::vector<AlignedPair> pairs;
  if (!bp.empty()) {
    const double lo = bp.front().t_s;
    const double hi = bp.back().t_s;
    std::size_t j = 0;
    for (const auto& p : a.points()) {
      if (p.t_s < lo || p.t_s > hi) continue;
      while (j + 1 < bp.size() && bp[j + 1].t_s <= p.t_s) ++j;
      double value = bp[j].value;
      if (bp[j].t_s != p.t_s) {
        const auto& next = bp[j + 1];
        const double frac = (p.t_s - bp[j].t_s) / (next.t_s - bp[j].t_s);
        value = bp[j].value + frac * (next.value - bp[j].value);
      }
      pairs.push_back({p.t_s, p.value, value});
    }
  }
  if (pairs.empty()) throw AnalysisError("series do not overlap in time");
  return pairs;
}

AgreementStats stats_of(const std::vector<AlignedPair>& pairs) {
  AgreementStats stats;
  double sum_abs = 0.0;
  double sum_sq = 0.0;
  for (const auto& p : pairs) {
    const double d = std::abs(p.a - p.b);
    stats.max_abs_diff = std::max(stats.max_abs_diff, d);
    sum_abs += d;
    sum_sq += d * d;
  }
  stats.n_points = pairs.size();
  if (!pairs.empty()) {
    const auto n = static_cast<double>(pairs.size());
    stats.mean_abs_diff = sum_abs / n;
    stats.rmse = std::sqrt(sum_sq / n);
  }
  return stats;
}

AgreementStats compare(const Series& a, const Series& b) { return stats_of(align(a, b)); }

Series series_from_log(const LogData& log, int channel) {
  if (channel < 0 || channel >= kChannelCount) throw AnalysisError("channel outside 0..7");
  const auto ch = static_cast<std::size_t>(channel);
  const auto in_schema = std::any_of(log.schema.channels.begin(), log.schema.channels.end(),
                                     [&](const LogChannel& c) { return c.channel == channel; });
  if (!in_schema) throw AnalysisError("channel " + std::to_string(channel) + " is not in the log");

  std::string unit;
  std::vector<Point> points;
  if (log.records.empty()) return Series(unit, {});
  const auto origin = log.records.front().host_time;
  for (const auto& r : log.records) {
    if (!r.enabled.test(ch)) continue;
    const double t = std::chrono::duration<double>(r.host_time - origin).count();
    if (const auto& v = r.values[ch]) {
      unit = v->unit;
      points.push_back({t, v->value});
    } else {
      unit = "V";
      points.push_back({t, r.volts[ch]});
    }
  }
  return Series(unit, std::move(points));
}

Series series_from_truth(std::istream& in, int channel) {
  std::string line;
  if (!std::getline(in, line) || !line.starts_with("t_s,seq")) {
    throw AnalysisError("not a truth file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::string wanted = "ch" + std::to_string(channel);
  std::size_t column = 0;
  std::size_t index = 0;
  for (std::size_t start = 0; start <= line.size(); ++index) {
    auto comma = line.find(',', start);
    if (comma == std::string::npos) comma = line.size();
    if (line.compare(start, comma - start, wanted) == 0) column = index;
    start = comma + 1;
  }
  if (column == 0) throw AnalysisError("truth file has no column " + wanted);

  std::vector<Point> points;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double t = 0.0;
    double v = 0.0;
    std::size_t start = 0;
    bool ok = true;
    for (std::size_t i = 0; i <= column && ok; ++i) {
      auto comma = line.find(',', start);
      if (comma == std::string::npos) comma = line.size();
      if (i == 0 || i == column) {
        double& target = i == 0 ? t : v;
        auto [ptr, ec] = std::from_chars(line.data() + start, line.data() + comma, target);
        ok = ec == std::errc{} && ptr == line.data() + comma;
      }
      if (comma == line.size() && i < column) ok = false;
      start = comma + 1;
    }
    if (!ok) throw AnalysisError("malformed truth row at line " + std::to_string(line_no));
    points.push_back({t, v});
  }
  return Series("", std::move(points));
}

Series load_series(const std::filesystem::path& path, int channel) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AnalysisError("cannot open " + path.string());
  std::string first;
  std::getline(in, first);
  in.clear();
  in.seekg(0);
  if (first.starts_with("t_s,")) return series_from_truth(in, channel);
  try {
    return series_from_log(read_log(in), channel);
  } catch (const LogError& e) {
    throw AnalysisError(path.string() + ": " + e.what());
  }
}

std::string stats_json(const AgreementStats& stats, const std::string& unit) {
  nlohmann::json j{{"max_abs_diff", stats.max_abs_diff},
                   {"mean_abs_diff", stats.mean_abs_diff},
                   {"rmse", stats.rmse},
                   {"n_points", stats.n_points},
                   {"unit", unit}};
  return j.dump();
}

void write_plot_csv(std::ostream& out, const std::vector<AlignedPair>& pairs) {
  out << "time_s,a,b,diff\n";
  char buf[128];
  for (const auto& p : pairs) {
    std::snprintf(buf, sizeof buf, "%.3f,%.9g,%.9g,%.9g\n", p.t_s, p.a, p.b, p.a - p.b);
    out << buf;
  }
}

}  // namespace das::analysis
