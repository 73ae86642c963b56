// SPDX-License-Identifier: Apache-2.0
#include "das/persistence.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <istream>
#include <ostream>

namespace das {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

template <class T>
bool parse_number(std::string_view text, T& value) {
  if (text.empty()) return false;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc{} && ptr == end;
}

bool parse_fixed_int(std::string_view text, std::size_t pos, std::size_t len, int& value) {
  value = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (text[i] < '0' || text[i] > '9') return false;
    value = value * 10 + (text[i] - '0');
  }
  return true;
}

void append_fixed(std::string& out, double value, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, value);
  out += buf;
}

// Header column "chN_<suffix>" -> N, or -1.
int column_channel(std::string_view column, std::string_view suffix) {
  if (!column.starts_with("ch") || column.size() < 3 + suffix.size()) return -1;
  const char digit = column[2];
  if (digit < '0' || digit > '7' || column.substr(3, suffix.size()) != suffix) return -1;
  return digit - '0';
}

LogSchema parse_header(std::string_view line) {
  const auto fields = split_fields(line);
  if (fields.size() < 2 || fields[0] != "timestamp" || fields[1] != "seq" ||
      (fields.size() - 2) % 4 != 0) {
    throw LogError(1, "unrecognized log header");
  }
  LogSchema schema;
  int previous = -1;
  for (std::size_t i = 2; i < fields.size(); i += 4) {
    const int ch = column_channel(fields[i], "_counts");
    if (ch < 0 || fields[i].size() != 3 + std::string_view("_counts").size()) {
      throw LogError(1, "unknown header column '" + std::string(fields[i]) + "'");
    }
    if (ch <= previous) throw LogError(1, "channel columns out of order");
    previous = ch;
    const std::string prefix = "ch" + std::to_string(ch);
    const auto value_col = fields[i + 2];
    if (fields[i + 1] != prefix + "_volts" || fields[i + 3] != prefix + "_flag" ||
        !value_col.starts_with(prefix + "_value[") || !value_col.ends_with("]")) {
      throw LogError(1, "malformed column group for channel " + std::to_string(ch));
    }
    const auto unit = value_col.substr(prefix.size() + 7, value_col.size() - prefix.size() - 8);
    if (unit.find_first_of("[]\"") != std::string_view::npos) {
      throw LogError(1, "malformed unit in column '" + std::string(value_col) + "'");
    }
    schema.channels.push_back({ch, std::string(unit)});
  }
  return schema;
}

SampleRecord parse_row(std::string_view line, std::size_t line_no, const LogSchema& schema) {
  const auto fields = split_fields(line);
  const std::size_t expected = 2 + 4 * schema.channels.size();
  if (fields.size() != expected) {
    throw LogError(line_no, "expected " + std::to_string(expected) + " fields, found " +
                                std::to_string(fields.size()));
  }
  SampleRecord record;
  try {
    record.host_time = parse_timestamp(fields[0]);
  } catch (const std::invalid_argument& e) {
    throw LogError(line_no, e.what());
  }
  unsigned seq = 0;
  if (!parse_number(fields[1], seq) || seq > 255) throw LogError(line_no, "invalid seq");
  record.seq = static_cast<std::uint8_t>(seq);

  for (std::size_t g = 0; g < schema.channels.size(); ++g) {
    const auto& channel = schema.channels[g];
    const auto ch = static_cast<std::size_t>(channel.channel);
    const auto* group = &fields[2 + 4 * g];
    const bool mapped = !channel.unit.empty();
    const std::string where = " for channel " + std::to_string(ch);

    if (group[0].empty() && group[1].empty() && group[2].empty() && group[3].empty()) continue;

    int counts = 0;
    if (!parse_number(group[0], counts) || counts < 0 || counts > kMaxCounts) {
      throw LogError(line_no, "invalid counts" + where);
    }
    double volts = 0.0;
    if (!parse_number(group[1], volts)) throw LogError(line_no, "invalid volts" + where);
    const double exact = counts_to_volts(counts);
    // The volts column is counts_to_volts(counts) rounded for display.
    if (std::abs(volts - exact) > 0.5 * lsb_volts()) {
      throw LogError(line_no, "volts inconsistent with counts" + where);
    }
    record.counts[ch] = static_cast<Counts>(counts);
    record.volts[ch] = exact;
    record.enabled.set(ch);

    if (!mapped) {
      if (!group[2].empty() || !group[3].empty()) {
        throw LogError(line_no, "value given for unmapped channel " + std::to_string(ch));
      }
      continue;
    }
    ChannelValue value;
    value.unit = channel.unit;
    if (!parse_number(group[2], value.value)) throw LogError(line_no, "invalid value" + where);
    try {
      value.flag = parse_quality_flag(group[3]);
    } catch (const std::invalid_argument&) {
      throw LogError(line_no, "invalid quality flag" + where);
    }
    record.values[ch] = std::move(value);
  }
  return record;
}

}  // namespace

LogError::LogError(std::size_t line, const std::string& message)
    : std::runtime_error(line == 0 ? message : "line " + std::to_string(line) + ": " + message),
      line_(line) {}

std::vector<FieldError> LogPolicy::check() const {
  std::vector<FieldError> errors;
  if (value_precision < kMinPrecision || value_precision > 12) {
    errors.push_back({"log.precision", "must be between 3 and 12"});
  }
  if (volts_precision < kMinPrecision || volts_precision > 12) {
    errors.push_back({"log.volts_precision", "must be between 3 and 12"});
  }
  if (flush_every == 0) errors.push_back({"log.flush_every", "must be > 0"});
  if (file_pattern.empty()) errors.push_back({"log.file_pattern", "must not be empty"});
  return errors;
}

std::filesystem::path LogPolicy::file_for(HostTime start) const {
  const std::time_t seconds = std::chrono::system_clock::to_time_t(start);
  std::tm utc{};
  ::gmtime_r(&seconds, &utc);
  char name[256];
  if (std::strftime(name, sizeof name, file_pattern.c_str(), &utc) == 0) {
    throw LogError(0, "log file pattern expands to nothing");
  }
  std::filesystem::path candidate = directory / name;
  const auto stem = candidate.stem().string();
  const auto ext = candidate.extension().string();
  for (int n = 1; std::filesystem::exists(candidate); ++n) {
    candidate = directory / (stem + "-" + std::to_string(n) + ext);
  }
  return candidate;
}

LogSchema schema_for(const AcquisitionConfig& config) {
  LogSchema schema;
  for (int ch = 0; ch < kChannelCount; ++ch) {
    if (!config.enabled_channels.test(static_cast<std::size_t>(ch))) continue;
    const auto& map = config.channel_maps[static_cast<std::size_t>(ch)];
    schema.channels.push_back({ch, map ? map->unit() : std::string()});
  }
  return schema;
}

std::string format_timestamp(HostTime t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()), static_cast<int>(hms.subseconds().count()));
  return buf;
}

HostTime parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  const auto bad = [&] {
    return std::invalid_argument("invalid timestamp '" + std::string(text) + "'");
  };
  if (text.size() != 24 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
      text[13] != ':' || text[16] != ':' || text[19] != '.' || text[23] != 'Z') {
    throw bad();
  }
  int y, mo, d, h, mi, s, ms;
  if (!parse_fixed_int(text, 0, 4, y) || !parse_fixed_int(text, 5, 2, mo) ||
      !parse_fixed_int(text, 8, 2, d) || !parse_fixed_int(text, 11, 2, h) ||
      !parse_fixed_int(text, 14, 2, mi) || !parse_fixed_int(text, 17, 2, s) ||
      !parse_fixed_int(text, 20, 3, ms)) {
    throw bad();
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) throw bad();
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} + milliseconds{ms};
}

std::string format_header(const LogSchema& schema) {
  std::string out = "timestamp,seq";
  for (const auto& c : schema.channels) {
    const std::string p = "ch" + std::to_string(c.channel);
    out += "," + p + "_counts," + p + "_volts," + p + "_value[" + c.unit + "]," + p + "_flag";
  }
  return out;
}

std::string format_row(const SampleRecord& record, const LogSchema& schema,
                       const LogPolicy& policy) {
  std::string out = format_timestamp(record.host_time);
  out += ',';
  out += std::to_string(record.seq);
  for (const auto& c : schema.channels) {
    const auto ch = static_cast<std::size_t>(c.channel);
    if (!record.enabled.test(ch)) {
      out += ",,,,";
      continue;
    }
    out += ',';
    out += std::to_string(record.counts[ch]);
    out += ',';
    append_fixed(out, record.volts[ch], policy.volts_precision);
    const auto& value = record.values[ch];
    if (c.unit.empty() || !value) {
      out += ",,";
      continue;
    }
    out += ',';
    append_fixed(out, value->value, policy.value_precision);
    out += ',';
    out += to_string(value->flag);
  }
  return out;
}

LogWriter::LogWriter(std::filesystem::path path, LogSchema schema, LogPolicy policy)
    : path_(std::move(path)), schema_(std::move(schema)), policy_(std::move(policy)) {
  if (auto errors = policy_.check(); !errors.empty()) throw ConfigError(std::move(errors));
  out_.open(path_, std::ios::out | std::ios::trunc | std::ios::binary);
  if (!out_) throw LogError(0, "cannot create log file " + path_.string());
  out_ << format_header(schema_) << '\n';
  out_.flush();
  if (!out_) throw LogError(0, "cannot write log file " + path_.string());
}

LogWriter::~LogWriter() {
  try {
    close();
  } catch (...) {
  }
}

void LogWriter::append(const SampleRecord& record) {
  if (!out_.is_open()) throw LogError(0, "log file already closed");
  out_ << format_row(record, schema_, policy_) << '\n';
  ++rows_;
  if (++unflushed_ >= policy_.flush_every) flush();
  if (!out_) throw LogError(0, "write failed on " + path_.string());
}

void LogWriter::flush() {
  out_.flush();
  unflushed_ = 0;
  if (!out_) throw LogError(0, "flush failed on " + path_.string());
}

void LogWriter::close() {
  if (!out_.is_open()) return;
  flush();
  out_.close();
}

void write_log(std::ostream& out, const std::vector<SampleRecord>& records,
               const LogSchema& schema, const LogPolicy& policy) {
  out << format_header(schema) << '\n';
  for (const auto& r : records) out << format_row(r, schema, policy) << '\n';
}

void write_log(const std::filesystem::path& path, const std::vector<SampleRecord>& records,
               const LogSchema& schema, const LogPolicy& policy) {
  LogWriter writer(path, schema, policy);
  for (const auto& r : records) writer.append(r);
  writer.close();
}

LogData read_log(std::istream& in) {
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw LogError(1, "missing header");

  LogData data;
  data.schema = parse_header(lines[0]);
  data.records.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) throw LogError(i + 1, "empty row");
    data.records.push_back(parse_row(lines[i], i + 1, data.schema));
  }
  return data;
}

LogData read_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LogError(0, "cannot open " + path.string());
  return read_log(in);
}

}  // namespace das
