// SPDX-License-Identifier: Apache-2.0
// CSV sample log.
//
// Header:  timestamp,seq{,chN_counts,chN_volts,chN_value[UNIT],chN_flag}
// Rows:    2026-10-16T13:52:00.125Z,17,512,2.5024,25.024,ok
//
// One column group per logged channel, in channel order. UNIT is empty for
// channels without a calibration map; their value and flag fields are empty.
// A channel that is deselected mid-run keeps its columns with every field
// of the group empty. Timestamps are UTC with millisecond resolution.
#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "das/acquisition.hpp"

namespace das {

struct LogPolicy {
  std::filesystem::path directory = ".";
  std::string file_pattern = "das_%Y%m%dT%H%M%SZ.csv";  // strftime, UTC
  std::size_t flush_every = 1;                          // records
  int value_precision = 3;
  int volts_precision = 4;

  static constexpr int kMinPrecision = 3;

  std::vector<FieldError> check() const;
  /// Unused file name in `directory` for a session starting at `start`.
  std::filesystem::path file_for(HostTime start) const;
};

struct LogChannel {
  int channel = 0;
  std::string unit;  // empty: unmapped

  friend bool operator==(const LogChannel&, const LogChannel&) = default;
};

struct LogSchema {
  std::vector<LogChannel> channels;

  friend bool operator==(const LogSchema&, const LogSchema&) = default;
};

/// Enabled channels with the units of their maps.
LogSchema schema_for(const AcquisitionConfig& config);

std::string format_timestamp(HostTime t);
/// Throws std::invalid_argument for anything but YYYY-MM-DDTHH:MM:SS.mmmZ.
HostTime parse_timestamp(std::string_view text);

std::string format_header(const LogSchema& schema);
std::string format_row(const SampleRecord& record, const LogSchema& schema,
                       const LogPolicy& policy);

class LogError : public std::runtime_error {
 public:
  LogError(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }  // 1-based; 0 for file-level errors

 private:
  std::size_t line_;
};

/// Appends rows to a CSV file, flushing every `flush_every` records so an
/// interrupted run leaves every flushed row intact.
class LogWriter {
 public:
  /// Throws LogError if the file cannot be created.
  LogWriter(std::filesystem::path path, LogSchema schema, LogPolicy policy);
  ~LogWriter();
  LogWriter(const LogWriter&) = delete;
  LogWriter& operator=(const LogWriter&) = delete;

  void append(const SampleRecord& record);
  void flush();
  void close();

  const std::filesystem::path& path() const noexcept { return path_; }
  std::size_t rows() const noexcept { return rows_; }

 private:
  std::filesystem::path path_;
  LogSchema schema_;
  LogPolicy policy_;
  std::ofstream out_;
  std::size_t rows_ = 0;
  std::size_t unflushed_ = 0;
};

/// Session sink writing every record to a log.
class LogSink : public SessionSink {
 public:
  explicit LogSink(LogWriter& writer) : writer_(writer) {}
  void on_record(const SampleRecord& record) override { writer_.append(record); }

 private:
  LogWriter& writer_;
};

void write_log(std::ostream& out, const std::vector<SampleRecord>& records,
               const LogSchema& schema, const LogPolicy& policy);
void write_log(const std::filesystem::path& path, const std::vector<SampleRecord>& records,
               const LogSchema& schema, const LogPolicy& policy);

struct LogData {
  LogSchema schema;
  std::vector<SampleRecord> records;
};

/// Throws LogError citing the offending line.
LogData read_log(std::istream& in);
LogData read_log(const std::filesystem::path& path);

}  // namespace das
