// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "das/persistence.hpp"
#include "oracles.hpp"

namespace das {
namespace {

using namespace std::chrono_literals;

const HostTime kStart = std::chrono::sys_days{std::chrono::year{2026} / 10 / 16} + 13h + 52min;

AcquisitionConfig mixed_config() {
  AcquisitionConfig config;
  config.enabled_channels = ChannelMask{0b1000'0111};
  config.channel_maps[0] = LinearMap::temperature();
  config.channel_maps[1] = LinearMap::humidity();
  return config;
}

std::vector<SampleRecord> random_records(std::size_t n, const AcquisitionConfig& config,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count(0, kMaxCounts);
  std::uniform_int_distribution<int> jitter(0, 999);
  std::vector<SampleRecord> out;
  HostTime t = kStart;
  for (std::size_t i = 0; i < n; ++i) {
    RawFrame f;
    f.seq = static_cast<std::uint8_t>(i);
    for (auto& c : f.counts) c = static_cast<Counts>(count(rng));
    t += std::chrono::milliseconds(1000 + jitter(rng) - 500);
    out.push_back(make_record(f, t, config));
  }
  return out;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("das_persistence_" + std::to_string(::getpid()) + "_" +
            std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

/// Equality on the logged channels, values compared at the written precision.
void expect_same_at_precision(const SampleRecord& a, const SampleRecord& b, const LogSchema& schema,
                              int precision) {
  EXPECT_EQ(a.host_time, b.host_time);
  EXPECT_EQ(a.seq, b.seq);
  const double tol = 0.5 * std::pow(10.0, -precision) + 1e-12;
  for (const auto& c : schema.channels) {
    const auto ch = static_cast<std::size_t>(c.channel);
    ASSERT_EQ(a.enabled.test(ch), b.enabled.test(ch));
    if (!a.enabled.test(ch)) continue;
    EXPECT_EQ(a.counts[ch], b.counts[ch]);
    EXPECT_EQ(a.volts[ch], b.volts[ch]);
    ASSERT_EQ(a.values[ch].has_value(), b.values[ch].has_value());
    if (!a.values[ch]) continue;
    EXPECT_NEAR(a.values[ch]->value, b.values[ch]->value, tol);
    EXPECT_EQ(a.values[ch]->unit, b.values[ch]->unit);
    EXPECT_EQ(a.values[ch]->flag, b.values[ch]->flag);
  }
}

TEST(Persistence, RowForTwentyFiveDegrees) {
  AcquisitionConfig config;
  config.enabled_channels = ChannelMask{1};
  config.channel_maps[0] = LinearMap::temperature();
  RawFrame f;
  f.seq = 17;
  f.counts[0] = 512;
  const auto record = make_record(f, kStart + 125ms, config);
  const auto schema = schema_for(config);
  EXPECT_EQ(format_header(schema), "timestamp,seq,ch0_counts,ch0_volts,ch0_value[degC],ch0_flag");
  // 512 counts is 2.502444 V, which the map turns into 25.0244 degC.
  char expected_value[32];
  std::snprintf(expected_value, sizeof expected_value, "%.3f",
                static_cast<double>(oracle::temperature_of(oracle::volts(512))));
  EXPECT_EQ(format_row(record, schema, LogPolicy{}),
            std::string("2026-10-16T13:52:00.125Z,17,512,2.5024,") + expected_value + ",ok");
  EXPECT_EQ(std::string(expected_value), "25.024");
}

TEST(Persistence, EmptyRecordListIsHeaderOnly) {
  std::ostringstream out;
  const auto schema = schema_for(mixed_config());
  write_log(out, {}, schema, LogPolicy{});
  EXPECT_EQ(out.str(), format_header(schema) + "\n");
  std::istringstream in(out.str());
  const auto data = read_log(in);
  EXPECT_TRUE(data.records.empty());
  EXPECT_EQ(data.schema, schema);
}

TEST(Persistence, UnmappedChannelHasEmptyUnitAndValue) {
  const auto config = mixed_config();
  const auto schema = schema_for(config);
  EXPECT_EQ(format_header(schema),
            "timestamp,seq,ch0_counts,ch0_volts,ch0_value[degC],ch0_flag,"
            "ch1_counts,ch1_volts,ch1_value[%RH],ch1_flag,"
            "ch2_counts,ch2_volts,ch2_value[],ch2_flag,"
            "ch7_counts,ch7_volts,ch7_value[],ch7_flag");
  RawFrame f;
  f.counts = {0, 1023, 5, 0, 0, 0, 0, 1};
  const auto row = format_row(make_record(f, kStart, config), schema, LogPolicy{});
  EXPECT_EQ(row,
            "2026-10-16T13:52:00.000Z,0,0,0.0000,0.000,ok,1023,5.0000,90.000,saturated,"
            "5,0.0244,,,1,0.0049,,");
}

TEST(Persistence, RoundTripThousandRecords) {
  const auto config = mixed_config();
  const auto schema = schema_for(config);
  const auto records = random_records(1000, config, 21);
  std::stringstream io;
  write_log(io, records, schema, LogPolicy{});
  const auto data = read_log(io);
  EXPECT_EQ(data.schema, schema);
  ASSERT_EQ(data.records.size(), records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    expect_same_at_precision(records[i], data.records[i], schema, 3);
  }
}

TEST(Persistence, RoundTripHonoursPrecisionSetting) {
  const auto config = mixed_config();
  const auto schema = schema_for(config);
  LogPolicy policy;
  policy.value_precision = 9;
  const auto records = random_records(200, config, 22);
  std::stringstream io;
  write_log(io, records, schema, policy);
  const auto data = read_log(io);
  for (std::size_t i = 0; i < records.size(); ++i) {
    expect_same_at_precision(records[i], data.records[i], schema, 9);
  }
}

TEST(Persistence, DeselectedChannelLeavesEmptyGroup) {
  auto config = mixed_config();
  const auto schema = schema_for(config);
  config.enabled_channels = ChannelMask{0b10};
  RawFrame f;
  f.counts[1] = 600;
  const auto record = make_record(f, kStart, config);
  const auto row = format_row(record, schema, LogPolicy{});
  EXPECT_EQ(row.substr(0, 29), "2026-10-16T13:52:00.000Z,0,,,");
  std::stringstream io;
  write_log(io, {record}, schema, LogPolicy{});
  const auto back = read_log(io).records.at(0);
  EXPECT_EQ(back.enabled, ChannelMask{0b10});
  EXPECT_EQ(back.counts[1], 600);
}

TEST(Persistence, TruncatedLastLineIsReported) {
  const auto config = mixed_config();
  const auto schema = schema_for(config);
  std::ostringstream out;
  write_log(out, random_records(10, config, 23), schema, LogPolicy{});
  const std::string full = out.str();
  // Every cut inside the final row must be rejected with that row's number.
  const auto last_row_start = full.rfind('\n', full.size() - 2) + 1;
  for (auto cut = last_row_start + 1; cut < full.size() - 1; ++cut) {
    std::istringstream in(full.substr(0, cut));
    try {
      read_log(in);
      ADD_FAILURE() << "accepted truncation at " << cut;
    } catch (const LogError& e) {
      EXPECT_EQ(e.line(), 11u);
      EXPECT_NE(std::string(e.what()).find("line 11"), std::string::npos);
    }
  }
}

TEST(Persistence, MalformedRowsNameTheirLine) {
  const std::string header = "timestamp,seq,ch0_counts,ch0_volts,ch0_value[degC],ch0_flag\n";
  const std::string good = "2026-10-16T13:52:00.000Z,1,512,2.5024,25.024,ok\n";
  auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      read_log(in);
    } catch (const LogError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of(header + good + good), 0u);
  EXPECT_EQ(line_of(header + good + "2026-10-16T13:52:00.000Z,1,1024,2.5024,25.024,ok\n"), 3u);
  EXPECT_EQ(line_of(header + good + "2026-10-16T13:52:00.000Z,1,512,3.0,25.024,ok\n"), 3u);
  EXPECT_EQ(line_of(header + good + "2026-10-16T13:52:00.000Z,1,512,2.5024,25.024,fine\n"), 3u);
  EXPECT_EQ(line_of(header + "2026-13-16T13:52:00.000Z,1,512,2.5024,25.024,ok\n"), 2u);
  EXPECT_EQ(line_of(header + good + "\n" + good), 3u);
  EXPECT_EQ(line_of("timestamp,sequence\n"), 1u);
  EXPECT_EQ(line_of("timestamp,seq,ch0_counts,ch0_volts,ch0_value[degC],ch0_quality\n"), 1u);
  EXPECT_EQ(line_of(""), 1u);
}

TEST(Persistence, CrlfLinesAreAccepted) {
  std::istringstream in(
      "timestamp,seq,ch0_counts,ch0_volts,ch0_value[degC],ch0_flag\r\n"
      "2026-10-16T13:52:00.000Z,1,512,2.5024,25.024,ok\r\n");
  EXPECT_EQ(read_log(in).records.size(), 1u);
}

TEST(Persistence, TimestampFormat) {
  EXPECT_EQ(format_timestamp(kStart + 1ms), "2026-10-16T13:52:00.001Z");
  EXPECT_EQ(parse_timestamp("2026-10-16T13:52:00.001Z"), kStart + 1ms);
  EXPECT_EQ(format_timestamp(HostTime{}), "1970-01-01T00:00:00.000Z");
  EXPECT_THROW(parse_timestamp("2026-10-16 13:52:00.001Z"), std::invalid_argument);
  EXPECT_THROW(parse_timestamp("2026-02-30T00:00:00.000Z"), std::invalid_argument);
}

TEST(Persistence, WriterFlushesEveryRow) {
  TempDir dir;
  const auto config = mixed_config();
  const auto schema = schema_for(config);
  const auto records = random_records(5, config, 24);
  LogWriter writer(dir.path / "run.csv", schema, LogPolicy{});
  for (const auto& r : records) writer.append(r);
  // Read while the writer is still open, as after a crash.
  const auto data = read_log(dir.path / "run.csv");
  EXPECT_EQ(data.records.size(), 5u);
  writer.close();
  EXPECT_EQ(writer.rows(), 5u);
}

TEST(Persistence, FileNamesDoNotCollide) {
  TempDir dir;
  LogPolicy policy;
  policy.directory = dir.path;
  const auto first = policy.file_for(kStart);
  EXPECT_EQ(first.filename(), "das_20261016T135200Z.csv");
  std::ofstream(first) << "x";
  const auto second = policy.file_for(kStart);
  EXPECT_EQ(second.filename(), "das_20261016T135200Z-1.csv");
}

TEST(Persistence, PolicyChecks) {
  LogPolicy policy;
  policy.value_precision = 2;
  policy.flush_every = 0;
  const auto errors = policy.check();
  ASSERT_EQ(errors.size(), 2u);
  EXPECT_EQ(errors[0].field, "log.precision");
  EXPECT_EQ(errors[1].field, "log.flush_every");
}

TEST(Persistence, UnwritableDirectoryFails) {
  EXPECT_THROW(LogWriter("/nonexistent-dir/x/run.csv", LogSchema{}, LogPolicy{}), LogError);
}

}  // namespace
}  // namespace das
