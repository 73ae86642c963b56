// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "das/json_io.hpp"

namespace das {
namespace {

bool has_field(const std::vector<FieldError>& errors, const std::string& field) {
  for (const auto& e : errors) {
    if (e.field == field) return true;
  }
  return false;
}

TEST(JsonIo, MapPresetsAndObjects) {
  EXPECT_EQ(map_from_json("temperature"), LinearMap::temperature());
  EXPECT_EQ(map_from_json("humidity"), LinearMap::humidity());
  const LinearMap custom(0.5, 4.5, -20, 80, "degF");
  EXPECT_EQ(map_from_json(map_to_json(custom)), custom);
  EXPECT_THROW(map_from_json("pressure"), std::invalid_argument);
  EXPECT_THROW(map_from_json(json{{"v_lo", 0}, {"v_hi", 1}, {"q_lo", 0}}), std::invalid_argument);
}

TEST(JsonIo, ConfigDocumentFieldNames) {
  AcquisitionConfig config;
  config.enabled_channels = ChannelMask{0b11};
  config.channel_maps[0] = LinearMap::temperature();
  const auto j = config_to_json(config, LogPolicy{});
  EXPECT_EQ(j["poll_period_ms"], 1000);
  EXPECT_EQ(j["response_timeout_ms"], 250);
  EXPECT_EQ(j["enabled_channels"], json::array({0, 1}));
  EXPECT_EQ(j["channel_maps"][0],
            (json{{"channel", 0}, {"v_lo", 0.0}, {"v_hi", 5.0}, {"q_lo", 0.0}, {"q_hi", 50.0},
                  {"unit", "degC"}}));
  EXPECT_EQ(j["log"]["directory"], ".");
  EXPECT_EQ(j["log"]["precision"], 3);
}

TEST(JsonIo, PatchRoundTrip) {
  const AcquisitionConfig base;
  const LogPolicy log;
  const auto doc = json::parse(R"({
    "poll_period_ms": 500, "response_timeout_ms": 100, "enabled_channels": [1, 4],
    "channel_maps": [{"channel": 1, "v_lo": 1, "v_hi": 5, "q_lo": 10, "q_hi": 90, "unit": "%RH"}],
    "buffer_capacity": 128, "log": {"directory": "/tmp/x", "precision": 4}})");
  const auto patch = apply_config_patch(doc, base, log);
  ASSERT_TRUE(patch.errors.empty()) << patch.errors[0].message;
  EXPECT_TRUE(patch.touches_fixed_fields);
  EXPECT_EQ(patch.config.enabled_channels, ChannelMask{0b1'0010});
  EXPECT_EQ(patch.config.channel_maps[1], LinearMap::humidity());
  const auto again = config_to_json(patch.config, patch.log);
  for (const auto& [key, value] : doc.items()) {
    if (key == "log") continue;
    EXPECT_EQ(again[key], value) << key;
  }
  EXPECT_EQ(again["log"]["precision"], 4);
  EXPECT_EQ(apply_config_patch(again, patch.config, patch.log).touches_fixed_fields, false);
}

TEST(JsonIo, AbsentFieldsKeepCurrentValues) {
  AcquisitionConfig base;
  base.channel_maps[2] = LinearMap::humidity();
  const auto patch = apply_config_patch(json{{"enabled_channels", {2}}}, base, LogPolicy{});
  EXPECT_TRUE(patch.errors.empty());
  EXPECT_FALSE(patch.touches_fixed_fields);
  EXPECT_EQ(patch.config.channel_maps[2], LinearMap::humidity());
  EXPECT_EQ(patch.config.poll_period_ms, 1000);
}

TEST(JsonIo, DegenerateMapNamesTheChannel) {
  const auto patch = apply_config_patch(
      json::parse(R"({"channel_maps": [{"channel": 3, "v_lo": 2, "v_hi": 2, "q_lo": 0, "q_hi": 1, "unit": "x"}]})"),
      AcquisitionConfig{}, LogPolicy{});
  ASSERT_EQ(patch.errors.size(), 1u);
  EXPECT_EQ(patch.errors[0].field, "channel_maps[0]");
  EXPECT_NE(patch.errors[0].message.find("channel 3 map"), std::string::npos);
}

TEST(JsonIo, EveryProblemIsReported) {
  const auto patch = apply_config_patch(
      json::parse(R"({"poll_period_ms": "fast", "enabled_channels": [0, 9, 0], "colour": 1,
                      "log": {"precision": "x", "rotate": true}})"),
      AcquisitionConfig{}, LogPolicy{});
  EXPECT_TRUE(has_field(patch.errors, "poll_period_ms"));
  EXPECT_TRUE(has_field(patch.errors, "enabled_channels[1]"));
  EXPECT_TRUE(has_field(patch.errors, "enabled_channels[2]"));
  EXPECT_TRUE(has_field(patch.errors, "colour"));
  EXPECT_TRUE(has_field(patch.errors, "log.precision"));
  EXPECT_TRUE(has_field(patch.errors, "log.rotate"));
}

TEST(JsonIo, InvariantViolationsSurfaceAsFieldErrors) {
  const auto patch = apply_config_patch(
      json{{"poll_period_ms", 100}, {"response_timeout_ms", 100}, {"enabled_channels", json::array()}},
      AcquisitionConfig{}, LogPolicy{});
  EXPECT_TRUE(has_field(patch.errors, "response_timeout_ms"));
  EXPECT_TRUE(has_field(patch.errors, "enabled_channels"));
  EXPECT_FALSE(apply_config_patch(json::array(), AcquisitionConfig{}, LogPolicy{}).errors.empty());
}

TEST(JsonIo, RecordDocument) {
  AcquisitionConfig config;
  config.enabled_channels = ChannelMask{0b101};
  config.channel_maps[0] = LinearMap::temperature();
  RawFrame f;
  f.seq = 9;
  f.counts[0] = 512;
  f.counts[2] = 1023;
  const auto j = record_to_json(make_record(f, HostTime{std::chrono::milliseconds(1500)}, config));
  EXPECT_EQ(j["seq"], 9);
  EXPECT_EQ(j["host_time"], "1970-01-01T00:00:01.500Z");
  EXPECT_EQ(j["host_time_ms"], 1500);
  EXPECT_EQ(j["counts"].size(), 8u);
  EXPECT_EQ(j["volts"][2], 5.0);
  EXPECT_EQ(j["enabled_channels"], json::array({0, 2}));
  ASSERT_EQ(j["values"].size(), 1u);
  EXPECT_EQ(j["values"][0]["channel"], 0);
  EXPECT_EQ(j["values"][0]["unit"], "degC");
  EXPECT_EQ(j["values"][0]["flag"], "ok");
}

TEST(JsonIo, SummaryDocument) {
  SessionSummary s{10, 8, 1, 1, 1, 1, false, "stopped"};
  const auto j = summary_to_json(s);
  EXPECT_EQ(j["polls"], 10);
  EXPECT_EQ(j["records"], 8);
  EXPECT_EQ(j["end_cause"], "stopped");
}

TEST(JsonIo, SimulatorConfiguration) {
  const auto cfg = sim_config_from_json(json::parse(R"({
    "rng_seed": 4, "clock": "virtual", "poll_period_s": 0.5,
    "channels": [
      {"channel": 0, "kind": "ramp", "start": 0, "end": 50, "duration_s": 100},
      {"channel": 1, "kind": "sine", "offset": 50, "amplitude": 20, "period_s": 60,
       "noise_sigma": 0.5, "map": "humidity"},
      {"channel": 2, "kind": "replay", "points": [[0, 1], [10, 2]]}],
    "faults": {"drop_every": 10, "drop_offset": 3}})"));
  EXPECT_EQ(cfg.rng_seed, 4u);
  EXPECT_EQ(cfg.poll_period_s, 0.5);
  ASSERT_TRUE(cfg.sources[1]);
  EXPECT_EQ(cfg.sources[1]->noise_sigma, 0.5);
  EXPECT_EQ(cfg.sources[1]->map, LinearMap::humidity());
  EXPECT_EQ(cfg.sources[0]->map, LinearMap::temperature());
  EXPECT_EQ(cfg.faults.drop_every, 10);
  EXPECT_FALSE(cfg.sources[3]);
}

TEST(JsonIo, SimulatorConfigurationErrors) {
  try {
    sim_config_from_json(json::parse(R"({"clock": "fast", "channels": [
      {"channel": 0, "kind": "wave"}, {"channel": 1, "kind": "sine", "offset": 1}]})"));
    FAIL() << "accepted a bad configuration";
  } catch (const ConfigError& e) {
    EXPECT_TRUE(has_field(e.errors(), "clock"));
    EXPECT_TRUE(has_field(e.errors(), "channels[0]"));
    EXPECT_TRUE(has_field(e.errors(), "channels[1]"));
  }
  EXPECT_THROW(load_json_file("/nonexistent/sim.json"), ConfigError);
}

}  // namespace
}  // namespace das
