// SPDX-License-Identifier: Apache-2.0
// JSON forms of configurations, records and summaries shared by the
// service, the simulator and the command line.
#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>

#include "das/acquisition.hpp"
#include "das/device_sim.hpp"
#include "das/persistence.hpp"

namespace das {

using nlohmann::json;

/// {v_lo, v_hi, q_lo, q_hi, unit}, or a preset name ("temperature", "humidity").
LinearMap map_from_json(const json& j);
json map_to_json(const LinearMap& map);

/// Acquisition configuration with its log policy as one document:
/// {poll_period_ms, response_timeout_ms, enabled_channels, channel_maps,
///  buffer_capacity, log{directory, precision, volts_precision, flush_every,
///  file_pattern}}
json config_to_json(const AcquisitionConfig& config, const LogPolicy& log);

struct ConfigPatch {
  AcquisitionConfig config;
  LogPolicy log;
  bool touches_fixed_fields = false;  // anything besides enabled_channels differs
  std::vector<FieldError> errors;
};

/// Applies the fields present in `patch` over `config`/`log`. Absent fields
/// keep their current values. Every problem is reported, none thrown.
ConfigPatch apply_config_patch(const json& patch, const AcquisitionConfig& config,
                               const LogPolicy& log);

json record_to_json(const SampleRecord& record);
json summary_to_json(const SessionSummary& summary);

/// Simulator configuration:
/// {rng_seed, clock: "virtual"|"real-time", poll_period_s,
///  channels: [{channel, kind, ..., noise_sigma, map}], faults{...}}
/// Replay sources take "points": [[t, v], ...] or "file" + "source_channel".
/// Relative file paths resolve against `base_dir`. Throws ConfigError.
sim::SimConfig sim_config_from_json(const json& j, const std::filesystem::path& base_dir = {});
sim::SimConfig load_sim_config(const std::filesystem::path& path);

/// Parses a JSON file, throwing ConfigError with the parser's message.
json load_json_file(const std::filesystem::path& path);

}  // namespace das
