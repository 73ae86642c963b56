// SPDX-License-Identifier: Apache-2.0
#include "das/json_io.hpp"

#include <fstream>
#include <set>

#include "das/analysis.hpp"

namespace das {
namespace {

// Reads field `key` of `obj` into `out` when present, recording type errors.
template <class T>
bool read_field(const json& obj, const char* key, const std::string& path, T& out,
                std::vector<FieldError>& errors) {
  const auto it = obj.find(key);
  if (it == obj.end()) return false;
  try {
    out = it->get<T>();
    return true;
  } catch (const json::exception&) {
    errors.push_back({path + key, "has the wrong type"});
    return false;
  }
}

double require_number(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    throw ConfigError(where, std::string("missing numeric field '") + key + "'");
  }
  return it->get<double>();
}

std::vector<FieldError> unknown_keys(const json& obj, std::initializer_list<const char*> known,
                                     const std::string& path) {
  std::vector<FieldError> errors;
  for (const auto& [key, value] : obj.items()) {
    bool found = false;
    for (const char* k : known) found = found || key == k;
    if (!found) errors.push_back({path + key, "unknown field"});
  }
  return errors;
}

}  // namespace

LinearMap map_from_json(const json& j) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "temperature") return LinearMap::temperature();
    if (name == "humidity") return LinearMap::humidity();
    throw std::invalid_argument("unknown map preset '" + name + "'");
  }
  if (!j.is_object()) throw std::invalid_argument("map must be an object or preset name");
  for (const char* key : {"v_lo", "v_hi", "q_lo", "q_hi"}) {
    if (!j.contains(key) || !j[key].is_number()) {
      throw std::invalid_argument(std::string("map field '") + key + "' must be a number");
    }
  }
  if (!j.contains("unit") || !j["unit"].is_string()) {
    throw std::invalid_argument("map field 'unit' must be a string");
  }
  return LinearMap(j["v_lo"].get<double>(), j["v_hi"].get<double>(), j["q_lo"].get<double>(),
                   j["q_hi"].get<double>(), j["unit"].get<std::string>());
}

json map_to_json(const LinearMap& map) {
  return {{"v_lo", map.v_lo()},
          {"v_hi", map.v_hi()},
          {"q_lo", map.q_lo()},
          {"q_hi", map.q_hi()},
          {"unit", map.unit()}};
}

json config_to_json(const AcquisitionConfig& config, const LogPolicy& log) {
  json enabled = json::array();
  json maps = json::array();
  for (int ch = 0; ch < kChannelCount; ++ch) {
    const auto idx = static_cast<std::size_t>(ch);
    if (config.enabled_channels.test(idx)) enabled.push_back(ch);
    if (const auto& map = config.channel_maps[idx]) {
      json m = map_to_json(*map);
      m["channel"] = ch;
      maps.push_back(std::move(m));
    }
  }
  return {{"poll_period_ms", config.poll_period_ms},
          {"response_timeout_ms", config.response_timeout_ms},
          {"enabled_channels", std::move(enabled)},
          {"channel_maps", std::move(maps)},
          {"buffer_capacity", config.buffer_capacity},
          {"log",
           {{"directory", log.directory.string()},
            {"precision", log.value_precision},
            {"volts_precision", log.volts_precision},
            {"flush_every", log.flush_every},
            {"file_pattern", log.file_pattern}}}};
}

ConfigPatch apply_config_patch(const json& patch, const AcquisitionConfig& config,
                               const LogPolicy& log) {
  ConfigPatch out{config, log, false, {}};
  auto& errors = out.errors;
  if (!patch.is_object()) {
    errors.push_back({"", "configuration must be a JSON object"});
    return out;
  }
  errors = unknown_keys(patch,
                        {"poll_period_ms", "response_timeout_ms", "enabled_channels",
                         "channel_maps", "buffer_capacity", "log"},
                        "");

  read_field(patch, "poll_period_ms", "", out.config.poll_period_ms, errors);
  read_field(patch, "response_timeout_ms", "", out.config.response_timeout_ms, errors);
  read_field(patch, "buffer_capacity", "", out.config.buffer_capacity, errors);

  if (std::vector<int> channels; read_field(patch, "enabled_channels", "", channels, errors)) {
    ChannelMask mask;
    for (std::size_t i = 0; i < channels.size(); ++i) {
      const int ch = channels[i];
      const std::string field = "enabled_channels[" + std::to_string(i) + "]";
      if (ch < 0 || ch >= kChannelCount) {
        errors.push_back({field, "channel " + std::to_string(ch) + " outside 0..7"});
      } else if (mask.test(static_cast<std::size_t>(ch))) {
        errors.push_back({field, "channel " + std::to_string(ch) + " listed twice"});
      } else {
        mask.set(static_cast<std::size_t>(ch));
      }
    }
    out.config.enabled_channels = mask;
  }

  if (const auto it = patch.find("channel_maps"); it != patch.end()) {
    out.config.channel_maps = {};
    if (!it->is_array()) {
      errors.push_back({"channel_maps", "must be an array"});
    } else {
      for (std::size_t i = 0; i < it->size(); ++i) {
        const auto& entry = (*it)[i];
        const std::string field = "channel_maps[" + std::to_string(i) + "]";
        if (!entry.is_object() || !entry.contains("channel") ||
            !entry["channel"].is_number_integer()) {
          errors.push_back({field, "each map needs an integer 'channel'"});
          continue;
        }
        const int ch = entry["channel"].get<int>();
        const std::string label = "channel " + std::to_string(ch) + " map";
        if (ch < 0 || ch >= kChannelCount) {
          errors.push_back({field, label + ": channel outside 0..7"});
          continue;
        }
        auto extra = unknown_keys(entry, {"channel", "v_lo", "v_hi", "q_lo", "q_hi", "unit"},
                                  field + ".");
        errors.insert(errors.end(), extra.begin(), extra.end());
        auto& slot = out.config.channel_maps[static_cast<std::size_t>(ch)];
        if (slot) {
          errors.push_back({field, label + " given twice"});
          continue;
        }
        try {
          slot = map_from_json(entry);
        } catch (const std::invalid_argument& e) {
          errors.push_back({field, label + ": " + e.what()});
        }
      }
    }
  }

  if (const auto it = patch.find("log"); it != patch.end()) {
    if (!it->is_object()) {
      errors.push_back({"log", "must be an object"});
    } else {
      auto extra = unknown_keys(
          *it, {"directory", "precision", "volts_precision", "flush_every", "file_pattern"},
          "log.");
      errors.insert(errors.end(), extra.begin(), extra.end());
      if (std::string dir; read_field(*it, "directory", "log.", dir, errors)) {
        out.log.directory = dir;
      }
      read_field(*it, "precision", "log.", out.log.value_precision, errors);
      read_field(*it, "volts_precision", "log.", out.log.volts_precision, errors);
      read_field(*it, "flush_every", "log.", out.log.flush_every, errors);
      read_field(*it, "file_pattern", "log.", out.log.file_pattern, errors);
    }
  }

  if (errors.empty()) {
    auto more = out.config.check();
    errors.insert(errors.end(), more.begin(), more.end());
    more = out.log.check();
    errors.insert(errors.end(), more.begin(), more.end());
  }

  out.touches_fixed_fields =
      out.config.poll_period_ms != config.poll_period_ms ||
      out.config.response_timeout_ms != config.response_timeout_ms ||
      out.config.buffer_capacity != config.buffer_capacity ||
      out.config.channel_maps != config.channel_maps || out.log.directory != log.directory ||
      out.log.value_precision != log.value_precision ||
      out.log.volts_precision != log.volts_precision || out.log.flush_every != log.flush_every ||
      out.log.file_pattern != log.file_pattern;
  return out;
}

json record_to_json(const SampleRecord& record) {
  json values = json::array();
  json enabled = json::array();
  for (int ch = 0; ch < kChannelCount; ++ch) {
    const auto idx = static_cast<std::size_t>(ch);
    if (!record.enabled.test(idx)) continue;
    enabled.push_back(ch);
    if (const auto& v = record.values[idx]) {
      values.push_back({{"channel", ch},
                        {"value", v->value},
                        {"unit", v->unit},
                        {"flag", std::string(to_string(v->flag))}});
    }
  }
  return {{"seq", record.seq},
          {"host_time", format_timestamp(record.host_time)},
          {"host_time_ms", record.host_time.time_since_epoch().count()},
          {"counts", record.counts},
          {"volts", record.volts},
          {"enabled_channels", std::move(enabled)},
          {"values", std::move(values)}};
}

json summary_to_json(const SessionSummary& s) {
  return {{"polls", s.polls},         {"records", s.records}, {"timeouts", s.timeouts},
          {"decode_errors", s.decode_errors}, {"gaps", s.gaps}, {"missed", s.missed},
          {"transport_lost", s.transport_lost}, {"end_cause", s.end_cause}};
}

sim::SimConfig sim_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("", "simulator configuration must be an object");
  auto errors = unknown_keys(j, {"rng_seed", "clock", "poll_period_s", "channels", "faults"}, "");
  sim::SimConfig cfg;
  read_field(j, "rng_seed", "", cfg.rng_seed, errors);
  read_field(j, "poll_period_s", "", cfg.poll_period_s, errors);
  if (std::string clock; read_field(j, "clock", "", clock, errors)) {
    if (clock == "virtual") {
      cfg.clock = sim::ClockMode::kVirtual;
    } else if (clock == "real-time") {
      cfg.clock = sim::ClockMode::kRealTime;
    } else {
      errors.push_back({"clock", "must be \"virtual\" or \"real-time\""});
    }
  }
  if (const auto it = j.find("faults"); it != j.end()) {
    if (!it->is_object()) {
      errors.push_back({"faults", "must be an object"});
    } else {
      auto extra = unknown_keys(*it, {"drop_every", "drop_offset", "corrupt_every", "corrupt_offset"},
                                "faults.");
      errors.insert(errors.end(), extra.begin(), extra.end());
      read_field(*it, "drop_every", "faults.", cfg.faults.drop_every, errors);
      read_field(*it, "drop_offset", "faults.", cfg.faults.drop_offset, errors);
      read_field(*it, "corrupt_every", "faults.", cfg.faults.corrupt_every, errors);
      read_field(*it, "corrupt_offset", "faults.", cfg.faults.corrupt_offset, errors);
    }
  }

  const auto channels = j.find("channels");
  if (channels != j.end() && !channels->is_array()) {
    errors.push_back({"channels", "must be an array"});
  } else if (channels != j.end()) {
    for (std::size_t i = 0; i < channels->size(); ++i) {
      const auto& c = (*channels)[i];
      const std::string field = "channels[" + std::to_string(i) + "]";
      try {
        if (!c.is_object()) throw std::invalid_argument("must be an object");
        if (!c.contains("channel") || !c["channel"].is_number_integer()) {
          throw std::invalid_argument("needs an integer 'channel'");
        }
        const std::string kind = c.value("kind", "");
        sim::ChannelSource source{sim::ConstantSignal{}, c.value("noise_sigma", 0.0),
                                  map_from_json(c.value("map", json("temperature")))};
        if (kind == "constant") {
          source.signal = sim::ConstantSignal{require_number(c, "level", field)};
        } else if (kind == "sine") {
          source.signal = sim::SineSignal{require_number(c, "offset", field),
                                          require_number(c, "amplitude", field),
                                          require_number(c, "period_s", field)};
        } else if (kind == "ramp") {
          source.signal = sim::RampSignal{require_number(c, "start", field),
                                          require_number(c, "end", field),
                                          require_number(c, "duration_s", field)};
        } else if (kind == "replay") {
          sim::ReplaySignal replay;
          if (c.contains("file")) {
            auto path = std::filesystem::path(c["file"].get<std::string>());
            if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
            const auto series = analysis::load_series(path, c.value("source_channel", 0));
            for (const auto& p : series.points()) replay.points.emplace_back(p.t_s, p.value);
          } else {
            replay.points = c.at("points").get<std::vector<std::pair<double, double>>>();
          }
          source.signal = std::move(replay);
        } else {
          throw std::invalid_argument("unknown source kind '" + kind + "'");
        }
        cfg.assign(c["channel"].get<int>(), std::move(source));
      } catch (const ConfigError& e) {
        errors.insert(errors.end(), e.errors().begin(), e.errors().end());
      } catch (const std::exception& e) {
        errors.push_back({field, e.what()});
      }
    }
  }
  if (errors.empty()) {
    try {
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      errors.push_back({"", e.what()});
    }
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return cfg;
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", path.string() + ": " + e.what());
  }
}

sim::SimConfig load_sim_config(const std::filesystem::path& path) {
  return sim_config_from_json(load_json_file(path), path.parent_path());
}

}  // namespace das
