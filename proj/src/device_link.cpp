// SPDX-License-Identifier: Apache-2.0
#include "das/device_link.hpp"

#include "das/json_io.hpp"

namespace das {

sim::SimConfig default_sim_config() {
  sim::SimConfig cfg;
  cfg.rng_seed = 1;
  cfg.clock = sim::ClockMode::kRealTime;
  cfg.assign(0, {sim::SineSignal{25.0, 5.0, 600.0}, 0.0, LinearMap::temperature()});
  cfg.assign(1, {sim::SineSignal{50.0, 20.0, 900.0}, 0.5, LinearMap::humidity()});
  return cfg;
}

DeviceLink open_device(std::string_view endpoint, std::chrono::milliseconds connect_timeout) {
  DeviceLink link;
  if (endpoint == "sim" || endpoint.starts_with("sim:")) {
    auto config = endpoint == "sim" ? default_sim_config()
                                    : load_sim_config(std::string(endpoint.substr(4)));
    link.device = std::make_unique<sim::Device>(std::move(config));
    link.stream = std::make_unique<sim::LoopbackLink>(*link.device);
    return link;
  }
  link.stream = tcp_connect(parse_endpoint(endpoint), connect_timeout);
  return link;
}

}  // namespace das
