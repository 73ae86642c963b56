// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <string_view>

#include "das/device_sim.hpp"
#include "das/transport.hpp"

namespace das {

/// Host end of a device connection. For in-process simulators the link also
/// owns the simulated device.
struct DeviceLink {
  std::unique_ptr<sim::Device> device;
  std::unique_ptr<ByteStream> stream;
};

/// Opens a device endpoint:
///   "host:port" / "tcp://host:port"  remote device or `das simulate --listen`
///   "sim"                            built-in simulator, default channels
///   "sim:PATH"                       built-in simulator configured from PATH
/// Throws TransportError when the endpoint is unreachable and ConfigError for
/// a bad simulator configuration.
DeviceLink open_device(std::string_view endpoint,
                       std::chrono::milliseconds connect_timeout = std::chrono::milliseconds(2000));

/// Temperature sine on channel 0 and humidity sine on channel 1.
sim::SimConfig default_sim_config();

}  // namespace das
