// SPDX-License-Identifier: Apache-2.0
// das: simulate a device, acquire from it, serve the control API, convert
// counts and compare logged series.
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure.
#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "das/acquisition.hpp"
#include "das/analysis.hpp"
#include "das/device_link.hpp"
#include "das/device_sim.hpp"
#include "das/json_io.hpp"
#include "das/persistence.hpp"
#include "das/service.hpp"

namespace {

constexpr int kExitRuntime = 2;

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

void install_signal_handlers() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::signal(SIGPIPE, SIG_IGN);
}

// Calls `fn` once g_stop is raised; the watcher ends with the returned guard.
class StopWatcher {
 public:
  template <class Fn>
  explicit StopWatcher(Fn fn)
      : thread_([fn = std::move(fn)](std::stop_token token) {
          while (!token.stop_requested()) {
            if (g_stop) {
              fn();
              return;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
          }
        }) {}

 private:
  std::jthread thread_;
};

struct SimulateOptions {
  std::string config;
  std::string listen;
  bool stdio = false;
  bool virtual_clock = false;
  std::string truth;
};

int run_simulate(const SimulateOptions& opt) {
  auto config = das::load_sim_config(opt.config);
  if (opt.virtual_clock) config.clock = das::sim::ClockMode::kVirtual;
  das::sim::Device device(std::move(config));
  device.set_record_truth(!opt.truth.empty());

  std::stop_source stop;
  if (opt.stdio) {
    auto stream = das::make_fd_stream(0, 1, false);
    StopWatcher watcher([&] { stop.request_stop(); });
    das::sim::run_device(device, *stream, stop.get_token());
  } else {
    das::TcpListener listener(das::parse_endpoint(opt.listen));
    std::cout << das::json{{"listening", das::parse_endpoint(opt.listen).host + ":" +
                                             std::to_string(listener.port())}}
                     .dump()
              << std::endl;
    StopWatcher watcher([&] {
      stop.request_stop();
      listener.shutdown();
    });
    while (!stop.stop_requested()) {
      auto stream = listener.accept(std::chrono::milliseconds(200));
      if (!stream) continue;
      try {
        das::sim::run_device(device, *stream, stop.get_token());
      } catch (const das::TransportError& e) {
        std::cerr << "das simulate: connection dropped: " << e.what() << '\n';
      }
    }
  }

  if (!opt.truth.empty()) {
    std::ofstream out(opt.truth);
    das::sim::write_truth_csv(out, device);
    if (!out) throw std::runtime_error("cannot write truth file " + opt.truth);
  }
  std::cerr << "das simulate: served " << device.polls_received() << " polls\n";
  return 0;
}

struct AcquireOptions {
  std::string device;
  int period_ms = 1000;
  int timeout_ms = 0;
  std::uint64_t duration = 0;
  std::string out;
  std::string config;
  std::vector<int> channels;
  std::vector<std::string> maps;
  bool virtual_clock = false;
};

int run_acquire(const AcquireOptions& opt) {
  das::AcquisitionConfig config;
  das::LogPolicy policy;
  if (!opt.config.empty()) {
    auto patch = das::apply_config_patch(das::load_json_file(opt.config), config, policy);
    if (!patch.errors.empty()) throw das::ConfigError(patch.errors);
    config = patch.config;
    policy = patch.log;
  }
  config.poll_period_ms = opt.period_ms;
  config.response_timeout_ms =
      opt.timeout_ms > 0 ? opt.timeout_ms : std::min(250, std::max(1, opt.period_ms / 2));
  if (!opt.channels.empty()) {
    config.enabled_channels.reset();
    for (int ch : opt.channels) config.enabled_channels.set(static_cast<std::size_t>(ch));
  }
  for (const auto& spec : opt.maps) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--map expects CH=PRESET");
    const int ch = std::stoi(spec.substr(0, eq));
    if (ch < 0 || ch >= das::kChannelCount) throw std::invalid_argument("--map channel outside 0..7");
    config.channel_maps[static_cast<std::size_t>(ch)] = das::map_from_json(spec.substr(eq + 1));
  }
  config.validate();

  // Connect before creating the log so an unreachable device leaves no file.
  auto link = das::open_device(opt.device);
  das::LogWriter writer(opt.out, das::schema_for(config), policy);
  das::LogSink sink(writer);
  das::SessionOptions options;
  options.max_polls = opt.duration;
  options.virtual_time = opt.virtual_clock;
  options.virtual_start =
      std::chrono::floor<std::chrono::milliseconds>(std::chrono::system_clock::now());
  das::Session session(*link.stream, config, sink, options);
  StopWatcher watcher([&] { session.stop(); });
  const auto summary = session.run();
  writer.close();

  std::cout << das::summary_to_json(summary).dump() << std::endl;
  return summary.transport_lost ? kExitRuntime : 0;
}

int run_serve(const std::string& config_path, const std::string& listen,
              const std::string& device, const std::string& static_dir) {
  das::service::ServiceSettings settings;
  if (!config_path.empty()) {
    settings = das::service::settings_from_json(das::load_json_file(config_path));
  }
  if (!listen.empty()) settings.listen = listen;
  if (!device.empty()) settings.device = device;
  if (!static_dir.empty()) settings.static_dir = static_dir;

  das::service::Service service(settings);
  const auto endpoint = das::parse_endpoint(settings.listen);
  service.listen(endpoint);
  std::cout << das::json{{"listening", endpoint.host + ":" + std::to_string(service.port())},
                         {"device", settings.device}}
                   .dump()
            << std::endl;
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  service.shutdown();
  return 0;
}

int run_convert(int counts, const std::string& map_name) {
  if (counts < 0 || counts > das::kMaxCounts) {
    throw das::OutOfRange("counts must be within 0..1023");
  }
  das::json out{{"counts", counts}, {"volts", das::counts_to_volts(counts)}};
  if (!map_name.empty()) {
    const auto map = das::map_from_json(map_name);
    const auto mapped = das::convert_counts(map, static_cast<das::Counts>(counts));
    out["value"] = mapped.value;
    out["unit"] = map.unit();
    out["flag"] = std::string(das::to_string(mapped.flag));
  }
  std::cout << out.dump() << std::endl;
  return 0;
}

int run_compare(const std::string& a, const std::string& b, int channel, int channel_b,
                const std::string& plot) {
  const auto series_a = das::analysis::load_series(a, channel);
  const auto series_b = das::analysis::load_series(b, channel_b >= 0 ? channel_b : channel);
  const auto pairs = das::analysis::align(series_a, series_b);
  if (!plot.empty()) {
    std::ofstream out(plot);
    das::analysis::write_plot_csv(out, pairs);
    if (!out) throw std::runtime_error("cannot write " + plot);
  }
  std::cout << das::analysis::stats_json(das::analysis::stats_of(pairs), series_a.unit())
            << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-channel data acquisition: device simulator and host tools"};
  app.require_subcommand(1);

  SimulateOptions sim_opt;
  auto* simulate = app.add_subcommand("simulate", "Run the simulated device");
  simulate->add_option("--config", sim_opt.config, "Simulator configuration (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  auto* listen_opt = simulate->add_option("--listen", sim_opt.listen, "TCP listen address host:port");
  auto* stdio_opt = simulate->add_flag("--stdio", sim_opt.stdio, "Serve polls on stdin/stdout");
  listen_opt->excludes(stdio_opt);
  simulate->add_flag("--virtual-clock", sim_opt.virtual_clock, "Advance time per poll");
  simulate->add_option("--truth", sim_opt.truth, "Write the ground-truth series to this CSV");

  AcquireOptions acq_opt;
  auto* acquire = app.add_subcommand("acquire", "Poll a device and log a CSV");
  acquire->add_option("--device", acq_opt.device, "host:port, sim or sim:CONFIG")->required();
  acquire->add_option("--period", acq_opt.period_ms, "Poll period in ms")->check(CLI::Range(2, 86400000));
  acquire->add_option("--timeout", acq_opt.timeout_ms, "Response timeout in ms");
  acquire->add_option("--duration", acq_opt.duration, "Number of polls")->required()->check(CLI::PositiveNumber);
  acquire->add_option("--out", acq_opt.out, "Output CSV")->required();
  acquire->add_option("--config", acq_opt.config, "Acquisition configuration (JSON)")->check(CLI::ExistingFile);
  acquire->add_option("--channels", acq_opt.channels, "Channels to log")->delimiter(',')->check(CLI::Range(0, 7));
  acquire->add_option("--map", acq_opt.maps, "CH=temperature|humidity");
  acquire->add_flag("--virtual-clock", acq_opt.virtual_clock,
                    "Poll back to back and stamp records at the nominal period");

  std::string serve_config, serve_listen, serve_device, serve_static;
  auto* serve = app.add_subcommand("serve", "Run the HTTP control and streaming service");
  serve->add_option("--config", serve_config, "Service configuration (JSON)")->check(CLI::ExistingFile);
  serve->add_option("--listen", serve_listen, "HTTP listen address host:port");
  serve->add_option("--device", serve_device, "Device endpoint");
  serve->add_option("--static", serve_static, "Directory served at /")->check(CLI::ExistingDirectory);

  int counts = 0;
  std::string map_name;
  auto* convert = app.add_subcommand("convert", "Convert an ADC count");
  convert->add_option("--counts", counts, "ADC count 0..1023")->required();
  convert->add_option("--map", map_name, "temperature or humidity")
      ->check(CLI::IsMember({"temperature", "humidity"}));

  std::string file_a, file_b, plot;
  int channel = 0;
  int channel_b = -1;
  auto* compare = app.add_subcommand("compare", "Agreement statistics between two series");
  compare->add_option("--a", file_a, "Log or truth CSV")->required();
  compare->add_option("--b", file_b, "Log or truth CSV")->required();
  compare->add_option("--channel", channel, "Channel to compare")->check(CLI::Range(0, 7));
  compare->add_option("--channel-b", channel_b, "Channel in --b when it differs")->check(CLI::Range(0, 7));
  compare->add_option("--plot", plot, "Write time,a,b,diff CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  install_signal_handlers();
  try {
    if (*simulate) {
      if (sim_opt.listen.empty() && !sim_opt.stdio) {
        std::cerr << "das simulate: one of --listen or --stdio is required\n";
        return 1;
      }
      return run_simulate(sim_opt);
    }
    if (*acquire) return run_acquire(acq_opt);
    if (*serve) return run_serve(serve_config, serve_listen, serve_device, serve_static);
    if (*convert) return run_convert(counts, map_name);
    if (*compare) return run_compare(file_a, file_b, channel, channel_b, plot);
  } catch (const std::exception& e) {
    std::cerr << "das: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 1;
}
