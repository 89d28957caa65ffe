#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include <json.hpp>

#include "bessim/scenario.hpp"
#include "bessim/stability.hpp"
#include "bessim/telemetry.hpp"

namespace bessim {

struct ServiceOptions {
  std::string bind_address = "127.0.0.1";
  unsigned short port = 8080; ///< 0 picks a free port
  double rolling_window_s = 300.0;
  /// Kernel send buffer for telemetry sockets; small values make slow
  /// subscribers coalesce sooner instead of queueing in the kernel.
  int ws_send_buffer_bytes = 16384;
};

/// Rolling report over the trailing window. Classification is null until the
/// window holds at least the classifier's minimum span.
nlohmann::json rolling_report_json(const std::vector<TelemetryRecord>& log, int tick_hz, double window_s,
                                   const ClassifierParams& params = {});

/// HTTP + WebSocket front end to one engine.
///
///   GET   /api/state              snapshot: tick, state, speed, last record, attack specs, report
///   POST  /api/control            {"action": pause|resume|reset|speed|stop, "value": ...}
///   PATCH /api/attacks/{link_id}  partial spec for s2c, c2b, b2c-status or load_alter
///   GET   /api/scenario           scenario with every accepted patch applied
///   GET   /api/report             rolling stability report
///   WS    /ws/telemetry?decimation=N
///
/// The engine starts paused and is stepped by a dedicated thread; request
/// handlers reach it only through the command queue.
class ControlService {
public:
  ControlService(ScenarioConfig cfg, ServiceOptions opts = {});
  ~ControlService();
  ControlService(const ControlService&) = delete;
  ControlService& operator=(const ControlService&) = delete;

  /// Binds and starts serving. Returns the bound port. Throws RuntimeError if
  /// the port is taken.
  unsigned short start();
  void stop();
  /// Blocks until stop() is called from another thread.
  void wait();

  struct Impl;

private:
  std::unique_ptr<Impl> impl_;
};

} // namespace bessim
