#pragma once

#include <memory>
#include <optional>
#include <string>

#include "icebot/metrics.hpp"
#include "icebot/roadmap.hpp"
#include "icebot/run_config.hpp"

namespace icebot {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  std::string session_log_path;     // empty: not recorded
  std::string trajectory_log_path;  // empty: not recorded
  bool handle_signals = false;      // SIGINT/SIGTERM request a stop
};

// Network gateway around one Session. WebSocket /ops carries commands and
// telemetry; plain HTTP serves GET /views, /roadmap/stats and /health.
//
// The control loop runs on its own thread at the configured tick rate and is
// the only code that touches the controller. Inbound commands are queued in
// arrival order and applied between ticks; outbound messages are handed to
// the network thread, which drops stale telemetry for clients that cannot
// keep up. The first client to send a command becomes the operator until it
// disconnects; commands from anyone else get an "unauthorized" error while
// telemetry keeps flowing to them.
class Server {
 public:
  Server(RunConfig config, ServerOptions options = {});
  Server(RunConfig config, Roadmap roadmap, ServerOptions options);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and launches both threads. Io error if the port is unavailable.
  void start();
  // Blocks until stop() is called or, with handle_signals, a signal arrives.
  void wait();
  // Idempotent; closes the session log with its end record.
  void stop();

  unsigned short port() const;
  Roadmap roadmap() const;
  std::optional<RecoveryReport> report() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace icebot
