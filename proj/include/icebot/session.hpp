#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "icebot/controller.hpp"
#include "icebot/error.hpp"
#include "icebot/metrics.hpp"
#include "icebot/protocol.hpp"
#include "icebot/roadmap.hpp"
#include "icebot/run_config.hpp"

namespace icebot {

// Messages produced by the session: `reply` goes back to the sender of a
// command, `broadcast` to every connected viewer.
struct Outbox {
  std::vector<protocol::WireMessage> reply;
  std::vector<protocol::WireMessage> broadcast;
};

// Drives a Controller from the wire command stream. Commands are applied
// between ticks in arrival order; jog rates are latched until replaced or
// until jog_timeout elapses. Everything that reaches the controller is
// recorded so the run can be replayed tick for tick.
class Session {
 public:
  static constexpr int kLogFormatVersion = 1;

  explicit Session(RunConfig config);
  Session(RunConfig config, Roadmap roadmap);

  // Line-delimited JSON sinks; either may be null. Set before the first
  // command or tick.
  void set_session_log(std::ostream* out);
  void set_trajectory_log(std::ostream* out);

  Outbox apply(const protocol::WireMessage& command);
  Outbox step();
  // Error addressed to one client for a message that never reached the
  // controller (unauthorized sender, bad framing); takes the next outbound seq.
  protocol::WireMessage error_reply(ErrorCode code, std::string message, std::optional<std::uint64_t> in_reply_to);
  // Closing record of the session log; a log without it is truncated.
  void finish();

  protocol::Telemetry telemetry() const;
  protocol::ViewList view_list() const;
  std::uint64_t last_applied_seq() const noexcept { return last_applied_seq_; }

  const Controller& controller() const noexcept { return controller_; }
  Controller& controller() noexcept { return controller_; }

  // Per-view error statistics of every completed recovery so far.
  std::optional<RecoveryReport> report() const;

 private:
  protocol::WireMessage outbound(protocol::Payload payload);
  void log_record(const char* type, const protocol::WireMessage* message);
  void write_trajectory(const EmSample& em);

  Controller controller_;
  std::ostream* session_log_ = nullptr;
  std::ostream* trajectory_log_ = nullptr;
  std::optional<TeleopCommand> jog_;
  std::uint64_t jog_age_ = 0;
  std::uint64_t jog_timeout_ticks_ = 1;
  std::uint64_t last_applied_seq_ = 0;
  std::uint64_t out_seq_ = 0;
  std::uint64_t last_t_us_ = 0;
  std::uint64_t telemetry_slot_ = 0;
  bool header_written_ = false;
};

struct ReplayResult {
  Roadmap roadmap;
  std::string trajectory_log;
  std::optional<RecoveryReport> report;
  std::vector<RecoveryOutcome> outcomes;
};

// Re-executes a recorded session log through a fresh stack. Throws
// VersionMismatch or TruncatedLog.
ReplayResult replay(const std::string& session_log, const RunConfig& config);

}  // namespace icebot
