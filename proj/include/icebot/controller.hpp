#pragma once

#include <array>
#include <cstdint>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "icebot/catheter.hpp"
#include "icebot/config.hpp"
#include "icebot/error.hpp"
#include "icebot/planner.hpp"
#include "icebot/roadmap.hpp"
#include "icebot/run_config.hpp"

namespace icebot {

enum class Mode { Idle, Search, Execution, Completed };

std::string_view to_string(Mode mode);

// Knob-space jog: rates for (phi1, phi2, phi3, d4) in units per second.
struct KnobJog {
  std::array<double, kAxes> rates{};
};

// Tip-frame jog: linear mm/s then angular deg/s, both in the current tip frame.
struct TipJog {
  std::array<double, 6> twist{};
};

using TeleopCommand = std::variant<KnobJog, TipJog>;

struct EmSample {
  TipPose pose;
  double timestamp = 0.0;  // simulation seconds
};

struct ControllerState {
  Mode mode = Mode::Idle;
  bool teleop_active = false;
  Configuration current_q;  // commanded
  Configuration actual_q;   // after backlash and step noise
  std::optional<RecoveryPath> active_path;
  std::string active_view;
  std::size_t progress_index = 0;  // next waypoint to reach
  std::uint64_t tick = 0;
  double tick_rate = 50.0;
  double time = 0.0;
};

struct ControllerEvent {
  std::uint64_t tick = 0;
  std::string name;
  std::string detail;
};

// Ground truth captured when a view is saved; recoveries are scored against it.
struct ViewReference {
  Configuration commanded;
  Configuration actual;
  TipPose pose;
};

struct RecoveryOutcome {
  std::string label;
  Configuration commanded;
  Configuration actual;
  TipPose true_pose;
  EmSample em;
  double position_error = 0.0;     // EM reading vs reference pose, mm
  double orientation_error = 0.0;  // imaging axes, degrees
};

// The control loop: teleoperation, the recovery state machine
// (idle -> search -> execution -> completed, cancel back to idle), roadmap
// construction and the emulated EM tracker. Single owner; not thread-safe.
class Controller {
 public:
  explicit Controller(RunConfig config);
  Controller(RunConfig config, Roadmap roadmap);

  Controller(const Controller&) = delete;
  Controller& operator=(const Controller&) = delete;

  const ControllerState& tick(const std::optional<TeleopCommand>& input, double dt);
  const ControllerState& tick(const std::optional<TeleopCommand>& input = std::nullopt) {
    return tick(input, 1.0 / config_.tick_rate);
  }

  // Busy unless idle or completed. Unknown views and off-roadmap starts are
  // rejected before the search starts; planner failures surface on a later
  // tick as a "recovery_failed" event with the mode back at idle.
  void request_recovery(const std::string& label);

  // Returns false (no-op) unless a recovery is searching or executing.
  bool cancel();

  // Bookmarks the commanded configuration. EmptyRoadmap before any motion;
  // Busy during a recovery.
  const ViewBookmark& save_view(const std::string& label);

  EmSample read_em_sensor();

  const ControllerState& state() const noexcept { return state_; }
  const Roadmap& roadmap() const noexcept { return roadmap_; }
  std::shared_ptr<const Roadmap> snapshot() const { return std::make_shared<const Roadmap>(roadmap_); }
  const RunConfig& config() const noexcept { return config_; }
  const std::map<std::string, ViewReference>& references() const noexcept { return references_; }
  const std::vector<RecoveryOutcome>& outcomes() const noexcept { return outcomes_; }
  std::optional<ErrorCode> last_recovery_error() const noexcept { return last_recovery_error_; }

  std::vector<ControllerEvent> drain_events();

 private:
  void emit(std::string name, std::string detail = {});
  void apply_teleop(const TeleopCommand& input, double dt);
  void poll_search();
  void execute(double dt);
  void finish_recovery();
  void update_actuation(const Configuration& previous);
  void observe_current();

  RunConfig config_;
  Roadmap roadmap_;
  ControllerState state_;
  std::array<double, 2> backlash_play_{};
  std::array<double, kAxes> step_noise_{};
  std::mt19937_64 actuation_rng_;
  std::mt19937_64 em_rng_;
  std::future<RecoveryPath> search_;
  std::map<std::string, ViewReference> references_;
  std::vector<RecoveryOutcome> outcomes_;
  std::vector<ControllerEvent> events_;
  std::optional<ErrorCode> last_recovery_error_;
};

}  // namespace icebot
