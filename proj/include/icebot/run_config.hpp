#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "icebot/catheter.hpp"
#include "icebot/config.hpp"

namespace icebot {

struct ActuationModel {
  std::array<double, 2> backlash{0.0, 0.0};              // deadband width per knob, degrees
  std::array<double, kAxes> noise_sigma{0.0, 0.0, 0.0, 0.0};  // per-axis step noise, axis units
  std::array<double, kAxes> rate_limits{20.0, 20.0, 20.0, 10.0};  // units per second
  std::uint64_t rng_seed = 1;

  void validate() const;
};

struct EmSensorModel {
  double position_rms_mm = 1.4;
  double orientation_rms_deg = 0.5;
};

struct RunConfig {
  static constexpr int kFormatVersion = 1;

  double tick_rate = 50.0;       // Hz
  double telemetry_rate = 20.0;  // Hz
  int port = 8765;
  double jog_timeout = 0.5;      // s without a jog refresh before rates drop to zero
  double waypoint_tolerance = 1e-3;
  bool planner_async = false;    // poll the planner instead of joining it on the next tick
  double epsilon = 1.0;
  Configuration initial{0.0, 0.0, 0.0, 0.0};
  JointLimits limits;
  ActuationModel actuation;
  EmSensorModel em_sensor;
  CatheterParams catheter;

  // Also rejects rate limits that allow a single tick to move farther than
  // epsilon, which would leave gaps in the roadmap.
  void validate() const;

  std::string to_json() const;
  static RunConfig from_json(const std::string& text);
  static RunConfig load(const std::string& path);
};

}  // namespace icebot
