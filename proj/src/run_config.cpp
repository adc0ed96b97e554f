#include "icebot/run_config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "icebot/error.hpp"
#include "json.hpp"

namespace icebot {

using ordered_json = nlohmann::ordered_json;

void ActuationModel::validate() const {
  for (double b : backlash) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw Error(ErrorCode::Config, "backlash must be non-negative");
  }
  for (double s : noise_sigma) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw Error(ErrorCode::Config, "noise_sigma must be non-negative");
  }
  for (double r : rate_limits) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw Error(ErrorCode::Config, "rate_limits must be non-negative");
  }
}

void RunConfig::validate() const {
  if (!(tick_rate > 0.0) || !std::isfinite(tick_rate)) throw Error(ErrorCode::Config, "tick_rate must be positive");
  if (!(telemetry_rate > 0.0) || telemetry_rate > tick_rate) {
    throw Error(ErrorCode::Config, "telemetry_rate must be in (0, tick_rate]");
  }
  if (port < 0 || port > 65535) throw Error(ErrorCode::Config, "port out of range");
  if (!(jog_timeout > 0.0)) throw Error(ErrorCode::Config, "jog_timeout must be positive");
  if (!(waypoint_tolerance >= 0.0)) throw Error(ErrorCode::Config, "waypoint_tolerance must be non-negative");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw Error(ErrorCode::Config, "epsilon must be positive");
  limits.validate();
  if (!initial.is_finite() || !limits.contains(initial)) {
    throw Error(ErrorCode::Config, "initial configuration outside joint limits");
  }
  actuation.validate();
  if (!(em_sensor.position_rms_mm >= 0.0) || !(em_sensor.orientation_rms_deg >= 0.0)) {
    throw Error(ErrorCode::Config, "EM sensor noise must be non-negative");
  }
  catheter.validate();

  double step_sq = 0.0;
  for (double r : actuation.rate_limits) step_sq += (r / tick_rate) * (r / tick_rate);
  if (std::sqrt(step_sq) > epsilon) {
    throw Error(ErrorCode::Config, "rate_limits allow more than epsilon of motion per tick");
  }
}

std::string RunConfig::to_json() const {
  ordered_json doc;
  doc["format_version"] = kFormatVersion;
  doc["tick_rate"] = tick_rate;
  doc["telemetry_rate"] = telemetry_rate;
  doc["port"] = port;
  doc["jog_timeout"] = jog_timeout;
  doc["waypoint_tolerance"] = waypoint_tolerance;
  doc["planner_async"] = planner_async;
  doc["epsilon"] = epsilon;
  doc["rng_seed"] = actuation.rng_seed;
  doc["initial_configuration"] = initial.to_array();
  doc["rate_limits"] = actuation.rate_limits;
  doc["actuation"] = {{"backlash", actuation.backlash}, {"noise_sigma", actuation.noise_sigma}};
  doc["em_sensor"] = {{"position_rms_mm", em_sensor.position_rms_mm},
                      {"orientation_rms_deg", em_sensor.orientation_rms_deg}};
  doc["catheter"] = {{"bend_length", catheter.bend_length},
                     {"knob_gain", catheter.knob_gain},
                     {"shaft_offset", catheter.shaft_offset}};
  ordered_json lim;
  const char* names[kAxes] = {"phi1", "phi2", "phi3", "d4"};
  for (std::size_t i = 0; i < kAxes; ++i) lim[names[i]] = {limits.axes[i].lo, limits.axes[i].hi};
  doc["joint_limits"] = std::move(lim);
  return doc.dump(2) + "\n";
}

RunConfig RunConfig::from_json(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, std::string("config: malformed JSON: ") + e.what());
  }
  RunConfig cfg;
  try {
    if (doc.value("format_version", kFormatVersion) != kFormatVersion) {
      throw Error(ErrorCode::VersionMismatch, "config: unsupported format_version");
    }
    // Every field is optional; missing ones keep their defaults.
    cfg.tick_rate = doc.value("tick_rate", cfg.tick_rate);
    cfg.telemetry_rate = doc.value("telemetry_rate", cfg.telemetry_rate);
    cfg.port = doc.value("port", cfg.port);
    cfg.jog_timeout = doc.value("jog_timeout", cfg.jog_timeout);
    cfg.waypoint_tolerance = doc.value("waypoint_tolerance", cfg.waypoint_tolerance);
    cfg.planner_async = doc.value("planner_async", cfg.planner_async);
    cfg.epsilon = doc.value("epsilon", cfg.epsilon);
    cfg.actuation.rng_seed = doc.value("rng_seed", cfg.actuation.rng_seed);
    if (doc.contains("initial_configuration")) {
      cfg.initial = Configuration::from_array(doc["initial_configuration"].get<std::array<double, kAxes>>());
    }
    cfg.actuation.rate_limits = doc.value("rate_limits", cfg.actuation.rate_limits);
    if (doc.contains("actuation")) {
      const auto& a = doc["actuation"];
      cfg.actuation.backlash = a.value("backlash", cfg.actuation.backlash);
      cfg.actuation.noise_sigma = a.value("noise_sigma", cfg.actuation.noise_sigma);
    }
    if (doc.contains("em_sensor")) {
      const auto& e = doc["em_sensor"];
      cfg.em_sensor.position_rms_mm = e.value("position_rms_mm", cfg.em_sensor.position_rms_mm);
      cfg.em_sensor.orientation_rms_deg = e.value("orientation_rms_deg", cfg.em_sensor.orientation_rms_deg);
    }
    if (doc.contains("catheter")) {
      const auto& c = doc["catheter"];
      cfg.catheter.bend_length = c.value("bend_length", cfg.catheter.bend_length);
      cfg.catheter.knob_gain = c.value("knob_gain", cfg.catheter.knob_gain);
      cfg.catheter.shaft_offset = c.value("shaft_offset", cfg.catheter.shaft_offset);
    }
    if (doc.contains("joint_limits")) {
      const char* names[kAxes] = {"phi1", "phi2", "phi3", "d4"};
      for (std::size_t i = 0; i < kAxes; ++i) {
        if (doc["joint_limits"].contains(names[i])) {
          const auto v = doc["joint_limits"][names[i]].get<std::array<double, 2>>();
          cfg.limits.axes[i] = {v[0], v[1]};
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, std::string("config: bad field: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace icebot
