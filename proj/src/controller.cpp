#include "icebot/controller.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include "icebot/error.hpp"
#include "icebot/metrics.hpp"

namespace icebot {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
// Teleop steps are capped just under epsilon so every new vertex keeps an edge
// to its predecessor despite rounding in distance().
constexpr double kStepCapFraction = 0.999;

std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

bool all_finite(const auto& values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

bool all_zero(const auto& values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::Idle: return "idle";
    case Mode::Search: return "search";
    case Mode::Execution: return "execution";
    case Mode::Completed: return "completed";
  }
  return "unknown";
}

Controller::Controller(RunConfig config) : Controller(config, Roadmap(config.epsilon)) {}

Controller::Controller(RunConfig config, Roadmap roadmap)
    : config_(std::move(config)),
      roadmap_(std::move(roadmap)),
      actuation_rng_(seeded(config_.actuation.rng_seed, 1)),
      em_rng_(seeded(config_.actuation.rng_seed, 2)) {
  config_.validate();
  if (roadmap_.epsilon() != config_.epsilon) {
    throw Error(ErrorCode::Config, "roadmap epsilon differs from the run configuration");
  }
  state_.current_q = config_.initial;
  state_.actual_q = config_.initial;
  state_.tick_rate = config_.tick_rate;
  backlash_play_ = {config_.initial.phi1, config_.initial.phi2};
}

void Controller::emit(std::string name, std::string detail) {
  events_.push_back({state_.tick, std::move(name), std::move(detail)});
}

std::vector<ControllerEvent> Controller::drain_events() {
  std::vector<ControllerEvent> out;
  out.swap(events_);
  return out;
}

const ControllerState& Controller::tick(const std::optional<TeleopCommand>& input, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidArgument, "tick: dt must be positive");
  ++state_.tick;
  state_.time += dt;
  const Configuration previous = state_.current_q;
  state_.teleop_active = false;

  bool finished = false;
  switch (state_.mode) {
    case Mode::Search:
      poll_search();
      break;
    case Mode::Execution:
      execute(dt);
      finished = state_.mode == Mode::Completed;
      break;
    case Mode::Idle:
    case Mode::Completed:
      if (input) apply_teleop(*input, dt);
      break;
  }

  update_actuation(previous);
  if (finished) finish_recovery();
  return state_;
}

void Controller::apply_teleop(const TeleopCommand& input, double dt) {
  Vector4d rates = Vector4d::Zero();
  if (const auto* knob = std::get_if<KnobJog>(&input)) {
    if (!all_finite(knob->rates)) {
      emit("invalid_command", "non-finite knob rates dropped");
      return;
    }
    if (all_zero(knob->rates)) return;
    for (std::size_t i = 0; i < kAxes; ++i) rates(static_cast<Eigen::Index>(i)) = knob->rates[i];
  } else {
    const auto& tip = std::get<TipJog>(input);
    if (!all_finite(tip.twist)) {
      emit("invalid_command", "non-finite tip twist dropped");
      return;
    }
    if (all_zero(tip.twist)) return;
    const TipPose pose = forward_kinematics(state_.current_q, config_.catheter);
    Vector6d twist;
    twist.head<3>() = pose.orientation * Eigen::Vector3d(tip.twist[0], tip.twist[1], tip.twist[2]);
    twist.tail<3>() = Eigen::Vector3d(tip.twist[3], tip.twist[4], tip.twist[5]);
    rates = tip_rates_to_joint_rates(twist, state_.current_q, config_.catheter);
  }

  state_.teleop_active = true;
  if (state_.mode == Mode::Completed) {
    state_.mode = Mode::Idle;
    emit("mode", "idle");
  }

  Configuration step;
  for (std::size_t i = 0; i < kAxes; ++i) {
    const double limit = config_.actuation.rate_limits[i];
    step[i] = std::clamp(rates(static_cast<Eigen::Index>(i)), -limit, limit) * dt;
  }
  const double length = distance(step, Configuration{});
  const double cap = kStepCapFraction * config_.epsilon;
  if (length > cap) {
    for (std::size_t i = 0; i < kAxes; ++i) step[i] *= cap / length;
  }

  Configuration next = state_.current_q;
  for (std::size_t i = 0; i < kAxes; ++i) next[i] += step[i];
  next = clamp(next, config_.limits);
  if (next == state_.current_q) return;

  // The pose the operator starts from belongs to the trace as well.
  if (roadmap_.stats().vertex_count == 0) roadmap_.observe(state_.current_q);
  state_.current_q = next;
  observe_current();
}

void Controller::observe_current() {
  const std::size_t before = roadmap_.disconnected_insertions();
  roadmap_.observe(state_.current_q);
  if (roadmap_.disconnected_insertions() != before) {
    emit("disconnected_vertex", "teleop step exceeded epsilon; vertex has no edge to its predecessor");
  }
}

void Controller::update_actuation(const Configuration& previous) {
  const auto& act = config_.actuation;
  // Backlash: play operator of width b on each knob.
  for (std::size_t k = 0; k < 2; ++k) {
    const double half = 0.5 * act.backlash[k];
    const double cmd = state_.current_q[k];
    double& out = backlash_play_[k];
    if (cmd - out > half) {
      out = cmd - half;
    } else if (out - cmd > half) {
      out = cmd + half;
    }
  }
  // Step noise is redrawn whenever an axis moves and held while it rests.
  for (std::size_t i = 0; i < kAxes; ++i) {
    if (state_.current_q[i] != previous[i] && act.noise_sigma[i] > 0.0) {
      std::normal_distribution<double> noise(0.0, act.noise_sigma[i]);
      step_noise_[i] = noise(actuation_rng_);
    }
  }
  Configuration actual = state_.current_q;
  actual.phi1 = backlash_play_[0];
  actual.phi2 = backlash_play_[1];
  for (std::size_t i = 0; i < kAxes; ++i) actual[i] += step_noise_[i];
  state_.actual_q = actual;
}

void Controller::request_recovery(const std::string& label) {
  if (state_.mode == Mode::Search || state_.mode == Mode::Execution) {
    throw Error(ErrorCode::Busy, "a recovery is already in progress");
  }
  if (!roadmap_.find_view(label)) throw Error(ErrorCode::UnknownView, "unknown view: " + label);
  const VertexId start = snap_to_roadmap(roadmap_, state_.current_q);

  if (state_.mode == Mode::Completed) {
    state_.mode = Mode::Idle;
    emit("mode", "idle");
  }
  last_recovery_error_.reset();
  state_.mode = Mode::Search;
  state_.active_view = label;
  state_.active_path.reset();
  state_.progress_index = 0;
  emit("mode", "search");

  // The search owns its own copy of the roadmap; the start vertex is pinned now.
  auto snap = snapshot();
  search_ = std::async(std::launch::async, [snap, start, label] { return plan(*snap, start, label); });
}

void Controller::poll_search() {
  if (!search_.valid()) return;
  if (config_.planner_async && search_.wait_for(std::chrono::seconds(0)) != std::future_status::ready) return;
  try {
    state_.active_path = search_.get();
  } catch (const Error& e) {
    last_recovery_error_ = e.code();
    state_.mode = Mode::Idle;
    state_.active_view.clear();
    emit("recovery_failed", e.what());
    emit("mode", "idle");
    return;
  }
  state_.mode = Mode::Execution;
  state_.progress_index = 0;
  emit("mode", "execution");
}

void Controller::execute(double dt) {
  const auto& path = *state_.active_path;
  const auto& limits = config_.actuation.rate_limits;
  double budget = dt;
  while (state_.progress_index < path.waypoints.size()) {
    const Configuration& target = path.waypoints[state_.progress_index];
    double needed = 0.0;
    for (std::size_t i = 0; i < kAxes; ++i) {
      const double d = std::abs(target[i] - state_.current_q[i]);
      if (d > 0.0) needed = std::max(needed, limits[i] > 0.0 ? d / limits[i] : INFINITY);
    }
    if (needed <= budget) {
      budget -= needed;
      state_.current_q = target;
      // Waypoints are roadmap vertices, so this re-matches and adds nothing.
      observe_current();
      ++state_.progress_index;
      continue;
    }
    if (budget <= 0.0) break;
    // Straight-line interpolation toward the waypoint at the rate limits.
    const double s = budget / needed;
    for (std::size_t i = 0; i < kAxes; ++i) state_.current_q[i] += s * (target[i] - state_.current_q[i]);
    budget = 0.0;
    break;
  }
  if (state_.progress_index >= path.waypoints.size()) {
    if (distance(state_.current_q, path.waypoints.back()) > config_.waypoint_tolerance) {
      emit("arrival_tolerance_exceeded", path.vertex_ids.empty() ? "" : std::to_string(path.vertex_ids.back()));
    }
    state_.mode = Mode::Completed;
    emit("mode", "completed");
  }
}

void Controller::finish_recovery() {
  RecoveryOutcome out;
  out.label = state_.active_view;
  out.commanded = state_.current_q;
  out.actual = state_.actual_q;
  out.true_pose = forward_kinematics(state_.actual_q, config_.catheter);
  out.em = read_em_sensor();

  TipPose reference;
  if (auto it = references_.find(out.label); it != references_.end()) {
    reference = it->second.pose;
  } else {
    // View loaded from a roadmap file: the bookmarked vertex is the reference.
    reference = forward_kinematics(roadmap_.vertex(roadmap_.find_view(out.label)->vertex_id), config_.catheter);
  }
  out.position_error = tip_position_error(out.em.pose.position, reference.position);
  out.orientation_error = orientation_error(out.em.pose.imaging_axis, reference.imaging_axis);
  outcomes_.push_back(std::move(out));
}

bool Controller::cancel() {
  if (state_.mode != Mode::Search && state_.mode != Mode::Execution) return false;
  if (search_.valid()) search_.wait();
  search_ = {};
  state_.mode = Mode::Idle;
  state_.active_path.reset();
  state_.active_view.clear();
  state_.progress_index = 0;
  emit("cancelled");
  emit("mode", "idle");
  return true;
}

const ViewBookmark& Controller::save_view(const std::string& label) {
  if (state_.mode == Mode::Search || state_.mode == Mode::Execution) {
    throw Error(ErrorCode::Busy, "cannot save a view during a recovery");
  }
  if (roadmap_.stats().vertex_count == 0) throw Error(ErrorCode::EmptyRoadmap, "empty roadmap");
  if (roadmap_.find_view(label)) throw Error(ErrorCode::DuplicateLabel, "duplicate view label: " + label);
  observe_current();
  const ViewBookmark& bookmark = roadmap_.save_view(label, state_.time);
  references_[label] = {state_.current_q, state_.actual_q, forward_kinematics(state_.actual_q, config_.catheter)};
  emit("view_saved", label);
  return bookmark;
}

EmSample Controller::read_em_sensor() {
  EmSample sample;
  sample.timestamp = state_.time;
  sample.pose = forward_kinematics(state_.actual_q, config_.catheter);
  const auto& sensor = config_.em_sensor;
  if (sensor.position_rms_mm > 0.0) {
    // Isotropic per-axis sigma so the 3-D RMS equals the configured value.
    std::normal_distribution<double> n(0.0, sensor.position_rms_mm / std::sqrt(3.0));
    for (int i = 0; i < 3; ++i) sample.pose.position(i) += n(em_rng_);
  }
  if (sensor.orientation_rms_deg > 0.0) {
    std::normal_distribution<double> unit(0.0, 1.0);
    Eigen::Vector3d axis;
    do {
      axis = Eigen::Vector3d(unit(em_rng_), unit(em_rng_), unit(em_rng_));
    } while (axis.norm() < 1e-12);
    axis.normalize();
    std::normal_distribution<double> angle(0.0, sensor.orientation_rms_deg);
    const Eigen::Matrix3d delta = Eigen::AngleAxisd(angle(em_rng_) * kDegToRad, axis).toRotationMatrix();
    sample.pose.orientation = sample.pose.orientation * delta;
    sample.pose.imaging_axis = sample.pose.orientation.col(0);
  }
  return sample;
}

}  // namespace icebot
