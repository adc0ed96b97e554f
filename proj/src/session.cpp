#include "icebot/session.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "icebot/error.hpp"
#include "json.hpp"

namespace icebot {

using ordered_json = nlohmann::ordered_json;
namespace proto = icebot::protocol;

Session::Session(RunConfig config) : Session(config, Roadmap(config.epsilon)) {}

Session::Session(RunConfig config, Roadmap roadmap) : controller_(std::move(config), std::move(roadmap)) {
  const auto& cfg = controller_.config();
  jog_timeout_ticks_ = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(cfg.jog_timeout * cfg.tick_rate)));
}

void Session::set_session_log(std::ostream* out) { session_log_ = out; }
void Session::set_trajectory_log(std::ostream* out) { trajectory_log_ = out; }

proto::WireMessage Session::outbound(proto::Payload payload) {
  return {proto::kProtocolVersion, ++out_seq_, std::move(payload)};
}

void Session::log_record(const char* type, const proto::WireMessage* message) {
  if (!session_log_) return;
  const auto& cfg = controller_.config();
  if (!header_written_) {
    ordered_json h;
    h["type"] = "header";
    h["format_version"] = kLogFormatVersion;
    h["protocol_version"] = proto::kProtocolVersion;
    h["tick_rate"] = cfg.tick_rate;
    *session_log_ << h.dump() << '\n';
    header_written_ = true;
  }
  const std::uint64_t tick = controller_.state().tick;
  const auto tick_us = static_cast<std::uint64_t>(std::llround(static_cast<double>(tick) * 1e6 / cfg.tick_rate));
  last_t_us_ = std::max(last_t_us_ + 1, tick_us);
  ordered_json r;
  r["type"] = type;
  r["t_us"] = last_t_us_;
  r["tick"] = tick;
  if (message) r["message"] = ordered_json::parse(proto::encode(*message));
  *session_log_ << r.dump() << '\n';
}

Outbox Session::apply(const proto::WireMessage& command) {
  Outbox box;
  if (!command.is_command()) {
    box.reply.push_back(
        outbound(proto::ErrorReply{std::string(to_string(ErrorCode::Protocol)),
                                   "not a command: " + std::string(command.kind()), command.seq}));
    return box;
  }
  log_record("command", &command);
  last_applied_seq_ = command.seq;

  try {
    if (const auto* knob = std::get_if<proto::JogKnob>(&command.payload)) {
      jog_ = KnobJog{knob->rates};
      jog_age_ = 0;
    } else if (const auto* tip = std::get_if<proto::JogTip>(&command.payload)) {
      jog_ = TipJog{tip->twist};
      jog_age_ = 0;
    } else if (const auto* save = std::get_if<proto::SaveView>(&command.payload)) {
      controller_.save_view(save->label);
      box.broadcast.push_back(outbound(view_list()));
    } else if (const auto* recover = std::get_if<proto::RecoverView>(&command.payload)) {
      jog_.reset();
      controller_.request_recovery(recover->label);
    } else if (std::holds_alternative<proto::Cancel>(command.payload)) {
      controller_.cancel();
    }
  } catch (const Error& e) {
    box.reply.push_back(outbound(proto::ErrorReply{std::string(to_string(e.code())), e.what(), command.seq}));
  }

  // Mode changes made by the command itself are announced right away.
  bool mode_changed = false;
  for (auto& ev : controller_.drain_events()) {
    mode_changed |= ev.name == "mode";
    box.broadcast.push_back(outbound(proto::Event{ev.name, ev.detail}));
  }
  if (mode_changed) box.broadcast.push_back(outbound(telemetry()));
  return box;
}

Outbox Session::step() {
  Outbox box;
  std::optional<TeleopCommand> input;
  if (jog_ && jog_age_ < jog_timeout_ticks_) input = jog_;
  ++jog_age_;

  controller_.tick(input);
  const EmSample em = controller_.read_em_sensor();
  write_trajectory(em);

  bool mode_changed = false;
  for (auto& ev : controller_.drain_events()) {
    mode_changed |= ev.name == "mode";
    box.broadcast.push_back(outbound(proto::Event{ev.name, ev.detail}));
  }

  const auto& cfg = controller_.config();
  const auto slot = static_cast<std::uint64_t>(
      std::floor(static_cast<double>(controller_.state().tick) * cfg.telemetry_rate / cfg.tick_rate));
  if (mode_changed || slot != telemetry_slot_) {
    telemetry_slot_ = slot;
    auto msg = outbound(telemetry());
    log_record("telemetry", &msg);
    box.broadcast.push_back(std::move(msg));
  }
  return box;
}

proto::WireMessage Session::error_reply(ErrorCode code, std::string message, std::optional<std::uint64_t> in_reply_to) {
  return outbound(proto::ErrorReply{std::string(to_string(code)), std::move(message), in_reply_to});
}

void Session::finish() {
  log_record("end", nullptr);
  if (session_log_) session_log_->flush();
  if (trajectory_log_) trajectory_log_->flush();
}

proto::Telemetry Session::telemetry() const {
  const auto& s = controller_.state();
  proto::Telemetry t;
  t.tick = s.tick;
  t.time = s.time;
  t.mode = std::string(to_string(s.mode));
  t.teleop_active = s.teleop_active;
  t.current_q = s.current_q.to_array();
  t.actual_q = s.actual_q.to_array();
  const TipPose pose = forward_kinematics(s.actual_q, controller_.config().catheter);
  t.tip_position = {pose.position.x(), pose.position.y(), pose.position.z()};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) t.tip_orientation[static_cast<std::size_t>(3 * r + c)] = pose.orientation(r, c);
  }
  t.imaging_axis = {pose.imaging_axis.x(), pose.imaging_axis.y(), pose.imaging_axis.z()};
  t.roadmap = controller_.roadmap().stats();
  if (s.active_path && (s.mode == Mode::Execution || s.mode == Mode::Completed)) {
    const auto& wps = s.active_path->waypoints;
    double remaining = 0.0;
    if (s.progress_index < wps.size()) {
      remaining = distance(s.current_q, wps[s.progress_index]);
      for (std::size_t i = s.progress_index + 1; i < wps.size(); ++i) remaining += distance(wps[i - 1], wps[i]);
    }
    t.recovery = proto::RecoveryProgress{s.active_view, s.progress_index, wps.size(), remaining};
  } else if (s.mode == Mode::Search) {
    t.recovery = proto::RecoveryProgress{s.active_view, 0, 0, 0.0};
  }
  t.last_applied_seq = last_applied_seq_;
  return t;
}

proto::ViewList Session::view_list() const { return {controller_.roadmap().views()}; }

void Session::write_trajectory(const EmSample& em) {
  if (!trajectory_log_) return;
  const auto& s = controller_.state();
  ordered_json r;
  r["tick"] = s.tick;
  r["mode"] = to_string(s.mode);
  r["current_q"] = s.current_q.to_array();
  r["actual_q"] = s.actual_q.to_array();
  r["em_sample"] = {{"t", em.timestamp},
                    {"position", {em.pose.position.x(), em.pose.position.y(), em.pose.position.z()}},
                    {"imaging_axis", {em.pose.imaging_axis.x(), em.pose.imaging_axis.y(), em.pose.imaging_axis.z()}}};
  *trajectory_log_ << r.dump() << '\n';
}

std::optional<RecoveryReport> Session::report() const {
  const auto& outcomes = controller_.outcomes();
  if (outcomes.empty()) return std::nullopt;
  std::vector<ErrorSample> samples;
  samples.reserve(outcomes.size());
  for (const auto& o : outcomes) samples.push_back({o.label, o.position_error, o.orientation_error});
  return build_report(samples);
}

ReplayResult replay(const std::string& session_log, const RunConfig& config) {
  std::istringstream in(session_log);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::TruncatedLog, "session log is empty");

  ordered_json header;
  try {
    header = ordered_json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::TruncatedLog, "session log header unreadable");
  }
  if (header.value("type", "") != "header" || header.value("format_version", -1) != Session::kLogFormatVersion ||
      header.value("protocol_version", -1) != proto::kProtocolVersion) {
    throw Error(ErrorCode::VersionMismatch, "session log version mismatch");
  }

  Session session(config);
  std::ostringstream trajectory;
  session.set_trajectory_log(&trajectory);

  auto run_to = [&](std::uint64_t tick) {
    while (session.controller().state().tick < tick) session.step();
  };

  bool ended = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ordered_json rec;
    try {
      rec = ordered_json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::TruncatedLog, "session log record unreadable");
    }
    const auto type = rec.value("type", "");
    const auto tick = rec.value("tick", std::uint64_t{0});
    if (type == "command") {
      run_to(tick);
      session.apply(proto::decode(rec.at("message").dump()));
    } else if (type == "end") {
      run_to(tick);
      ended = true;
      break;
    }
  }
  if (!ended) throw Error(ErrorCode::TruncatedLog, "session log has no end record");
  session.finish();

  return {session.controller().roadmap(), trajectory.str(), session.report(), session.controller().outcomes()};
}

}  // namespace icebot
