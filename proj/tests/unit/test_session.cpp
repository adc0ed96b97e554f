#include <algorithm>
#include <random>
#include <sstream>

#include "doctest.h"
#include "icebot/error.hpp"
#include "icebot/session.hpp"
#include "json.hpp"

using namespace icebot;
namespace proto = icebot::protocol;

namespace {

RunConfig noisy_config() {
  RunConfig c;
  c.initial = {0, 0, 0, 40};
  c.actuation.noise_sigma = {0.05, 0.05, 0.05, 0.02};
  c.actuation.backlash = {0.5, 0.5};
  return c;
}

struct Script {
  std::uint64_t seq = 0;
  proto::WireMessage msg(proto::Payload p) { return {proto::kProtocolVersion, ++seq, std::move(p)}; }
};

std::vector<std::string> telemetry_modes(const std::vector<proto::WireMessage>& out) {
  std::vector<std::string> modes;
  for (const auto& m : out) {
    if (const auto* t = std::get_if<proto::Telemetry>(&m.payload)) {
      if (modes.empty() || modes.back() != t->mode) modes.push_back(t->mode);
    }
  }
  return modes;
}

// A scripted operator session; returns the session log text.
std::string record(const RunConfig& cfg, std::uint64_t seed, std::string* roadmap_json = nullptr,
                   std::string* trajectory = nullptr) {
  std::ostringstream log, traj;
  Session s(cfg);
  s.set_session_log(&log);
  s.set_trajectory_log(&traj);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> r(-20.0, 20.0);
  Script sc;
  const char* labels[] = {"Tricuspid Valve", "Aortic Valve", "Mitral Valve"};
  for (int v = 0; v < 3; ++v) {
    for (int k = 0; k < 6; ++k) {
      s.apply(sc.msg(proto::JogKnob{{r(rng), r(rng), r(rng), r(rng) / 2}}));
      for (int t = 0; t < 8; ++t) s.step();
    }
    s.apply(sc.msg(proto::JogKnob{}));
    s.step();
    s.apply(sc.msg(proto::SaveView{labels[v]}));
  }
  s.apply(sc.msg(proto::RecoverView{"Aortic Valve"}));
  for (int t = 0; t < 600 && s.controller().state().mode != Mode::Completed; ++t) s.step();
  s.apply(sc.msg(proto::RecoverView{"Tricuspid Valve"}));
  for (int t = 0; t < 600 && s.controller().state().mode != Mode::Completed; ++t) s.step();
  for (int t = 0; t < 3; ++t) s.step();
  s.finish();
  if (roadmap_json) *roadmap_json = s.controller().roadmap().to_json();
  if (trajectory) *trajectory = traj.str();
  return log.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("save_view on an empty roadmap is answered with an error") {
  Session s{RunConfig{}};
  Script sc;
  const auto box = s.apply(sc.msg(proto::SaveView{"TV"}));
  REQUIRE(box.reply.size() == 1);
  const auto* err = std::get_if<proto::ErrorReply>(&box.reply[0].payload);
  REQUIRE(err);
  CHECK(err->code == "empty_roadmap");
  CHECK(err->message == "empty roadmap");
  CHECK(err->in_reply_to == std::uint64_t{1});
  // the session keeps going
  s.apply(sc.msg(proto::JogKnob{{10, 0, 0, 0}}));
  s.step();
  const auto ok = s.apply(sc.msg(proto::SaveView{"TV"}));
  CHECK(ok.reply.empty());
  REQUIRE(ok.broadcast.size() >= 1);
  CHECK(std::holds_alternative<proto::ViewList>(ok.broadcast[0].payload));
}

TEST_CASE("telemetry shows idle, search, execution, completed") {
  Session s{RunConfig{}};
  Script sc;
  std::vector<proto::WireMessage> seen;
  auto take = [&](Outbox box) {
    for (auto& m : box.broadcast) seen.push_back(std::move(m));
  };
  s.apply(sc.msg(proto::JogKnob{{10, 0, 0, 0}}));
  for (int i = 0; i < 10; ++i) take(s.step());
  take(s.apply(sc.msg(proto::SaveView{"AV"})));
  take(s.apply(sc.msg(proto::JogKnob{{0, 10, 0, 5}})));
  for (int i = 0; i < 20; ++i) take(s.step());
  take(s.apply(sc.msg(proto::RecoverView{"AV"})));
  for (int i = 0; i < 300; ++i) take(s.step());
  auto modes = telemetry_modes(seen);
  CHECK(modes == std::vector<std::string>{"idle", "search", "execution", "completed"});
  // telemetry acknowledges the last applied command
  const auto last = std::find_if(seen.rbegin(), seen.rend(), [](const auto& m) {
    return std::holds_alternative<proto::Telemetry>(m.payload);
  });
  CHECK(std::get<proto::Telemetry>(last->payload).last_applied_seq == sc.seq);
  // outbound sequence numbers increase
  for (std::size_t i = 1; i < seen.size(); ++i) CHECK(seen[i].seq > seen[i - 1].seq);
}

TEST_CASE("telemetry is decimated to the configured rate") {
  Session s{RunConfig{}};
  int count = 0;
  for (int i = 0; i < 500; ++i) {
    for (const auto& m : s.step().broadcast) count += std::holds_alternative<proto::Telemetry>(m.payload);
  }
  CHECK(count == 200);  // 10 s at 20 Hz
}

TEST_CASE("jog rates latch until the deadman timeout") {
  Session s{RunConfig{}};
  Script sc;
  s.apply(sc.msg(proto::JogKnob{{10, 0, 0, 0}}));
  for (int i = 0; i < 100; ++i) s.step();
  // 0.5 s at 50 Hz -> 25 ticks of 0.2 degrees
  CHECK(s.controller().state().current_q.phi1 == doctest::Approx(5.0));
}

TEST_CASE("non-command messages from a client are refused") {
  Session s{RunConfig{}};
  const auto box = s.apply({1, 1, proto::Telemetry{}});
  REQUIRE(box.reply.size() == 1);
  CHECK(std::get<proto::ErrorReply>(box.reply[0].payload).code == "protocol");
}

TEST_CASE("session log records are ordered and complete") {
  const std::string log = record(noisy_config(), 81);
  const auto lines = lines_of(log);
  REQUIRE(lines.size() > 3);
  auto header = nlohmann::json::parse(lines.front());
  CHECK(header["type"] == "header");
  std::uint64_t last = 0;
  int commands = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto r = nlohmann::json::parse(lines[i]);
    const auto t = r["t_us"].get<std::uint64_t>();
    if (i > 1) CHECK(t > last);
    last = t;
    commands += r["type"] == "command";
  }
  CHECK(commands == 26);
  CHECK(nlohmann::json::parse(lines.back())["type"] == "end");
}

TEST_CASE("replay reproduces the roadmap byte for byte") {
  std::string original_map, original_traj;
  const std::string log = record(noisy_config(), 82, &original_map, &original_traj);
  const ReplayResult r = replay(log, noisy_config());
  CHECK(r.roadmap.to_json() == original_map);
  CHECK(r.trajectory_log == original_traj);
  REQUIRE(r.report.has_value());
  CHECK(r.outcomes.size() == 2);
  const ReplayResult again = replay(log, noisy_config());
  CHECK(again.report->to_json() == r.report->to_json());
}

TEST_CASE("replay with another seed keeps the roadmap, changes the actual trace") {
  std::string original_map, original_traj;
  const std::string log = record(noisy_config(), 83, &original_map, &original_traj);
  RunConfig other = noisy_config();
  other.actuation.rng_seed = 99;
  const ReplayResult r = replay(log, other);
  CHECK(r.roadmap.to_json() == original_map);
  CHECK(r.trajectory_log != original_traj);
  const auto a = lines_of(r.trajectory_log), b = lines_of(original_traj);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); i += 37) {
    const auto ja = nlohmann::json::parse(a[i]), jb = nlohmann::json::parse(b[i]);
    CHECK(ja["current_q"] == jb["current_q"]);
  }
}

TEST_CASE("replay with more backlash gives larger recovery errors") {
  RunConfig base = noisy_config();
  base.actuation.noise_sigma = {0, 0, 0, 0};
  base.actuation.backlash = {0, 0};
  base.em_sensor = {0, 0};
  const std::string log = record(base, 84);
  RunConfig loose = base;
  loose.actuation.backlash = {4.0, 4.0};
  const auto tight = replay(log, base);
  const auto slack = replay(log, loose);
  CHECK(tight.report->overall_position.mean == doctest::Approx(0.0));
  CHECK(slack.report->overall_position.mean > tight.report->overall_position.mean);
}

TEST_CASE("replay rejects broken logs") {
  const std::string log = record(noisy_config(), 85);
  auto code_of = [](const std::string& text) {
    try {
      replay(text, noisy_config());
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code_of("") == ErrorCode::TruncatedLog);
  auto lines = lines_of(log);
  std::string cut;
  for (std::size_t i = 0; i + 1 < lines.size(); ++i) cut += lines[i] + "\n";
  CHECK(code_of(cut) == ErrorCode::TruncatedLog);
  CHECK(code_of(log.substr(0, log.size() / 2)) == ErrorCode::TruncatedLog);
  std::string bumped = log;
  bumped.replace(bumped.find("\"format_version\":1"), 18, "\"format_version\":7");
  CHECK(code_of(bumped) == ErrorCode::VersionMismatch);
}
