#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "icebot/config.hpp"
#include "icebot/roadmap.hpp"

namespace icebot::protocol {

inline constexpr int kProtocolVersion = 1;

struct JogKnob {
  std::array<double, kAxes> rates{};
  friend bool operator==(const JogKnob&, const JogKnob&) = default;
};

struct JogTip {
  std::array<double, 6> twist{};
  friend bool operator==(const JogTip&, const JogTip&) = default;
};

struct SaveView {
  std::string label;
  friend bool operator==(const SaveView&, const SaveView&) = default;
};

struct RecoverView {
  std::string label;
  friend bool operator==(const RecoverView&, const RecoverView&) = default;
};

struct Cancel {
  friend bool operator==(const Cancel&, const Cancel&) = default;
};

struct RecoveryProgress {
  std::string label;
  std::uint64_t index = 0;
  std::uint64_t total = 0;
  double remaining_cost = 0.0;
  friend bool operator==(const RecoveryProgress&, const RecoveryProgress&) = default;
};

struct Telemetry {
  std::uint64_t tick = 0;
  double time = 0.0;
  std::string mode;
  bool teleop_active = false;
  std::array<double, kAxes> current_q{};
  std::array<double, kAxes> actual_q{};
  std::array<double, 3> tip_position{};
  std::array<double, 9> tip_orientation{};  // row-major
  std::array<double, 3> imaging_axis{};
  RoadmapStats roadmap;
  std::optional<RecoveryProgress> recovery;
  std::uint64_t last_applied_seq = 0;
  friend bool operator==(const Telemetry&, const Telemetry&) = default;
};

struct ViewList {
  std::vector<ViewBookmark> views;
  friend bool operator==(const ViewList&, const ViewList&) = default;
};

struct Event {
  std::string name;
  std::string detail;
  friend bool operator==(const Event&, const Event&) = default;
};

struct ErrorReply {
  std::string code;
  std::string message;
  std::optional<std::uint64_t> in_reply_to;
  friend bool operator==(const ErrorReply&, const ErrorReply&) = default;
};

using Payload = std::variant<JogKnob, JogTip, SaveView, RecoverView, Cancel, Telemetry, ViewList, Event, ErrorReply>;

struct WireMessage {
  int protocol_version = kProtocolVersion;
  std::uint64_t seq = 0;
  Payload payload;

  std::string_view kind() const;
  bool is_command() const;
  friend bool operator==(const WireMessage&, const WireMessage&) = default;
};

// One JSON object: {protocol_version, seq, kind, payload}.
std::string encode(const WireMessage& message);

// Throws Error(Protocol) on malformed text, unknown kinds, bad payloads or a
// protocol_version other than 1.
WireMessage decode(std::string_view text);

}  // namespace icebot::protocol
