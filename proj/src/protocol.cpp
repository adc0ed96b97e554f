#include "icebot/protocol.hpp"

#include <cmath>

#include "icebot/error.hpp"
#include "json.hpp"

namespace icebot::protocol {

using ordered_json = nlohmann::ordered_json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr std::string_view kKinds[] = {"jog_knob",  "jog_tip",   "save_view", "recover_view", "cancel",
                                       "telemetry", "view_list", "event",     "error"};

ordered_json payload_json(const Payload& payload) {
  return std::visit(
      Overloaded{
          [](const JogKnob& m) { return ordered_json{{"rates", m.rates}}; },
          [](const JogTip& m) { return ordered_json{{"twist", m.twist}}; },
          [](const SaveView& m) { return ordered_json{{"label", m.label}}; },
          [](const RecoverView& m) { return ordered_json{{"label", m.label}}; },
          [](const Cancel&) { return ordered_json::object(); },
          [](const Telemetry& m) {
            ordered_json j;
            j["tick"] = m.tick;
            j["time"] = m.time;
            j["mode"] = m.mode;
            j["teleop_active"] = m.teleop_active;
            j["current_q"] = m.current_q;
            j["actual_q"] = m.actual_q;
            j["tip"] = {{"position", m.tip_position},
                        {"orientation", m.tip_orientation},
                        {"imaging_axis", m.imaging_axis}};
            j["roadmap"] = {{"vertex_count", m.roadmap.vertex_count},
                            {"edge_count", m.roadmap.edge_count},
                            {"view_count", m.roadmap.view_count}};
            if (m.recovery) {
              j["recovery"] = {{"label", m.recovery->label},
                               {"index", m.recovery->index},
                               {"total", m.recovery->total},
                               {"remaining_cost", m.recovery->remaining_cost}};
            } else {
              j["recovery"] = nullptr;
            }
            j["last_applied_seq"] = m.last_applied_seq;
            return j;
          },
          [](const ViewList& m) {
            auto views = ordered_json::array();
            for (const auto& v : m.views) {
              views.push_back({{"label", v.label}, {"vertex_id", v.vertex_id}, {"saved_at", v.saved_at}});
            }
            return ordered_json{{"views", std::move(views)}};
          },
          [](const Event& m) { return ordered_json{{"name", m.name}, {"detail", m.detail}}; },
          [](const ErrorReply& m) {
            ordered_json j{{"code", m.code}, {"message", m.message}};
            j["in_reply_to"] = m.in_reply_to ? ordered_json(*m.in_reply_to) : ordered_json(nullptr);
            return j;
          },
      },
      payload);
}

template <std::size_t N>
std::array<double, N> finite_array(const ordered_json& j) {
  auto v = j.get<std::array<double, N>>();
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorCode::Protocol, "non-finite number in payload");
  }
  return v;
}

std::string non_empty_label(const ordered_json& p) {
  auto label = p.at("label").get<std::string>();
  if (label.empty()) throw Error(ErrorCode::Protocol, "empty label");
  return label;
}

Payload parse_payload(std::string_view kind, const ordered_json& p) {
  if (kind == "jog_knob") return JogKnob{finite_array<kAxes>(p.at("rates"))};
  if (kind == "jog_tip") return JogTip{finite_array<6>(p.at("twist"))};
  if (kind == "save_view") return SaveView{non_empty_label(p)};
  if (kind == "recover_view") return RecoverView{non_empty_label(p)};
  if (kind == "cancel") return Cancel{};
  if (kind == "telemetry") {
    Telemetry t;
    t.tick = p.at("tick").get<std::uint64_t>();
    t.time = p.at("time").get<double>();
    t.mode = p.at("mode").get<std::string>();
    t.teleop_active = p.at("teleop_active").get<bool>();
    t.current_q = p.at("current_q").get<std::array<double, kAxes>>();
    t.actual_q = p.at("actual_q").get<std::array<double, kAxes>>();
    const auto& tip = p.at("tip");
    t.tip_position = tip.at("position").get<std::array<double, 3>>();
    t.tip_orientation = tip.at("orientation").get<std::array<double, 9>>();
    t.imaging_axis = tip.at("imaging_axis").get<std::array<double, 3>>();
    const auto& rm = p.at("roadmap");
    t.roadmap = {rm.at("vertex_count").get<std::size_t>(), rm.at("edge_count").get<std::size_t>(),
                 rm.at("view_count").get<std::size_t>()};
    if (const auto& r = p.at("recovery"); !r.is_null()) {
      t.recovery = RecoveryProgress{r.at("label").get<std::string>(), r.at("index").get<std::uint64_t>(),
                                    r.at("total").get<std::uint64_t>(), r.at("remaining_cost").get<double>()};
    }
    t.last_applied_seq = p.at("last_applied_seq").get<std::uint64_t>();
    return t;
  }
  if (kind == "view_list") {
    ViewList list;
    for (const auto& v : p.at("views")) {
      list.views.push_back(
          {v.at("label").get<std::string>(), v.at("vertex_id").get<VertexId>(), v.at("saved_at").get<double>()});
    }
    return list;
  }
  if (kind == "event") return Event{p.at("name").get<std::string>(), p.at("detail").get<std::string>()};
  if (kind == "error") {
    ErrorReply e{p.at("code").get<std::string>(), p.at("message").get<std::string>(), std::nullopt};
    if (p.contains("in_reply_to") && !p["in_reply_to"].is_null()) e.in_reply_to = p["in_reply_to"].get<std::uint64_t>();
    return e;
  }
  throw Error(ErrorCode::Protocol, "unknown message kind: " + std::string(kind));
}

}  // namespace

std::string_view WireMessage::kind() const { return kKinds[payload.index()]; }

bool WireMessage::is_command() const {
  return std::holds_alternative<JogKnob>(payload) || std::holds_alternative<JogTip>(payload) ||
         std::holds_alternative<SaveView>(payload) || std::holds_alternative<RecoverView>(payload) ||
         std::holds_alternative<Cancel>(payload);
}

std::string encode(const WireMessage& message) {
  ordered_json j;
  j["protocol_version"] = message.protocol_version;
  j["seq"] = message.seq;
  j["kind"] = message.kind();
  j["payload"] = payload_json(message.payload);
  return j.dump();
}

WireMessage decode(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Protocol, std::string("malformed message: ") + e.what());
  }
  try {
    if (!j.is_object()) throw Error(ErrorCode::Protocol, "message must be a JSON object");
    WireMessage m;
    m.protocol_version = j.at("protocol_version").get<int>();
    if (m.protocol_version != kProtocolVersion) {
      throw Error(ErrorCode::Protocol, "unsupported protocol_version " + std::to_string(m.protocol_version));
    }
    if (!j.at("seq").is_number_unsigned()) throw Error(ErrorCode::Protocol, "seq must be a non-negative integer");
    m.seq = j["seq"].get<std::uint64_t>();
    const auto kind = j.at("kind").get<std::string>();
    const ordered_json empty = ordered_json::object();
    m.payload = parse_payload(kind, j.contains("payload") ? j["payload"] : empty);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Protocol, std::string("bad message: ") + e.what());
  }
}

}  // namespace icebot::protocol
