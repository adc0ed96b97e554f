#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "doctest.h"
#include "icebot/error.hpp"
#include "icebot/server.hpp"
#include "icebot/session.hpp"
#include "json.hpp"

using namespace icebot;
namespace proto = icebot::protocol;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

struct HttpReply {
  unsigned status = 0;
  nlohmann::json body;
};

HttpReply get(unsigned short port, const std::string& target) {
  net::io_context ioc;
  tcp::resolver resolver(ioc);
  beast::tcp_stream stream(ioc);
  stream.connect(resolver.resolve("127.0.0.1", std::to_string(port)));
  http::request<http::empty_body> req{http::verb::get, target, 11};
  req.set(http::field::host, "127.0.0.1");
  http::write(stream, req);
  beast::flat_buffer buffer;
  http::response<http::string_body> res;
  http::read(stream, buffer, res);
  beast::error_code ignored;
  stream.socket().shutdown(tcp::socket::shutdown_both, ignored);
  return {res.result_int(), nlohmann::json::parse(res.body())};
}

class Client {
 public:
  explicit Client(unsigned short port) : ws_(ioc_) {
    tcp::resolver resolver(ioc_);
    net::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/ops");
  }
  ~Client() {
    beast::error_code ignored;
    ws_.close(websocket::close_code::normal, ignored);
  }

  void send_text(const std::string& text) { ws_.write(net::buffer(text)); }
  void send(proto::Payload p) { send_text(proto::encode({proto::kProtocolVersion, ++seq, std::move(p)})); }

  proto::WireMessage next() {
    beast::flat_buffer buffer;
    ws_.read(buffer);
    return proto::decode(beast::buffers_to_string(buffer.data()));
  }

  // Reads until pred matches; telemetry alone arrives at 20 Hz so this is bounded.
  proto::WireMessage until(const std::function<bool(const proto::WireMessage&)>& pred, int limit = 2000) {
    for (int i = 0; i < limit; ++i) {
      auto m = next();
      seen.push_back(m);
      if (pred(m)) return m;
    }
    FAIL("expected message never arrived");
    return {};
  }

  std::uint64_t seq = 0;
  std::vector<proto::WireMessage> seen;

 private:
  net::io_context ioc_;
  websocket::stream<tcp::socket> ws_;
};

bool is_error(const proto::WireMessage& m) { return std::holds_alternative<proto::ErrorReply>(m.payload); }

const proto::Telemetry* telemetry(const proto::WireMessage& m) { return std::get_if<proto::Telemetry>(&m.payload); }

ServerOptions local() {
  ServerOptions o;
  o.port = 0;
  return o;
}

void settle() { std::this_thread::sleep_for(std::chrono::milliseconds(100)); }

}  // namespace

TEST_CASE("http endpoints") {
  Server server(RunConfig{}, local());
  server.start();
  const auto port = server.port();
  REQUIRE(port != 0);

  auto health = get(port, "/health");
  CHECK(health.status == 200);
  CHECK(health.body["status"] == "ok");
  CHECK(health.body["mode"] == "idle");
  CHECK(health.body["protocol_version"] == 1);

  auto views = get(port, "/views");
  CHECK(views.status == 200);
  CHECK(views.body["views"].empty());

  auto stats = get(port, "/roadmap/stats");
  CHECK(stats.body["vertex_count"] == 0);
  CHECK(stats.body["epsilon"] == 1.0);

  CHECK(get(port, "/nope").status == 404);
  server.stop();
}

TEST_CASE("a taken port is reported") {
  Server first(RunConfig{}, local());
  first.start();
  ServerOptions o;
  o.port = first.port();
  Server second(RunConfig{}, o);
  try {
    second.start();
    FAIL("second bind succeeded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
}

TEST_CASE("operator session over the websocket") {
  const auto log_path = std::filesystem::temp_directory_path() / "icebot_server_session.jsonl";
  RunConfig cfg;
  cfg.initial = {0, 0, 0, 40};
  ServerOptions opts = local();
  opts.session_log_path = log_path.string();
  Server server(cfg, opts);
  server.start();
  const auto port = server.port();

  Client op(port);
  settle();

  // save_view before any motion: error, connection stays open
  op.send(proto::SaveView{"AV"});
  const auto err = op.until(is_error);
  const auto& e = std::get<proto::ErrorReply>(err.payload);
  CHECK(e.code == "empty_roadmap");
  CHECK(e.message == "empty roadmap");
  CHECK(e.in_reply_to == std::uint64_t{1});

  op.send(proto::JogKnob{{10, 5, 0, 4}});
  op.until([](const auto& m) {
    const auto* t = telemetry(m);
    return t && t->current_q[0] > 2.0;
  });
  op.send(proto::JogKnob{});
  settle();
  op.send(proto::SaveView{"AV"});
  const auto list = op.until([](const auto& m) { return std::holds_alternative<proto::ViewList>(m.payload); });
  REQUIRE(std::get<proto::ViewList>(list.payload).views.size() == 1);
  CHECK(get(port, "/views").body["views"][0]["label"] == "AV");

  op.send(proto::JogKnob{{-10, 0, 10, 0}});
  op.until([](const auto& m) {
    const auto* t = telemetry(m);
    return t && t->current_q[2] > 2.0;
  });
  op.send(proto::JogKnob{});
  settle();

  // a second connection sees telemetry but cannot command
  Client viewer(port);
  settle();
  viewer.send(proto::Cancel{});
  const auto denied = viewer.until(is_error);
  CHECK(std::get<proto::ErrorReply>(denied.payload).code == "unauthorized");
  CHECK(viewer.until([](const auto& m) { return telemetry(m) != nullptr; }).kind() == "telemetry");

  op.seen.clear();
  op.send(proto::RecoverView{"AV"});
  const auto done = op.until([](const auto& m) {
    const auto* t = telemetry(m);
    return t && t->mode == "completed";
  });
  CHECK(telemetry(done)->last_applied_seq == op.seq);
  std::vector<std::string> modes{"idle"};
  for (const auto& m : op.seen) {
    if (const auto* t = telemetry(m); t && t->mode != modes.back()) modes.push_back(t->mode);
  }
  CHECK(modes == std::vector<std::string>{"idle", "search", "execution", "completed"});
  // the viewer watched the same recovery
  viewer.until([](const auto& m) {
    const auto* t = telemetry(m);
    return t && t->mode == "completed";
  });

  // stale sequence numbers and garbage are refused without dropping the link
  op.send_text(proto::encode({1, 1, proto::Cancel{}}));
  auto stale = op.until(is_error);
  CHECK(std::get<proto::ErrorReply>(stale.payload).code == "protocol");
  op.send_text("{\"kind\": 12");
  CHECK(std::get<proto::ErrorReply>(op.until(is_error).payload).code == "protocol");
  CHECK(get(port, "/health").body["operator_connected"] == true);

  server.stop();
  const Roadmap live = server.roadmap();
  CHECK(live.stats().view_count == 1);

  // the recorded log replays to the same roadmap
  std::ifstream in(log_path);
  std::stringstream text;
  text << in.rdbuf();
  const ReplayResult r = replay(text.str(), cfg);
  CHECK(r.roadmap.to_json() == live.to_json());
  REQUIRE(r.outcomes.size() == 1);
  CHECK(r.outcomes[0].label == "AV");
  std::filesystem::remove(log_path);
}

TEST_CASE("operator role passes on after disconnect") {
  Server server(RunConfig{}, local());
  server.start();
  {
    Client first(server.port());
    first.send(proto::JogKnob{{1, 0, 0, 0}});
    first.until([](const auto& m) { return telemetry(m) && telemetry(m)->last_applied_seq == 1; });
  }
  settle();
  CHECK(get(server.port(), "/health").body["operator_connected"] == false);
  Client second(server.port());
  second.seq = 10;
  second.send(proto::Cancel{});
  const auto t = second.until([&](const auto& m) {
    return is_error(m) || (telemetry(m) && telemetry(m)->last_applied_seq == second.seq);
  });
  CHECK_FALSE(is_error(t));
}
