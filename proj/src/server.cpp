#include "icebot/server.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <thread>
#include <variant>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "icebot/error.hpp"
#include "icebot/protocol.hpp"
#include "icebot/session.hpp"
#include "json.hpp"

namespace icebot {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
namespace proto = icebot::protocol;
using tcp = net::ip::tcp;
using ordered_json = nlohmann::ordered_json;

namespace {

using ClientId = std::uint64_t;

struct Outgoing {
  std::shared_ptr<const std::string> text;
  bool telemetry = false;
};

// Something the control loop must turn into outbound traffic, in arrival order.
struct Rejection {
  ErrorCode code;
  std::string message;
  std::optional<std::uint64_t> in_reply_to;
};

struct Inbound {
  ClientId client;
  std::variant<proto::WireMessage, Rejection> item;
};

// A client that falls this far behind on events is dropped.
constexpr std::size_t kMaxQueued = 1024;

}  // namespace

struct Server::Impl {
  class WsConnection;
  class HttpConnection;

  Impl(RunConfig cfg, Roadmap roadmap, ServerOptions opts)
      : options(std::move(opts)), session(std::move(cfg), std::move(roadmap)), acceptor(ioc), signals(ioc) {}

  ServerOptions options;
  mutable std::mutex session_mutex;
  Session session;
  std::ofstream session_log, trajectory_log;

  net::io_context ioc;
  tcp::acceptor acceptor;
  net::signal_set signals;
  std::thread io_thread, control_thread;

  std::mutex queue_mutex;
  std::deque<Inbound> queue;

  std::mutex clients_mutex;
  std::map<ClientId, std::weak_ptr<WsConnection>> clients;
  ClientId next_client = 1;
  ClientId operator_client = 0;

  std::mutex stop_mutex;
  std::condition_variable stop_cv;
  bool stop_requested = false;
  bool started = false;
  bool stopped = false;

  ClientId attach(const std::shared_ptr<WsConnection>& c) {
    std::lock_guard lock(clients_mutex);
    const ClientId id = next_client++;
    clients[id] = c;
    return id;
  }

  void detach(ClientId id) {
    std::lock_guard lock(clients_mutex);
    clients.erase(id);
    if (operator_client == id) operator_client = 0;
  }

  void push(ClientId client, std::variant<proto::WireMessage, Rejection> item) {
    std::lock_guard lock(queue_mutex);
    queue.push_back({client, std::move(item)});
  }

  void inbound(ClientId id, const std::string& text, std::uint64_t& last_seq);
  void accept();
  void control_loop();
  void deliver(std::vector<std::pair<ClientId, proto::WireMessage>>& out);
  std::string http_body(const std::string& target, http::status& status);

  void request_stop() {
    {
      std::lock_guard lock(stop_mutex);
      stop_requested = true;
    }
    stop_cv.notify_all();
  }
};

class Server::Impl::WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket socket, Impl& hub) : ws_(std::move(socket)), hub_(hub) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->id_ = self->hub_.attach(self);
      self->read();
    });
  }

  void shutdown() {
    if (closed_) return;
    closed_ = true;
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ignored);
    beast::get_lowest_layer(ws_).socket().close(ignored);
  }

  void send(Outgoing m) {
    net::post(ws_.get_executor(), [self = shared_from_this(), m = std::move(m)]() mutable { self->enqueue(std::move(m)); });
  }

 private:
  void enqueue(Outgoing m) {
    if (closed_) return;
    if (m.telemetry) {
      // Only the newest snapshot matters; anything not yet on the wire goes.
      auto first = queue_.begin() + (writing_ ? 1 : 0);
      queue_.erase(std::remove_if(first, queue_.end(), [](const Outgoing& o) { return o.telemetry; }), queue_.end());
    }
    if (queue_.size() >= kMaxQueued) {
      fail();
      return;
    }
    queue_.push_back(std::move(m));
    if (!writing_) write();
  }

  void write() {
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(*queue_.front().text), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->queue_.pop_front();
      if (ec) {
        self->fail();
        return;
      }
      if (self->queue_.empty()) {
        self->writing_ = false;
      } else {
        self->write();
      }
    });
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->fail();
        return;
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->hub_.inbound(self->id_, text, self->last_seq_);
      self->read();
    });
  }

  void fail() {
    if (closed_) return;
    closed_ = true;
    hub_.detach(id_);
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).socket().close(ignored);
  }

  websocket::stream<beast::tcp_stream> ws_;
  Impl& hub_;
  beast::flat_buffer buffer_;
  std::deque<Outgoing> queue_;
  ClientId id_ = 0;
  std::uint64_t last_seq_ = 0;
  bool writing_ = false;
  bool closed_ = false;
};

class Server::Impl::HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket socket, Impl& hub) : stream_(std::move(socket)), hub_(hub) {}

  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->handle();
    });
  }

 private:
  void handle() {
    if (websocket::is_upgrade(req_)) {
      if (req_.target() == "/ops") {
        stream_.expires_never();
        std::make_shared<WsConnection>(stream_.release_socket(), hub_)->run(std::move(req_));
        return;
      }
    }
    auto res = std::make_shared<http::response<http::string_body>>();
    res->version(req_.version());
    res->keep_alive(req_.keep_alive());
    res->set(http::field::content_type, "application/json");
    res->set(http::field::access_control_allow_origin, "*");
    http::status status = http::status::ok;
    if (req_.method() != http::verb::get) {
      status = http::status::method_not_allowed;
      res->body() = R"({"error":"method not allowed"})";
    } else {
      res->body() = hub_.http_body(std::string(req_.target()), status);
    }
    res->result(status);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec || !res->keep_alive()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->read();
    });
  }

  beast::tcp_stream stream_;
  Impl& hub_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

void Server::Impl::inbound(ClientId id, const std::string& text, std::uint64_t& last_seq) {
  proto::WireMessage msg;
  try {
    msg = proto::decode(text);
  } catch (const Error& e) {
    push(id, Rejection{ErrorCode::Protocol, e.what(), std::nullopt});
    return;
  }
  if (msg.is_command()) {
    bool authorized;
    {
      std::lock_guard lock(clients_mutex);
      if (operator_client == 0) operator_client = id;
      authorized = operator_client == id;
    }
    if (!authorized) {
      push(id, Rejection{ErrorCode::Unauthorized, "another operator holds control", msg.seq});
      return;
    }
  }
  if (msg.seq <= last_seq) {
    push(id, Rejection{ErrorCode::Protocol, "sequence number must increase", msg.seq});
    return;
  }
  last_seq = msg.seq;
  push(id, std::move(msg));
}

std::string Server::Impl::http_body(const std::string& target, http::status& status) {
  std::lock_guard lock(session_mutex);
  const Controller& c = session.controller();
  const Roadmap& map = c.roadmap();
  ordered_json j;
  if (target == "/health") {
    std::size_t n;
    bool has_operator;
    {
      std::lock_guard clients_lock(clients_mutex);
      n = clients.size();
      has_operator = operator_client != 0;
    }
    j["status"] = "ok";
    j["protocol_version"] = proto::kProtocolVersion;
    j["mode"] = to_string(c.state().mode);
    j["tick"] = c.state().tick;
    j["clients"] = n;
    j["operator_connected"] = has_operator;
  } else if (target == "/views") {
    j["views"] = ordered_json::array();
    for (const auto& v : map.views()) {
      j["views"].push_back({{"label", v.label}, {"vertex_id", v.vertex_id}, {"saved_at", v.saved_at}});
    }
  } else if (target == "/roadmap/stats") {
    const auto s = map.stats();
    j["vertex_count"] = s.vertex_count;
    j["edge_count"] = s.edge_count;
    j["view_count"] = s.view_count;
    j["epsilon"] = map.epsilon();
    j["disconnected_insertions"] = map.disconnected_insertions();
  } else {
    status = http::status::not_found;
    j["error"] = "not found";
  }
  return j.dump();
}

void Server::Impl::accept() {
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    std::make_shared<HttpConnection>(std::move(socket), *this)->read();
    accept();
  });
}

void Server::Impl::deliver(std::vector<std::pair<ClientId, proto::WireMessage>>& out) {
  if (out.empty()) return;
  std::vector<std::shared_ptr<WsConnection>> everyone;
  std::map<ClientId, std::shared_ptr<WsConnection>> by_id;
  {
    std::lock_guard lock(clients_mutex);
    for (const auto& [id, weak] : clients) {
      if (auto c = weak.lock()) {
        everyone.push_back(c);
        by_id[id] = c;
      }
    }
  }
  for (auto& [target, msg] : out) {
    Outgoing o{std::make_shared<const std::string>(proto::encode(msg)),
               std::holds_alternative<proto::Telemetry>(msg.payload)};
    if (target == 0) {
      for (const auto& c : everyone) c->send(o);
    } else if (auto it = by_id.find(target); it != by_id.end()) {
      it->second->send(o);
    }
  }
  out.clear();
}

void Server::Impl::control_loop() {
  using Clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(1.0 / session.controller().config().tick_rate));
  auto next = Clock::now();
  std::vector<std::pair<ClientId, proto::WireMessage>> out;
  while (true) {
    std::deque<Inbound> batch;
    {
      std::lock_guard lock(queue_mutex);
      batch.swap(queue);
    }
    {
      std::lock_guard lock(session_mutex);
      for (auto& in : batch) {
        if (auto* r = std::get_if<Rejection>(&in.item)) {
          out.emplace_back(in.client, session.error_reply(r->code, r->message, r->in_reply_to));
          continue;
        }
        Outbox box = session.apply(std::get<proto::WireMessage>(in.item));
        for (auto& m : box.reply) out.emplace_back(in.client, std::move(m));
        for (auto& m : box.broadcast) out.emplace_back(0, std::move(m));
      }
      Outbox box = session.step();
      for (auto& m : box.broadcast) out.emplace_back(0, std::move(m));
    }
    deliver(out);

    next += period;
    const auto now = Clock::now();
    if (now > next + 10 * period) next = now;  // fell badly behind; do not burst
    std::unique_lock lock(stop_mutex);
    if (stop_cv.wait_until(lock, next, [this] { return stopped; })) return;
  }
}

Server::Server(RunConfig config, ServerOptions options)
    : Server(config, Roadmap(config.epsilon), std::move(options)) {}

Server::Server(RunConfig config, Roadmap roadmap, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(roadmap), std::move(options))) {}

Server::~Server() { stop(); }

void Server::start() {
  Impl& s = *impl_;
  if (s.started) throw Error(ErrorCode::InvalidArgument, "server already started");
  try {
    const tcp::endpoint ep(net::ip::make_address(s.options.address), s.options.port);
    s.acceptor.open(ep.protocol());
    s.acceptor.set_option(net::socket_base::reuse_address(true));
    s.acceptor.bind(ep);
    s.acceptor.listen(net::socket_base::max_listen_connections);
  } catch (const boost::system::system_error& e) {
    throw Error(ErrorCode::Io, "port unavailable: " + s.options.address + ":" + std::to_string(s.options.port) +
                                   " (" + e.code().message() + ")");
  }
  auto open = [](std::ofstream& f, const std::string& path) {
    if (path.empty()) return false;
    f.open(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + path);
    return true;
  };
  if (open(s.session_log, s.options.session_log_path)) s.session.set_session_log(&s.session_log);
  if (open(s.trajectory_log, s.options.trajectory_log_path)) s.session.set_trajectory_log(&s.trajectory_log);

  if (s.options.handle_signals) {
    s.signals.add(SIGINT);
    s.signals.add(SIGTERM);
    s.signals.async_wait([&s](beast::error_code ec, int) {
      if (!ec) s.request_stop();
    });
  }
  s.accept();
  s.started = true;
  s.io_thread = std::thread([&s] { s.ioc.run(); });
  s.control_thread = std::thread([&s] { s.control_loop(); });
}

void Server::wait() {
  Impl& s = *impl_;
  std::unique_lock lock(s.stop_mutex);
  s.stop_cv.wait(lock, [&s] { return s.stop_requested || s.stopped; });
}

void Server::stop() {
  Impl& s = *impl_;
  {
    std::lock_guard lock(s.stop_mutex);
    if (!s.started || s.stopped) return;
    s.stopped = true;
  }
  s.stop_cv.notify_all();
  s.control_thread.join();
  std::promise<void> closed;
  net::post(s.ioc, [&s, &closed] {
    beast::error_code ignored;
    s.acceptor.close(ignored);
    s.signals.cancel(ignored);
    std::vector<std::shared_ptr<Impl::WsConnection>> live;
    {
      std::lock_guard lock(s.clients_mutex);
      for (const auto& [id, weak] : s.clients) {
        if (auto c = weak.lock()) live.push_back(c);
      }
      s.clients.clear();
      s.operator_client = 0;
    }
    for (const auto& c : live) c->shutdown();
    closed.set_value();
  });
  closed.get_future().wait();
  s.ioc.stop();
  s.io_thread.join();
  std::lock_guard lock(s.session_mutex);
  s.session.finish();
}

unsigned short Server::port() const {
  beast::error_code ec;
  const auto ep = impl_->acceptor.local_endpoint(ec);
  return ec ? impl_->options.port : ep.port();
}

Roadmap Server::roadmap() const {
  std::lock_guard lock(impl_->session_mutex);
  return impl_->session.controller().roadmap();
}

std::optional<RecoveryReport> Server::report() const {
  std::lock_guard lock(impl_->session_mutex);
  return impl_->session.report();
}

}  // namespace icebot
