#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "tug/dictionary.hpp"
#include "tug/lobby.hpp"
#include "tug/protocol.hpp"

namespace tug::server {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

inline std::int64_t wall_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

/// Decodes %XX and '+' in a query component.
inline std::string url_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out.push_back(' ');
    } else if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
               std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      out.push_back(static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16)));
      i += 2;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

/// Splits "/path?a=1&b=2" into the path and decoded parameters.
inline std::pair<std::string, std::map<std::string, std::string>> parse_target(std::string_view target) {
  std::map<std::string, std::string> params;
  const auto q = target.find('?');
  std::string path(target.substr(0, q));
  if (q == std::string_view::npos) return {path, params};
  auto rest = target.substr(q + 1);
  while (!rest.empty()) {
    const auto amp = rest.find('&');
    auto part = rest.substr(0, amp);
    const auto eq = part.find('=');
    if (eq == std::string_view::npos) {
      params[url_decode(part)] = "";
    } else {
      params[url_decode(part.substr(0, eq))] = url_decode(part.substr(eq + 1));
    }
    if (amp == std::string_view::npos) break;
    rest = rest.substr(amp + 1);
  }
  return {path, params};
}

struct ServerConfig {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;
  std::chrono::milliseconds tick_interval{1000};
  std::chrono::milliseconds leaderboard_push_interval{10000};
  std::function<std::int64_t()> clock = wall_ms;
};

class Server;

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(websocket::stream<beast::tcp_stream> ws, Server& server) : ws_(std::move(ws)), server_(server) {}

  void start(http::request<http::string_body> req);
  void send(std::string frame) {
    outbox_.push_back(std::move(frame));
    if (outbox_.size() == 1 && open_) write_next();
  }
  void close() {
    if (!open_) return;
    beast::error_code ec;
    ws_.next_layer().socket().shutdown(tcp::socket::shutdown_both, ec);
  }
  const lobby::PlayerId& player() const { return player_; }

 private:
  void read_next();
  void write_next();
  void on_closed();

  websocket::stream<beast::tcp_stream> ws_;
  Server& server_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  lobby::PlayerId player_;
  bool open_ = false;
  bool closed_ = false;
};

/// WebSocket game endpoint plus plain HTTP routes on one port. Runs on a
/// single-threaded io_context; the lobby itself is thread safe.
class Server {
 public:
  Server(lobby::Lobby& lobby, const dictionary::DefinitionSource* definitions, ServerConfig cfg = {})
      : lobby_(lobby), definitions_(definitions), cfg_(std::move(cfg)), acceptor_(io_), ticker_(io_), pusher_(io_) {}

  /// Binds and starts accepting; returns the bound port (useful with port 0).
  unsigned short listen() {
    tcp::endpoint ep(asio::ip::make_address(cfg_.address), cfg_.port);
    acceptor_.open(ep.protocol());
    acceptor_.set_option(asio::socket_base::reuse_address(true));
    acceptor_.bind(ep);
    acceptor_.listen();
    accept_next();
    schedule_tick();
    schedule_push();
    return acceptor_.local_endpoint().port();
  }

  void run() { io_.run(); }
  asio::io_context& io() { return io_; }

  /// Stops taking new connections; live sessions keep running.
  void stop_accepting() {
    asio::post(io_, [this] {
      beast::error_code ec;
      acceptor_.close(ec);
    });
  }

  /// Closes every connection and stops the loop.
  void shutdown() {
    asio::post(io_, [this] {
      beast::error_code ec;
      acceptor_.close(ec);
      ticker_.cancel();
      pusher_.cancel();
      auto conns = connections_;
      for (auto& [_, w] : conns) {
        if (auto c = w.lock()) c->close();
      }
      io_.stop();
    });
  }

  /// Stops accepting, waits for live sessions to end (or the limit to pass),
  /// then shuts down. Safe to call from any thread.
  void drain_and_stop(std::chrono::milliseconds limit) {
    stop_accepting();
    const auto deadline = std::chrono::steady_clock::now() + limit;
    asio::post(io_, [this, deadline] { poll_drain(deadline); });
  }

  lobby::Lobby& lobby() { return lobby_; }
  std::int64_t now() const { return cfg_.clock(); }

  void deliver(const lobby::Outbox& out) {
    for (const auto& o : out) {
      auto it = connections_.find(o.to);
      if (it == connections_.end()) continue;
      if (auto c = it->second.lock()) c->send(o.frame);
    }
  }

  void attach(const lobby::PlayerId& p, const std::shared_ptr<Connection>& c) { connections_[p] = c; }
  void detach(const lobby::PlayerId& p) { connections_.erase(p); }

  http::response<http::string_body> handle_http(const http::request<http::string_body>& req) const {
    auto [path, params] = parse_target(std::string_view(req.target().data(), req.target().size()));
    auto reply = [&](http::status status, const nlohmann::json& body) {
      http::response<http::string_body> res{status, req.version()};
      res.set(http::field::content_type, "application/json");
      res.set(http::field::access_control_allow_origin, "*");
      res.keep_alive(false);
      res.body() = body.dump();
      res.prepare_payload();
      return res;
    };
    if (req.method() != http::verb::get) return reply(http::status::method_not_allowed, {{"error", "GET only"}});
    if (path == "/define") {
      auto it = params.find("word");
      if (it == params.end() || it->second.empty()) {
        return reply(http::status::bad_request, {{"error", "missing word parameter"}});
      }
      auto def = definitions_ ? definitions_->define(it->second) : std::nullopt;
      if (!def) return reply(http::status::not_found, {{"word", it->second}, {"definition", nullptr}});
      return reply(http::status::ok, {{"word", it->second}, {"definition", *def}});
    }
    if (path == "/leaderboard") {
      int n = 10;
      if (auto it = params.find("n"); it != params.end()) n = std::max(1, std::atoi(it->second.c_str()));
      return reply(http::status::ok, nlohmann::json::parse(lobby_.leaderboard_frame(static_cast<std::size_t>(n))));
    }
    if (path == "/healthz") return reply(http::status::ok, {{"ok", true}, {"live_sessions", lobby_.live_sessions()}});
    return reply(http::status::not_found, {{"error", "no such route"}});
  }

 private:
  void accept_next() {
    acceptor_.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      read_request(std::make_shared<beast::tcp_stream>(std::move(socket)));
      accept_next();
    });
  }

  void read_request(std::shared_ptr<beast::tcp_stream> stream) {
    auto buffer = std::make_shared<beast::flat_buffer>();
    auto req = std::make_shared<http::request<http::string_body>>();
    stream->expires_after(std::chrono::seconds(30));
    http::async_read(*stream, *buffer, *req, [this, stream, buffer, req](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (websocket::is_upgrade(*req)) {
        stream->expires_never();
        auto conn = std::make_shared<Connection>(websocket::stream<beast::tcp_stream>(std::move(*stream)), *this);
        conn->start(std::move(*req));
        return;
      }
      auto res = std::make_shared<http::response<http::string_body>>(handle_http(*req));
      http::async_write(*stream, *res, [stream, res](beast::error_code, std::size_t) {
        beast::error_code ec2;
        stream->socket().shutdown(tcp::socket::shutdown_send, ec2);
      });
    });
  }

  void poll_drain(std::chrono::steady_clock::time_point deadline) {
    if (lobby_.live_sessions() == 0 || std::chrono::steady_clock::now() >= deadline) {
      shutdown();
      return;
    }
    drainer_ = std::make_unique<asio::steady_timer>(io_, std::chrono::milliseconds(250));
    drainer_->async_wait([this, deadline](beast::error_code ec) {
      if (!ec) poll_drain(deadline);
    });
  }

  void schedule_tick() {
    ticker_.expires_after(cfg_.tick_interval);
    ticker_.async_wait([this](beast::error_code ec) {
      if (ec) return;
      deliver(lobby_.tick(now()));
      schedule_tick();
    });
  }

  void schedule_push() {
    pusher_.expires_after(cfg_.leaderboard_push_interval);
    pusher_.async_wait([this](beast::error_code ec) {
      if (ec) return;
      const auto frame = lobby_.leaderboard_frame(10);
      for (auto& [_, w] : connections_) {
        if (auto c = w.lock()) c->send(frame);
      }
      schedule_push();
    });
  }

  asio::io_context io_;
  lobby::Lobby& lobby_;
  const dictionary::DefinitionSource* definitions_;
  ServerConfig cfg_;
  tcp::acceptor acceptor_;
  asio::steady_timer ticker_;
  asio::steady_timer pusher_;
  std::unique_ptr<asio::steady_timer> drainer_;
  std::map<lobby::PlayerId, std::weak_ptr<Connection>> connections_;
};

inline void Connection::start(http::request<http::string_body> req) {
  auto [path, params] = parse_target(std::string_view(req.target().data(), req.target().size()));
  const auto alias = params.count("alias") ? params["alias"] : std::string("player");
  ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
  ws_.read_message_max(protocol::kMaxFrameBytes);
  auto self = shared_from_this();
  ws_.async_accept(req, [self, alias](beast::error_code ec) {
    if (ec) return;
    self->open_ = true;
    self->player_ = self->server_.lobby().connect(alias);
    self->server_.attach(self->player_, self);
    self->send(self->server_.lobby().leaderboard_frame(10));
    self->read_next();
  });
}

inline void Connection::read_next() {
  auto self = shared_from_this();
  ws_.async_read(buffer_, [self](beast::error_code ec, std::size_t) {
    if (ec) {
      self->on_closed();
      return;
    }
    auto frame = beast::buffers_to_string(self->buffer_.data());
    self->buffer_.consume(self->buffer_.size());
    auto out = self->server_.lobby().handle(self->player_, frame, self->server_.now());
    self->server_.deliver(out);
    self->read_next();
  });
}

inline void Connection::write_next() {
  auto self = shared_from_this();
  ws_.text(true);
  ws_.async_write(asio::buffer(outbox_.front()), [self](beast::error_code ec, std::size_t) {
    if (ec) {
      self->on_closed();
      return;
    }
    self->outbox_.pop_front();
    if (!self->outbox_.empty()) self->write_next();
  });
}

inline void Connection::on_closed() {
  if (closed_) return;
  closed_ = true;
  if (player_.empty()) return;
  open_ = false;
  server_.detach(player_);
  server_.deliver(server_.lobby().disconnect(player_, server_.now()));
}

}  // namespace tug::server
