// Copyright 2026 The vrbf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Live teleoperation session: a wall-clock paced simulation loop plus a
// websocket endpoint (/ws) and a JSON health probe (GET /health).
//
// Threads: one simulation thread owns the World; one network thread runs the
// io_context. Commands flow in through CommandChannel, snapshots flow out as
// immutable strings posted to each connection's strand. The simulation loop
// never waits on a client; a slow client loses its oldest queued snapshots.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>

#include "vrbf/sim.hpp"
#include "vrbf/wire.hpp"

namespace vrbf {

struct TeleopOptions {
  RateLimits limits;
  std::chrono::milliseconds stale_after{500};
  std::size_t client_queue = 8;
};

/// Newest-command-wins channel with staleness. Thread-safe.
class CommandChannel {
 public:
  using Clock = std::chrono::steady_clock;

  explicit CommandChannel(const TeleopOptions& opt = {})
      : limits_(opt.limits), stale_after_(opt.stale_after) {}

  /// Returns false (and counts it) if the message is malformed.
  bool submit(std::string_view text, Clock::time_point now) {
    CommandMessage msg;
    try {
      msg = parse_command(text, limits_);
    } catch (const Error&) {
      ++malformed_;
      return false;
    }
    std::lock_guard lock(mu_);
    latest_ = msg.deta;
    received_ = now;
    ++accepted_;
    return true;
  }

  /// Operator command to apply at `now`: zero when none is fresh.
  Vec5 effective(Clock::time_point now) const {
    std::lock_guard lock(mu_);
    if (!received_ || now - *received_ > stale_after_) return Vec5::Zero();
    return latest_;
  }

  std::optional<double> age_ms(Clock::time_point now) const {
    std::lock_guard lock(mu_);
    if (!received_) return std::nullopt;
    return std::chrono::duration<double, std::milli>(now - *received_).count();
  }

  std::uint64_t malformed() const { return malformed_; }
  std::uint64_t accepted() const {
    std::lock_guard lock(mu_);
    return accepted_;
  }

 private:
  RateLimits limits_;
  std::chrono::milliseconds stale_after_;
  mutable std::mutex mu_;
  Vec5 latest_ = Vec5::Zero();
  std::optional<Clock::time_point> received_;
  std::uint64_t accepted_ = 0;
  std::atomic<std::uint64_t> malformed_{0};
};

using SharedText = std::shared_ptr<const std::string>;

/// Bounded FIFO of outbound messages. When full, the oldest message that is
/// not currently being written is discarded.
class OutboundQueue {
 public:
  explicit OutboundQueue(std::size_t capacity) : capacity_(capacity) {}

  /// Returns true if a message was discarded to make room.
  bool push(SharedText msg, bool front_in_flight) {
    bool dropped = false;
    if (items_.size() >= capacity_) {
      const std::size_t victim = front_in_flight ? 1 : 0;
      if (victim < items_.size()) {
        items_.erase(items_.begin() + static_cast<long>(victim));
        dropped = true;
      } else {
        return true;  // only the in-flight message fits; drop the new one
      }
    }
    items_.push_back(std::move(msg));
    return dropped;
  }

  bool empty() const { return items_.empty(); }
  std::size_t size() const { return items_.size(); }
  const SharedText& front() const { return items_.front(); }
  void pop() { items_.pop_front(); }

 private:
  std::size_t capacity_;
  std::deque<SharedText> items_;
};

class TeleopService {
 public:
  using Clock = CommandChannel::Clock;

  explicit TeleopService(Scenario scenario, TeleopOptions opt = {})
      : options_(opt),
        commands_(opt),
        world_(std::move(scenario)),
        acceptor_(ioc_),
        centroid_(world_.centroid()) {}

  TeleopService(const TeleopService&) = delete;
  TeleopService& operator=(const TeleopService&) = delete;

  ~TeleopService() { stop(); }

  /// Binds, then starts the network and simulation threads. Port 0 picks an
  /// ephemeral port. Throws an io error if the address cannot be bound.
  void start(const std::string& host, unsigned short port) {
    namespace net = boost::asio;
    boost::system::error_code ec;
    const auto addr = net::ip::make_address(host, ec);
    if (ec) throw Error(ErrorCode::kIo, "bad bind address " + host);
    const net::ip::tcp::endpoint ep(addr, port);
    acceptor_.open(ep.protocol(), ec);
    if (!ec) acceptor_.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acceptor_.bind(ep, ec);
    if (!ec) acceptor_.listen(net::socket_base::max_listen_connections, ec);
    if (ec) {
      throw Error(ErrorCode::kIo, "cannot listen on " + host + ":" +
                                      std::to_string(port) + ": " + ec.message());
    }
    port_ = acceptor_.local_endpoint().port();
    do_accept();
    running_ = true;
    net_thread_ = std::thread([this] { ioc_.run(); });
    sim_thread_ = std::thread([this] { sim_loop(); });
  }

  void stop() {
    running_ = false;
    ioc_.stop();
    if (sim_thread_.joinable()) sim_thread_.join();
    if (net_thread_.joinable()) net_thread_.join();
  }

  unsigned short port() const { return port_; }
  std::uint64_t tick() const { return tick_; }
  std::uint64_t dropped_snapshots() const { return dropped_; }
  std::uint64_t malformed() const { return commands_.malformed(); }
  bool diverged() const { return diverged_; }
  CommandChannel& commands() { return commands_; }

  /// Mean robot position after the latest tick.
  Vec2 centroid() const {
    std::lock_guard lock(centroid_mu_);
    return centroid_;
  }

  std::size_t clients() const {
    std::lock_guard lock(clients_mu_);
    std::size_t n = 0;
    for (const auto& w : clients_) n += !w.expired();
    return n;
  }

  nlohmann::json health() const {
    nlohmann::json j = {{"status", diverged_  ? "diverged"
                                  : running_ ? "running"
                                             : "stopped"},
                        {"tick", tick()},
                        {"clients", clients()},
                        {"malformed_messages", malformed()},
                        {"accepted_commands", commands_.accepted()},
                        {"dropped_snapshots", dropped_snapshots()}};
    const auto age = commands_.age_ms(Clock::now());
    j["command_age_ms"] = age ? nlohmann::json(*age) : nlohmann::json(nullptr);
    j["command_active"] =
        age && *age <= static_cast<double>(options_.stale_after.count());
    return j;
  }

 private:
  class WsSession;
  class HttpSession;

  struct Snapshot {
    SharedText plain;
    SharedText with_obstacles;
  };

  void do_accept();

  void sim_loop() {
    const auto dt = std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(world_.scenario().config.dt));
    auto next = Clock::now();
    while (running_) {
      const auto now = Clock::now();
      StepRecord rec;
      try {
        rec = world_.step(commands_.effective(now));
      } catch (const Error&) {
        diverged_ = true;
        running_ = false;
        ioc_.stop();
        return;
      }
      {
        std::lock_guard lock(centroid_mu_);
        centroid_ = world_.centroid();
      }
      tick_ = rec.tick + 1;
      broadcast({std::make_shared<const std::string>(state_json(rec).dump()),
                 std::make_shared<const std::string>(
                     state_json(rec, &world_.scenario().obstacles).dump())});
      next += dt;
      std::this_thread::sleep_until(next);
    }
  }

  void broadcast(const Snapshot& snap);

  void add_client(const std::shared_ptr<WsSession>& s) {
    std::lock_guard lock(clients_mu_);
    clients_.push_back(s);
  }

  TeleopOptions options_;
  CommandChannel commands_;
  World world_;
  boost::asio::io_context ioc_;
  boost::asio::ip::tcp::acceptor acceptor_;
  unsigned short port_ = 0;
  std::atomic<bool> running_{false};
  std::atomic<bool> diverged_{false};
  std::atomic<std::uint64_t> tick_{0};
  std::atomic<std::uint64_t> dropped_{0};
  mutable std::mutex centroid_mu_;
  Vec2 centroid_ = Vec2::Zero();
  mutable std::mutex clients_mu_;
  std::vector<std::weak_ptr<WsSession>> clients_;
  std::thread net_thread_;
  std::thread sim_thread_;
};

class TeleopService::WsSession
    : public std::enable_shared_from_this<TeleopService::WsSession> {
 public:
  WsSession(TeleopService& svc, boost::asio::ip::tcp::socket&& socket)
      : svc_(svc), ws_(std::move(socket)), queue_(svc.options_.client_queue) {}

  template <class Request>
  void run(Request req) {
    ws_.set_option(boost::beast::websocket::stream_base::timeout::suggested(
        boost::beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](boost::system::error_code ec) {
      if (ec) return;
      self->svc_.add_client(self);
      self->do_read();
    });
  }

  /// Called from the simulation thread; never blocks.
  void offer(const Snapshot& snap) {
    boost::asio::post(ws_.get_executor(), [self = shared_from_this(), snap] {
      self->enqueue(self->sent_obstacles_ ? snap.plain : snap.with_obstacles);
      self->sent_obstacles_ = true;
    });
  }

 private:
  void enqueue(SharedText msg) {
    if (queue_.push(std::move(msg), writing_)) ++svc_.dropped_;
    if (!writing_) do_write();
  }

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](
                                boost::system::error_code ec, std::size_t) {
      if (ec) return;
      const auto text = boost::beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      if (!self->svc_.commands_.submit(text, Clock::now())) {
        nlohmann::json err = {{"v", kProtocolVersion},
                              {"type", "error"},
                              {"message", "malformed command rejected"}};
        self->enqueue(std::make_shared<const std::string>(err.dump()));
      }
      self->do_read();
    });
  }

  void do_write() {
    if (queue_.empty()) {
      writing_ = false;
      return;
    }
    writing_ = true;
    ws_.text(true);
    ws_.async_write(boost::asio::buffer(*queue_.front()),
                    [self = shared_from_this()](boost::system::error_code ec,
                                                std::size_t) {
                      if (ec) {
                        self->writing_ = false;
                        return;
                      }
                      self->queue_.pop();
                      self->do_write();
                    });
  }

  TeleopService& svc_;
  boost::beast::websocket::stream<boost::beast::tcp_stream> ws_;
  boost::beast::flat_buffer buffer_;
  OutboundQueue queue_;
  bool writing_ = false;
  bool sent_obstacles_ = false;
};

class TeleopService::HttpSession
    : public std::enable_shared_from_this<TeleopService::HttpSession> {
 public:
  HttpSession(TeleopService& svc, boost::asio::ip::tcp::socket&& socket)
      : svc_(svc), stream_(std::move(socket)) {}

  void run() {
    stream_.expires_after(std::chrono::seconds(30));
    boost::beast::http::async_read(
        stream_, buffer_, req_,
        [self = shared_from_this()](boost::system::error_code ec, std::size_t) {
          if (ec) return;
          self->handle();
        });
  }

 private:
  void handle() {
    namespace http = boost::beast::http;
    if (boost::beast::websocket::is_upgrade(req_)) {
      if (req_.target() == "/ws") {
        stream_.expires_never();
        std::make_shared<WsSession>(svc_, stream_.release_socket())
            ->run(std::move(req_));
        return;
      }
      return respond(http::status::not_found, R"({"error":"not found"})");
    }
    if (req_.method() == http::verb::get && req_.target() == "/health") {
      return respond(http::status::ok, svc_.health().dump());
    }
    respond(http::status::not_found, R"({"error":"not found"})");
  }

  void respond(boost::beast::http::status status, std::string body) {
    namespace http = boost::beast::http;
    auto res = std::make_shared<http::response<http::string_body>>(
        status, req_.version());
    res->set(http::field::content_type, "application/json");
    res->keep_alive(false);
    res->body() = std::move(body);
    res->prepare_payload();
    http::async_write(stream_, *res,
                      [self = shared_from_this(), res](boost::system::error_code,
                                                       std::size_t) {
                        boost::system::error_code ignored;
                        self->stream_.socket().shutdown(
                            boost::asio::ip::tcp::socket::shutdown_send, ignored);
                      });
  }

  TeleopService& svc_;
  boost::beast::tcp_stream stream_;
  boost::beast::flat_buffer buffer_;
  boost::beast::http::request<boost::beast::http::string_body> req_;
};

inline void TeleopService::do_accept() {
  acceptor_.async_accept(
      boost::asio::make_strand(ioc_),
      [this](boost::system::error_code ec, boost::asio::ip::tcp::socket s) {
        if (ec) return;
        std::make_shared<HttpSession>(*this, std::move(s))->run();
        do_accept();
      });
}

inline void TeleopService::broadcast(const Snapshot& snap) {
  std::vector<std::shared_ptr<WsSession>> live;
  {
    std::lock_guard lock(clients_mu_);
    std::erase_if(clients_, [](const auto& w) { return w.expired(); });
    for (const auto& w : clients_) {
      if (auto s = w.lock()) live.push_back(std::move(s));
    }
  }
  for (const auto& s : live) s->offer(snap);
}

}  // namespace vrbf
