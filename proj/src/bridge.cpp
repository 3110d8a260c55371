// Copyright 2026 The PAPF Ballbot Authors
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

#include "papf/bridge.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <future>
#include <mutex>
#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "json.hpp"
#include "papf/error.hpp"
#include "papf/io.hpp"

namespace papf::bridge {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using Json = nlohmann::ordered_json;

void ServerOptions::validate() const {
  if (!(stream_hz > 0)) throw ConfigError("stream_hz must be > 0", "stream_hz");
  if (!(realtime_factor > 0)) throw ConfigError("realtime_factor must be > 0", "realtime_factor");
  if (max_catch_up_ticks < 1) {
    throw ConfigError("max_catch_up_ticks must be >= 1", "max_catch_up_ticks");
  }
  if (scan_stride < 1) throw ConfigError("scan_stride must be >= 1", "scan_stride");
}

// ---------------------------------------------------------------------------
// Protocol

namespace {

double steer_field(const Json& j, const char* key, bool required) {
  const auto it = j.find(key);
  if (it == j.end()) {
    if (required) throw ProtocolError("bad_field", std::string("steer needs '") + key + "'");
    return 0.0;
  }
  if (!it->is_number()) {
    throw ProtocolError("bad_field", std::string("steer '") + key + "' must be a number");
  }
  return std::clamp(it->get<double>(), -1.0, 1.0);
}

Json xy(double x, double y) { return {{"x", x}, {"y", y}}; }

}  // namespace

ClientMessage parse_client_message(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ProtocolError("bad_json", e.what());
  }
  if (!j.is_object()) throw ProtocolError("bad_json", "message must be a JSON object");
  const auto type_it = j.find("type");
  if (type_it == j.end() || !type_it->is_string()) {
    throw ProtocolError("bad_field", "message needs a string 'type'");
  }
  const std::string type = type_it->get<std::string>();
  ClientMessage m;
  if (type == "hello") {
    m.type = MessageType::kHello;
    const auto v = j.find("schema_version");
    if (v == j.end() || !v->is_number_integer()) {
      throw ProtocolError("bad_field", "hello needs an integer 'schema_version'");
    }
    m.schema_version = v->get<int>();
  } else if (type == "steer") {
    m.type = MessageType::kSteer;
    m.ix = steer_field(j, "ix", true);
    m.iy = steer_field(j, "iy", true);
    m.yaw = steer_field(j, "yaw", false);
  } else if (type == "set_mode") {
    m.type = MessageType::kSetMode;
    const auto v = j.find("mode");
    if (v == j.end() || !v->is_string()) {
      throw ProtocolError("bad_field", "set_mode needs a string 'mode'");
    }
    try {
      m.mode = parse_control_mode(v->get<std::string>());
    } catch (const ConfigError& e) {
      throw ProtocolError("bad_field", e.what());
    }
  } else if (type == "reset") {
    m.type = MessageType::kReset;
    if (const auto c = j.find("course"); c != j.end()) {
      if (!c->is_string()) throw ProtocolError("bad_field", "reset 'course' must be a string");
      try {
        world::parse_course_code(c->get<std::string>());
      } catch (const ConfigError& e) {
        throw ProtocolError("bad_field", e.what());
      }
      m.course = c->get<std::string>();
    }
    if (const auto s = j.find("seed"); s != j.end()) {
      if (!s->is_number_unsigned()) {
        throw ProtocolError("bad_field", "reset 'seed' must be a non-negative integer");
      }
      m.seed = s->get<std::uint64_t>();
    }
  } else if (type == "ping") {
    m.type = MessageType::kPing;
    const auto n = j.find("nonce");
    m.nonce_json = n == j.end() ? "null" : n->dump();
  } else {
    throw ProtocolError("unknown_type", "unknown message type '" + type + "'");
  }
  return m;
}

std::string error_reply(const std::string& code, const std::string& message) {
  Json j;
  j["type"] = "error";
  j["code"] = code;
  j["message"] = message;
  return j.dump();
}

std::string frame_message(const sim::Episode& episode, std::uint64_t seq,
                          std::size_t scan_stride) {
  const plant::PlantState& s = episode.state();
  const sim::SimFrame& f = episode.last_frame();
  const sim::RunMetrics m = episode.metrics();
  Json j;
  j["type"] = "frame";
  j["schema_version"] = kSchemaVersion;
  j["seq"] = seq;
  j["time"] = episode.time();
  j["pose"] = {{"x", s.x_axis.p}, {"y", s.y_axis.p}, {"yaw", s.yaw}};
  j["lean"] = xy(s.x_axis.theta, s.y_axis.theta);
  j["velocity"] = xy(s.x_axis.v, s.y_axis.v);
  j["v_usr"] = xy(f.v_usr.x, f.v_usr.y);
  j["v_cmd"] = xy(f.v_cmd.x, f.v_cmd.y);
  j["force"] = xy(f.force.fx, f.force.fy);
  j["alarm_level"] = f.alarm_level;
  j["contact"] = f.contact;
  j["mode"] = std::string(to_string(episode.mode()));
  j["done"] = episode.done();
  j["metrics"] = {{"t_c", m.t_c},
                  {"c_t", m.c_t},
                  {"c_m", m.c_m},
                  {"c_i", m.c_i},
                  {"failed", m.failed},
                  {"min_clearance", m.min_clearance}};
  Json scan = Json::array();
  const auto& points = episode.scan().points;
  for (std::size_t i = 0; i < points.size(); i += scan_stride) {
    scan.push_back({points[i].bearing, points[i].range});
  }
  j["scan"] = std::move(scan);
  return j.dump();
}

// ---------------------------------------------------------------------------
// Recording

SessionRecorder::SessionRecorder(std::unique_ptr<std::ostream> sink,
                                 const sim::EpisodeConfig& cfg)
    : sink_(std::move(sink)) {
  io::ExperimentFile exp;
  exp.episode = cfg;
  Json header;
  header["type"] = "header";
  header["version"] = rider::kRecordingVersion;
  header["schema_version"] = kSchemaVersion;
  header["seed"] = cfg.seed;
  header["mode"] = std::string(to_string(cfg.mode));
  header["config"] = Json::parse(io::experiment_to_json(exp))["episode"];
  write(header.dump());
}

std::unique_ptr<SessionRecorder> SessionRecorder::open(const std::string& path,
                                                       const sim::EpisodeConfig& cfg) {
  auto file = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
  if (!*file) {
    spdlog::error("cannot open recording '{}'; continuing without it", path);
    return nullptr;
  }
  return std::make_unique<SessionRecorder>(std::move(file), cfg);
}

void SessionRecorder::write(const std::string& line) {
  if (!active_) return;
  *sink_ << line << '\n';
  sink_->flush();
  if (!*sink_) {
    active_ = false;
    spdlog::warn("recording write failed; recording stopped, session continues");
  }
}

void SessionRecorder::steer(double t, double ix, double iy, double yaw) {
  Json j;
  j["type"] = "steer";
  j["t"] = t;
  j["ix"] = ix;
  j["iy"] = iy;
  j["yaw"] = yaw;
  write(j.dump());
}

void SessionRecorder::mode(double t, ControlMode mode) {
  Json j;
  j["type"] = "mode";
  j["t"] = t;
  j["mode"] = std::string(to_string(mode));
  write(j.dump());
}

void SessionRecorder::reset(double t, const std::string& course, std::uint64_t seed) {
  Json j;
  j["type"] = "reset";
  j["t"] = t;
  j["course"] = course;
  j["seed"] = seed;
  write(j.dump());
}

void SessionRecorder::end(double t) {
  Json j;
  j["type"] = "end";
  j["t"] = t;
  write(j.dump());
}

// ---------------------------------------------------------------------------
// Server

namespace {

// Zero-order hold of the latest applied steer.
class LiveRider final : public rider::Rider {
 public:
  LiveRider(double k_lean, double max_yaw_rate) : k_lean_(k_lean), max_yaw_rate_(max_yaw_rate) {}
  void set(double ix, double iy, double yaw) {
    ix_ = ix;
    iy_ = iy;
    yaw_ = yaw;
  }
  rider::RiderCommand command(const rider::RiderObservation&) override {
    return rider::make_command(ix_, iy_, yaw_, k_lean_, max_yaw_rate_);
  }

 private:
  double k_lean_;
  double max_yaw_rate_;
  double ix_ = 0.0;
  double iy_ = 0.0;
  double yaw_ = 0.0;
};

enum class InboundKind { kSteer, kSetMode, kReset, kDriverLost };

struct Inbound {
  InboundKind kind;
  ClientMessage msg;
};

constexpr std::size_t kMaxQueuedFrames = 64;

}  // namespace

class Session;

struct Server::Impl {
  Impl(sim::EpisodeConfig c, ServerOptions o)
      : cfg(std::move(c)), opt(std::move(o)), rider(cfg.rider.k_lean, cfg.rider.max_yaw_rate) {}

  // Network thread.
  void do_accept();
  void handle(const std::shared_ptr<Session>& s, const std::string& text);
  void on_session_closed(const std::shared_ptr<Session>& s);
  void broadcast(const std::shared_ptr<const std::string>& msg);
  void push(Inbound in);

  // Simulation thread.
  void sim_loop();
  void tick();
  void apply(const Inbound& in);
  void publish_frame();
  void update_stats();

  sim::EpisodeConfig cfg;
  ServerOptions opt;

  net::io_context ioc{1};
  std::optional<net::executor_work_guard<net::io_context::executor_type>> work;
  std::optional<tcp::acceptor> acceptor;
  std::thread io_thread;
  std::promise<void> io_done;
  std::thread sim_thread;
  std::uint16_t bound_port = 0;
  bool started = false;
  bool stopped = false;

  std::mutex mu;
  std::condition_variable cv;
  std::deque<Inbound> inbound;
  std::atomic<bool> stopping{false};

  // Owned by the simulation thread once started.
  std::unique_ptr<sim::Episode> episode;
  LiveRider rider;
  std::unique_ptr<SessionRecorder> recorder;
  std::uint64_t seq = 0;
  double last_frame_time = -1.0;
  std::uint64_t ticks = 0;
  std::uint64_t frames_sent = 0;

  // Owned by the network thread.
  std::set<std::shared_ptr<Session>> sessions;
  std::shared_ptr<Session> driver;

  mutable std::mutex stats_mu;
  ServerStats stats;
};

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, Server::Impl& server)
      : ws_(std::move(socket)), server_(server) {}

  void start() {
    http::async_read(ws_.next_layer(), buffer_, request_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       self->on_request(ec);
                     });
  }

  void send(std::shared_ptr<const std::string> msg, bool droppable = false) {
    if (closed_ || closing_) return;
    if (droppable && queue_.size() >= kMaxQueuedFrames) return;
    queue_.push_back(std::move(msg));
    if (queue_.size() == 1) do_write();
  }

  void send(const std::string& msg) { send(std::make_shared<const std::string>(msg)); }

  // Drops the connection without a close handshake. Only valid once the
  // network thread has stopped.
  void abort() {
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

  // Sends a close frame once queued messages are out.
  void close() {
    if (closed_) return;
    if (!accepted_) {
      beast::error_code ec;
      ws_.next_layer().socket().close(ec);
      return;
    }
    closing_ = true;
    if (queue_.empty()) do_close();
  }

  bool hello = false;
  bool is_driver = false;

 private:
  void on_request(beast::error_code ec) {
    if (ec) return;
    if (!websocket::is_upgrade(request_) || request_.target() != "/session") {
      auto res = std::make_shared<http::response<http::string_body>>(http::status::not_found,
                                                                    request_.version());
      res->set(http::field::content_type, "text/plain");
      res->body() = "websocket endpoint is /session\n";
      res->prepare_payload();
      http::async_write(ws_.next_layer(), *res,
                        [self = shared_from_this(), res](beast::error_code, std::size_t) {
                          beast::error_code ignored;
                          self->ws_.next_layer().socket().shutdown(tcp::socket::shutdown_send,
                                                                   ignored);
                        });
      return;
    }
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(request_, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->accepted_ = true;
      self->server_.sessions.insert(self);
      self->do_read();
    });
  }

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->finish();
        return;
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->server_.handle(self, text);
      if (!self->closed_ && !self->closing_) self->do_read();
    });
  }

  void do_write() {
    ws_.text(true);
    ws_.async_write(net::buffer(*queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) {
                        self->finish();
                        return;
                      }
                      self->queue_.pop_front();
                      if (self->closed_) return;
                      if (!self->queue_.empty()) {
                        self->do_write();
                      } else if (self->closing_) {
                        self->do_close();
                      }
                    });
  }

  void do_close() {
    ws_.async_close(websocket::close_code::normal,
                    [self = shared_from_this()](beast::error_code) { self->finish(); });
  }

  void finish() {
    if (closed_) return;
    closed_ = true;
    queue_.clear();
    server_.on_session_closed(shared_from_this());
  }

  websocket::stream<beast::tcp_stream> ws_;
  Server::Impl& server_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  bool accepted_ = false;
  bool closing_ = false;
  bool closed_ = false;
};

void Server::Impl::do_accept() {
  acceptor->async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (!ec) std::make_shared<Session>(std::move(socket), *this)->start();
    if (acceptor->is_open()) do_accept();
  });
}

void Server::Impl::push(Inbound in) {
  std::lock_guard lock(mu);
  inbound.push_back(std::move(in));
}

void Server::Impl::handle(const std::shared_ptr<Session>& s, const std::string& text) {
  ClientMessage m;
  try {
    m = parse_client_message(text);
  } catch (const ProtocolError& e) {
    s->send(error_reply(e.code(), e.what()));
    return;
  }
  if (!s->hello) {
    if (m.type != MessageType::kHello) {
      s->send(error_reply("handshake_required", "send hello first"));
      return;
    }
    if (m.schema_version != kSchemaVersion) {
      s->send(error_reply("version_mismatch", "server speaks schema_version " +
                                                  std::to_string(kSchemaVersion)));
      s->close();
      return;
    }
    s->hello = true;
    if (!driver) {
      driver = s;
      s->is_driver = true;
    }
    Json welcome;
    welcome["type"] = "welcome";
    welcome["schema_version"] = kSchemaVersion;
    welcome["role"] = s->is_driver ? "driver" : "observer";
    {
      std::lock_guard lock(stats_mu);
      welcome["mode"] = std::string(to_string(stats.mode));
      stats.driver_connected = static_cast<bool>(driver);
      stats.connections = sessions.size();
    }
    spdlog::info("client joined as {}", s->is_driver ? "driver" : "observer");
    s->send(welcome.dump());
    return;
  }
  switch (m.type) {
    case MessageType::kHello:
      s->send(error_reply("bad_field", "hello already received"));
      return;
    case MessageType::kPing:
      s->send(R"({"type":"pong","nonce":)" + m.nonce_json + "}");
      return;
    case MessageType::kSteer:
    case MessageType::kSetMode:
    case MessageType::kReset:
      break;
  }
  if (!s->is_driver) {
    s->send(error_reply("not_driver", "observers cannot steer"));
    return;
  }
  if (m.type == MessageType::kSteer) {
    push({InboundKind::kSteer, m});
  } else if (m.type == MessageType::kSetMode) {
    push({InboundKind::kSetMode, m});
    s->send(Json{{"type", "ack"}, {"of", "set_mode"}, {"mode", std::string(to_string(m.mode))}}.dump());
  } else {
    push({InboundKind::kReset, m});
    s->send(Json{{"type", "ack"}, {"of", "reset"}}.dump());
  }
}

void Server::Impl::on_session_closed(const std::shared_ptr<Session>& s) {
  sessions.erase(s);
  if (driver == s) {
    driver.reset();
    // Dead-man: the next tick runs with zero intent.
    push({InboundKind::kDriverLost, {}});
    spdlog::info("driver disconnected; steering zeroed");
  }
  std::lock_guard lock(stats_mu);
  stats.driver_connected = static_cast<bool>(driver);
  stats.connections = sessions.size();
}

void Server::Impl::broadcast(const std::shared_ptr<const std::string>& msg) {
  for (const auto& s : sessions) {
    if (s->hello) s->send(msg, true);
  }
}

void Server::Impl::apply(const Inbound& in) {
  const double t = episode->time();
  switch (in.kind) {
    case InboundKind::kSteer:
      rider.set(in.msg.ix, in.msg.iy, in.msg.yaw);
      if (recorder) recorder->steer(t, in.msg.ix, in.msg.iy, in.msg.yaw);
      break;
    case InboundKind::kDriverLost:
      rider.set(0.0, 0.0, 0.0);
      if (recorder) recorder->steer(t, 0.0, 0.0, 0.0);
      break;
    case InboundKind::kSetMode:
      episode->set_mode(in.msg.mode);
      if (recorder) recorder->mode(t, in.msg.mode);
      break;
    case InboundKind::kReset: {
      sim::EpisodeConfig next = cfg;
      if (in.msg.course) {
        next.course = world::parse_course_code(*in.msg.course);
        next.course->robot_radius = next.robot_radius;
        next.wall.reset();
      }
      if (in.msg.seed) next.seed = *in.msg.seed;
      const std::string code = next.course ? next.course->code() : "WALL";
      if (recorder) {
        recorder->reset(t, code, next.seed);
        recorder.reset();
      }
      episode = std::make_unique<sim::Episode>(next);
      cfg = next;
      rider.set(0.0, 0.0, 0.0);
      ticks = 0;
      last_frame_time = -1.0;
      spdlog::info("session reset to {} seed {}", code, next.seed);
      break;
    }
  }
}

void Server::Impl::tick() {
  std::deque<Inbound> pending;
  {
    std::lock_guard lock(mu);
    pending.swap(inbound);
  }
  for (const Inbound& in : pending) apply(in);
  if (!episode->done()) {
    episode->advance(rider);
    ++ticks;
  }
}

void Server::Impl::publish_frame() {
  const double t = episode->time();
  // Frame times strictly increase; a paused or finished episode sends none.
  if (!(t > last_frame_time)) return;
  last_frame_time = t;
  auto msg = std::make_shared<const std::string>(frame_message(*episode, seq++, opt.scan_stride));
  ++frames_sent;
  net::post(ioc, [this, msg] { broadcast(msg); });
}

void Server::Impl::update_stats() {
  std::lock_guard lock(stats_mu);
  stats.ticks = ticks;
  stats.time = episode->time();
  stats.mode = episode->mode();
  stats.frames_sent = frames_sent;
  stats.recording = recorder && recorder->active();
  stats.done = episode->done();
  stats.metrics = episode->metrics();
  stats.state = episode->state();
}

void Server::Impl::sim_loop() {
  using Clock = std::chrono::steady_clock;
  const auto tick_period = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(1.0 / (cfg.rates.shared_hz * opt.realtime_factor)));
  const auto frame_period = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(1.0 / opt.stream_hz));
  auto next_tick = Clock::now();
  auto next_frame = next_tick;
  while (!stopping) {
    const auto now = Clock::now();
    int steps = 0;
    while (now >= next_tick && steps < opt.max_catch_up_ticks) {
      try {
        tick();
      } catch (const std::exception& e) {
        // A numeric abort ends the episode; the session stays up for a reset.
        spdlog::error("simulation error: {}", e.what());
      }
      next_tick += tick_period;
      ++steps;
    }
    if (now >= next_tick) next_tick = now;  // drop the backlog
    if (now >= next_frame) {
      publish_frame();
      next_frame += frame_period;
      if (next_frame <= now) next_frame = now + frame_period;
    }
    update_stats();
    std::unique_lock lock(mu);
    cv.wait_until(lock, std::min(next_tick, next_frame), [this] { return stopping.load(); });
  }
  if (recorder) recorder->end(episode->time());
  update_stats();
}

Server::Server(sim::EpisodeConfig cfg, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(cfg), std::move(options))) {
  impl_->opt.validate();
  impl_->episode = std::make_unique<sim::Episode>(impl_->cfg);
  impl_->stats.mode = impl_->cfg.mode;
}

Server::~Server() { stop(); }

void Server::start() {
  Impl& s = *impl_;
  if (s.started) return;
  beast::error_code ec;
  const auto address = net::ip::make_address(s.opt.address, ec);
  if (ec) throw ConfigError("invalid address '" + s.opt.address + "'", "address");
  const tcp::endpoint endpoint(address, s.opt.port);
  s.acceptor.emplace(s.ioc);
  s.acceptor->open(endpoint.protocol(), ec);
  if (!ec) s.acceptor->set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) s.acceptor->bind(endpoint, ec);
  if (ec == net::error::address_in_use || ec == net::error::access_denied) {
    throw PortBusyError("port " + std::to_string(s.opt.port) + " is unavailable: " + ec.message());
  }
  if (!ec) s.acceptor->listen(net::socket_base::max_listen_connections, ec);
  if (ec) throw PortBusyError("cannot listen on port " + std::to_string(s.opt.port) + ": " +
                              ec.message());
  s.bound_port = s.acceptor->local_endpoint().port();
  if (!s.opt.record_path.empty()) s.recorder = SessionRecorder::open(s.opt.record_path, s.cfg);

  s.work.emplace(s.ioc.get_executor());
  s.do_accept();
  s.io_thread = std::thread([&s] {
    s.ioc.run();
    s.io_done.set_value();
  });
  s.started = true;
  s.update_stats();
  s.sim_thread = std::thread([&s] { s.sim_loop(); });
  spdlog::info("session server listening on {}:{}/session", s.opt.address, s.bound_port);
}

void Server::stop() {
  Impl& s = *impl_;
  if (!s.started || s.stopped) return;
  s.stopped = true;
  {
    std::lock_guard lock(s.mu);
    s.stopping = true;
  }
  s.cv.notify_all();
  s.sim_thread.join();

  net::post(s.ioc, [&s] {
    beast::error_code ec;
    s.acceptor->close(ec);
    for (const auto& session : std::vector(s.sessions.begin(), s.sessions.end())) {
      session->close();
    }
  });
  s.work.reset();
  // Give peers a moment to answer the close handshake, then cut them off.
  if (s.io_done.get_future().wait_for(std::chrono::seconds(1)) != std::future_status::ready) {
    s.ioc.stop();
  }
  s.io_thread.join();
  // Peers that never finished the close handshake are cut off here rather
  // than when the server object goes away.
  for (const auto& session : s.sessions) session->abort();
  s.sessions.clear();
  s.driver.reset();
  spdlog::info("session server stopped");
}

std::uint16_t Server::port() const { return impl_->bound_port; }

ServerStats Server::stats() const {
  std::lock_guard lock(impl_->stats_mu);
  return impl_->stats;
}

}  // namespace papf::bridge
