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

#ifndef PAPF_BRIDGE_HPP_
#define PAPF_BRIDGE_HPP_

// Live session server. A websocket endpoint at /session streams simulation
// frames and takes steering from one driver; everyone else observes.
//
// Threads: one simulation thread owns the Episode and all mutable session
// state; one network thread owns the sockets. They talk through an inbound
// command queue and posted outbound frames only.
//
// Protocol (JSON text frames, one object each):
//   client -> server  {"type":"hello","schema_version":1}      must come first
//                     {"type":"steer","ix":..,"iy":..,"yaw":..}  driver only
//                     {"type":"set_mode","mode":"papf-tracking"} driver only
//                     {"type":"reset","course":"STN","seed":7}   driver only
//                     {"type":"ping","nonce":<any>}
//   server -> client  welcome, frame, pong, ack, error

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "papf/sim.hpp"

namespace papf::bridge {

inline constexpr int kSchemaVersion = 1;

class PortBusyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A message the server could not accept. `code` goes into the error reply.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

struct ServerOptions {
  std::string address = "127.0.0.1";
  std::uint16_t port = 8765;  // 0 binds an ephemeral port
  double stream_hz = 30.0;
  // Simulated seconds per wall-clock second.
  double realtime_factor = 1.0;
  // Shared-control ticks allowed per loop pass when behind schedule; the
  // rest of the backlog is dropped.
  int max_catch_up_ticks = 5;
  // Every n-th scan return goes into a frame.
  std::size_t scan_stride = 10;
  // JSON-lines command log; empty disables recording.
  std::string record_path;

  void validate() const;
};

enum class MessageType { kHello, kSteer, kSetMode, kReset, kPing };

struct ClientMessage {
  MessageType type = MessageType::kPing;
  int schema_version = 0;
  // Steering, already clamped to [-1, 1].
  double ix = 0.0;
  double iy = 0.0;
  double yaw = 0.0;
  ControlMode mode = ControlMode::kNoSharedControl;
  std::optional<std::string> course;  // course code for reset
  std::optional<std::uint64_t> seed;
  std::string nonce_json;  // ping payload, echoed verbatim
};

// Throws ProtocolError with code "bad_json", "unknown_type" or "bad_field".
ClientMessage parse_client_message(std::string_view text);

std::string error_reply(const std::string& code, const std::string& message);

// ServerFrame for the episode's current state.
std::string frame_message(const sim::Episode& episode, std::uint64_t seq,
                          std::size_t scan_stride);

// Command log writer. Lines follow the recording format read by
// rider::parse_recording. The first failed write disables the recorder; the
// session itself carries on.
class SessionRecorder {
 public:
  SessionRecorder(std::unique_ptr<std::ostream> sink, const sim::EpisodeConfig& cfg);
  static std::unique_ptr<SessionRecorder> open(const std::string& path,
                                               const sim::EpisodeConfig& cfg);

  void steer(double t, double ix, double iy, double yaw);
  void mode(double t, ControlMode mode);
  // A reset ends the replayable part of the log.
  void reset(double t, const std::string& course, std::uint64_t seed);
  void end(double t);
  bool active() const { return active_; }

 private:
  void write(const std::string& line);

  std::unique_ptr<std::ostream> sink_;
  bool active_ = true;
};

struct ServerStats {
  std::uint64_t ticks = 0;  // shared-control ticks since the last reset
  double time = 0.0;
  ControlMode mode = ControlMode::kNoSharedControl;
  bool driver_connected = false;
  std::size_t connections = 0;
  std::uint64_t frames_sent = 0;
  bool recording = false;
  bool done = false;
  sim::RunMetrics metrics;
  plant::PlantState state;
};

class Server {
 public:
  // Throws ConfigError when the config or options are invalid.
  Server(sim::EpisodeConfig cfg, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and starts both threads. Throws PortBusyError when the port is
  // taken.
  void start();
  // Idempotent. Flushes the recording with an end line.
  void stop();

  std::uint16_t port() const;
  ServerStats stats() const;

 private:
  friend class Session;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace papf::bridge

#endif  // PAPF_BRIDGE_HPP_
