// Copyright 2026 The T3CVM Simulator Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef T3CVM_CHANNEL_HPP_
#define T3CVM_CHANNEL_HPP_

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "t3cvm/common.hpp"
#include "t3cvm/result.hpp"

namespace t3cvm::net {

inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr auto kDefaultTimeout = std::chrono::milliseconds(5000);

// Wire frame: 4-byte big-endian payload length, 1-byte type, 1-byte version,
// payload. The same framing runs over in-process queues and loopback TCP.
struct Frame {
  std::uint8_t type = 0;
  std::uint8_t version = kWireVersion;
  Bytes payload;
};

class Channel {
 public:
  virtual ~Channel() = default;

  // Returns false once the channel is closed.
  virtual bool send(const Frame& frame) = 0;
  // Blocks up to `timeout`; nullopt on timeout or close.
  virtual std::optional<Frame> recv(
      std::chrono::milliseconds timeout = kDefaultTimeout) = 0;
  virtual void close() = 0;
  virtual bool closed() const = 0;
};

using ChannelPtr = std::shared_ptr<Channel>;

// Observation/tampering hook applied to every frame crossing a link, in
// send order. `link` names the link, `direction` is "a->b" or "b->a". The
// hook may mutate the frame in place.
using TapFn =
    std::function<void(const std::string& link, const std::string& direction,
                       Frame& frame)>;

// Connected pair of in-process endpoints. If `tap` is set it runs on the
// sender's thread before the frame is enqueued, modeling an on-path
// adversary position.
std::pair<ChannelPtr, ChannelPtr> make_inproc_pair(std::string link_name = "",
                                                   TapFn tap = nullptr);

// Loopback TCP with the same frame format.
class TcpListener {
 public:
  ~TcpListener();
  TcpListener(TcpListener&& other) noexcept;
  TcpListener& operator=(TcpListener&&) = delete;

  static Result<TcpListener> bind_loopback();
  std::uint16_t port() const { return port_; }
  Result<ChannelPtr> accept(
      std::chrono::milliseconds timeout = kDefaultTimeout);

 private:
  TcpListener(int fd, std::uint16_t port) : fd_(fd), port_(port) {}
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

Result<ChannelPtr> tcp_connect(std::uint16_t port,
                               std::chrono::milliseconds timeout =
                                   kDefaultTimeout);

// Bidirectional frame pump between two endpoints, through a tap. Used by the
// cloud node to stand between a TCP peer and an in-process guest endpoint.
class Relay {
 public:
  Relay(ChannelPtr a, ChannelPtr b, std::string link_name, TapFn tap);
  ~Relay();

  Relay(const Relay&) = delete;
  Relay& operator=(const Relay&) = delete;

  void stop();

 private:
  void pump(ChannelPtr from, ChannelPtr to, std::string direction);

  std::string link_;
  TapFn tap_;
  ChannelPtr a_;
  ChannelPtr b_;
  std::thread forward_;
  std::thread backward_;
};

}  // namespace t3cvm::net

#endif  // T3CVM_CHANNEL_HPP_
