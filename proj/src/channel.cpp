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

#include "t3cvm/channel.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>

namespace t3cvm::net {

namespace {

// Shared state for one in-process link: one queue per direction.
struct InprocShared {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Frame> queues[2];
  bool closed = false;
  std::string link;
  TapFn tap;
};

class InprocChannel : public Channel {
 public:
  InprocChannel(std::shared_ptr<InprocShared> shared, int side)
      : shared_(std::move(shared)), side_(side) {}

  ~InprocChannel() override { close(); }

  bool send(const Frame& frame) override {
    Frame out = frame;
    if (shared_->tap) {
      shared_->tap(shared_->link, side_ == 0 ? "a->b" : "b->a", out);
    }
    std::lock_guard<std::mutex> lock(shared_->mu);
    if (shared_->closed) return false;
    shared_->queues[1 - side_].push_back(std::move(out));
    shared_->cv.notify_all();
    return true;
  }

  std::optional<Frame> recv(std::chrono::milliseconds timeout) override {
    std::unique_lock<std::mutex> lock(shared_->mu);
    auto& queue = shared_->queues[side_];
    if (!shared_->cv.wait_for(lock, timeout, [&] {
          return !queue.empty() || shared_->closed;
        })) {
      return std::nullopt;
    }
    if (queue.empty()) return std::nullopt;  // closed
    Frame frame = std::move(queue.front());
    queue.pop_front();
    return frame;
  }

  void close() override {
    std::lock_guard<std::mutex> lock(shared_->mu);
    shared_->closed = true;
    shared_->cv.notify_all();
  }

  bool closed() const override {
    std::lock_guard<std::mutex> lock(shared_->mu);
    return shared_->closed;
  }

 private:
  std::shared_ptr<InprocShared> shared_;
  int side_;
};

class TcpChannel : public Channel {
 public:
  explicit TcpChannel(int fd) : fd_(fd) {
    int flag = 1;
    setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &flag, sizeof(flag));
  }

  ~TcpChannel() override { close(); }

  bool send(const Frame& frame) override {
    std::lock_guard<std::mutex> lock(send_mu_);
    if (fd_ < 0) return false;
    std::uint8_t header[6];
    std::uint32_t len = static_cast<std::uint32_t>(frame.payload.size());
    header[0] = static_cast<std::uint8_t>(len >> 24);
    header[1] = static_cast<std::uint8_t>(len >> 16);
    header[2] = static_cast<std::uint8_t>(len >> 8);
    header[3] = static_cast<std::uint8_t>(len);
    header[4] = frame.type;
    header[5] = frame.version;
    return write_all(header, sizeof(header)) &&
           write_all(frame.payload.data(), frame.payload.size());
  }

  std::optional<Frame> recv(std::chrono::milliseconds timeout) override {
    std::lock_guard<std::mutex> lock(recv_mu_);
    std::uint8_t header[6];
    if (!read_all(header, sizeof(header), timeout)) return std::nullopt;
    std::uint32_t len = (static_cast<std::uint32_t>(header[0]) << 24) |
                        (static_cast<std::uint32_t>(header[1]) << 16) |
                        (static_cast<std::uint32_t>(header[2]) << 8) |
                        static_cast<std::uint32_t>(header[3]);
    if (len > (64u << 20)) return std::nullopt;  // oversized frame
    Frame frame;
    frame.type = header[4];
    frame.version = header[5];
    frame.payload.resize(len);
    if (!read_all(frame.payload.data(), len, timeout)) return std::nullopt;
    return frame;
  }

  void close() override {
    int fd = fd_.exchange(-1);
    if (fd >= 0) {
      ::shutdown(fd, SHUT_RDWR);
      ::close(fd);
    }
  }

  bool closed() const override { return fd_ < 0 || dead_; }

 private:
  bool write_all(const std::uint8_t* data, std::size_t size) {
    std::size_t sent = 0;
    while (sent < size) {
      ssize_t n = ::send(fd_, data + sent, size - sent, MSG_NOSIGNAL);
      if (n <= 0) {
        dead_ = true;
        return false;
      }
      sent += static_cast<std::size_t>(n);
    }
    return true;
  }

  bool read_all(std::uint8_t* data, std::size_t size,
                std::chrono::milliseconds timeout) {
    std::size_t got = 0;
    auto deadline = std::chrono::steady_clock::now() + timeout;
    while (got < size) {
      int fd = fd_;
      if (fd < 0) return false;
      auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (remaining.count() <= 0) return false;
      pollfd pfd{fd, POLLIN, 0};
      int rc = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
      if (rc < 0) return false;
      if (rc == 0) continue;  // poll timeout slice; deadline loop re-checks
      ssize_t n = ::recv(fd, data + got, size - got, 0);
      if (n <= 0) {
        dead_ = true;
        return false;
      }
      got += static_cast<std::size_t>(n);
    }
    return true;
  }

  std::atomic<int> fd_;
  std::atomic<bool> dead_{false};
  std::mutex send_mu_;
  std::mutex recv_mu_;
};

}  // namespace

std::pair<ChannelPtr, ChannelPtr> make_inproc_pair(std::string link_name,
                                                   TapFn tap) {
  auto shared = std::make_shared<InprocShared>();
  shared->link = std::move(link_name);
  shared->tap = std::move(tap);
  return {std::make_shared<InprocChannel>(shared, 0),
          std::make_shared<InprocChannel>(shared, 1)};
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

TcpListener::TcpListener(TcpListener&& other) noexcept
    : fd_(other.fd_), port_(other.port_) {
  other.fd_ = -1;
}

Result<TcpListener> TcpListener::bind_loopback() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return {Err::kUnavailable, "socket() failed"};
  int opt = 1;
  setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &opt, sizeof(opt));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(fd, 8) != 0) {
    ::close(fd);
    return {Err::kUnavailable, "bind/listen failed"};
  }
  socklen_t addr_len = sizeof(addr);
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &addr_len) != 0) {
    ::close(fd);
    return {Err::kUnavailable, "getsockname failed"};
  }
  return TcpListener(fd, ntohs(addr.sin_port));
}

Result<ChannelPtr> TcpListener::accept(std::chrono::milliseconds timeout) {
  pollfd pfd{fd_, POLLIN, 0};
  int rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
  if (rc <= 0) return {Err::kTimeout, "accept timed out"};
  int client = ::accept(fd_, nullptr, nullptr);
  if (client < 0) return {Err::kUnavailable, "accept failed"};
  return ChannelPtr(std::make_shared<TcpChannel>(client));
}

Result<ChannelPtr> tcp_connect(std::uint16_t port,
                               std::chrono::milliseconds timeout) {
  (void)timeout;  // loopback connects resolve immediately
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return {Err::kUnavailable, "socket() failed"};
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    return {Err::kUnavailable, "connect failed"};
  }
  return ChannelPtr(std::make_shared<TcpChannel>(fd));
}

Relay::Relay(ChannelPtr a, ChannelPtr b, std::string link_name, TapFn tap)
    : link_(std::move(link_name)),
      tap_(std::move(tap)),
      a_(std::move(a)),
      b_(std::move(b)) {
  forward_ = std::thread([this] { pump(a_, b_, "a->b"); });
  backward_ = std::thread([this] { pump(b_, a_, "b->a"); });
}

Relay::~Relay() {
  stop();
  if (forward_.joinable()) forward_.join();
  if (backward_.joinable()) backward_.join();
}

void Relay::stop() {
  a_->close();
  b_->close();
}

void Relay::pump(ChannelPtr from, ChannelPtr to, std::string direction) {
  for (;;) {
    auto frame = from->recv(std::chrono::milliseconds(100));
    if (!frame) {
      if (from->closed() || to->closed()) {
        from->close();
        to->close();
        return;
      }
      continue;  // idle
    }
    if (tap_) tap_(link_, direction, *frame);
    if (!to->send(*frame)) return;
  }
}

}  // namespace t3cvm::net
