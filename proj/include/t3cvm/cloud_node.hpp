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

#ifndef T3CVM_CLOUD_NODE_HPP_
#define T3CVM_CLOUD_NODE_HPP_

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "t3cvm/channel.hpp"
#include "t3cvm/crypto.hpp"
#include "t3cvm/image.hpp"
#include "t3cvm/node_link.hpp"
#include "t3cvm/result.hpp"
#include "t3cvm/trace.hpp"
#include "t3cvm/verifier.hpp"
#include "t3cvm/vtpm.hpp"
#include "t3cvm/wire.hpp"

namespace t3cvm::cloud {

enum class AdversaryFlag : std::uint8_t {
  kTamperImage = 1,
  kSwapStateFile,
  kReplayStateFile,
  kRedirectVtpm,
  kTamperChannel,
  kEavesdropChannel,
};

const char* adversary_flag_name(AdversaryFlag flag);
Result<AdversaryFlag> adversary_flag_from_name(std::string_view name);

// Threat-model hooks. Each flag fires deterministically at its documented
// protocol step; the node's relay position makes them possible.
struct AdversaryConfig {
  std::set<AdversaryFlag> flags;
  // kSwapStateFile: whose sealed state is substituted in.
  std::string swap_source_acvm;
  // kTamperChannel: substring of the link name to corrupt ("boot", "tpm").
  std::string tamper_link = "boot";
  // kTamperImage: which guest kind's image gets flipped before measurement.
  wire::GuestKind tamper_image_target = wire::GuestKind::kTpmcvm;

  bool has(AdversaryFlag flag) const { return flags.count(flag) != 0; }
};

// Root surrogate standing in for the silicon vendor's key hierarchy.
class AmdAuthority {
 public:
  AmdAuthority();

  const crypto::Certificate& root_certificate() const { return root_cert_; }

  struct PlatformCredentials {
    crypto::KeyPair platform_key;
    std::vector<crypto::Certificate> chain;  // root, platform
  };
  PlatformCredentials issue_platform(const std::string& platform_name) const;

 private:
  crypto::KeyPair root_;
  crypto::Certificate root_cert_;
};

// Credentials the scenario grants the rogue vTPM host. With a certified
// (stolen) CN-TPMCVM root the rogue's EK chain verifies and the verifier
// must fall through to the binding-proof check; without it the chain check
// already rejects the bundle.
struct RogueSetup {
  std::optional<crypto::KeyPair> certified_root;
  crypto::Certificate certified_root_cert;
  std::vector<crypto::Certificate> issuer_chain;
  std::optional<vtpm::PcrBank> leaked_bank;  // "copies PCR values" variant
  std::uint64_t assumed_counter = 0;
};

// The untrusted Cloud Node: hypervisor launch/bind surface, a mock AMD
// secure processor, guest actors for launched CVMs, and every adversary
// hook. It never refuses an operation for security reasons; detecting
// mischief is the manager's and verifier's job.
class CloudNode {
 public:
  struct Guest;
  struct Rogue;

  CloudNode(AmdAuthority::PlatformCredentials platform,
            AdversaryConfig adversary, trace::Trace& trace);
  ~CloudNode();

  CloudNode(const CloudNode&) = delete;
  CloudNode& operator=(const CloudNode&) = delete;

  // Control surface (the in-process NodeLink and the TCP control server both
  // land here).
  std::vector<crypto::Certificate> platform_chain() const;
  Result<wire::LaunchCvmResult> launch_cvm(const std::string& cvm_id,
                                           wire::GuestKind kind,
                                           ConstSpan image_bytes);
  Result<void> inject_secret(const std::string& cvm_id, ConstSpan godh_public,
                             ConstSpan sealed);
  Result<net::ChannelPtr> open_guest_channel(const std::string& cvm_id);
  Result<void> bind_vtpm(const std::string& acvm_id,
                         const std::string& tpmcvm_id);
  Result<net::ChannelPtr> open_user_channel(const std::string& acvm_id);
  Result<void> destroy_cvm(const std::string& cvm_id);

  void arm_rogue(RogueSetup setup);

  // Loopback-TCP control endpoint; serves one manager connection.
  Result<std::uint16_t> start_control_server();

  trace::Trace& node_trace() { return trace_; }

 private:
  net::TapFn make_tap();
  void apply_adversary(const std::string& link, const std::string& direction,
                       net::Frame& frame);
  void record_frame(const std::string& link, const std::string& direction,
                    const net::Frame& frame);
  void control_serve(net::ChannelPtr channel);
  wire::ControlResponse handle_control(const wire::ControlRequest& request);

  AmdAuthority::PlatformCredentials platform_;
  AdversaryConfig adversary_;
  trace::Trace& trace_;

  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Guest>> guests_;
  std::shared_ptr<Rogue> rogue_;
  std::optional<RogueSetup> rogue_setup_;

  // Sealed-state history per ACVM, oldest first, for swap/replay hooks.
  std::map<std::string, std::vector<Bytes>> state_history_;
  bool tamper_fired_ = false;

  bool tcp_mode_ = false;
  std::optional<net::TcpListener> control_listener_;
  std::thread control_thread_;
  std::vector<std::unique_ptr<net::Relay>> relays_;
  std::vector<std::unique_ptr<net::TcpListener>> channel_listeners_;
  std::vector<std::thread> channel_accept_threads_;
  std::atomic<bool> stopping_{false};
};

class InprocNodeLink : public NodeLink {
 public:
  explicit InprocNodeLink(CloudNode& node) : node_(node) {}

  Result<std::vector<crypto::Certificate>> platform_chain() override;
  Result<wire::LaunchCvmResult> launch_cvm(const std::string& cvm_id,
                                           wire::GuestKind kind,
                                           ConstSpan image_bytes) override;
  Result<void> inject_secret(const std::string& cvm_id, ConstSpan godh_public,
                             ConstSpan sealed) override;
  Result<net::ChannelPtr> open_guest_channel(
      const std::string& cvm_id) override;
  Result<void> bind_vtpm(const std::string& acvm_id,
                         const std::string& tpmcvm_id) override;
  Result<net::ChannelPtr> open_user_channel(
      const std::string& acvm_id) override;
  Result<void> destroy_cvm(const std::string& cvm_id) override;

 private:
  CloudNode& node_;
};

class TcpNodeLink : public NodeLink {
 public:
  static Result<std::unique_ptr<TcpNodeLink>> connect(
      std::uint16_t control_port);

  Result<std::vector<crypto::Certificate>> platform_chain() override;
  Result<wire::LaunchCvmResult> launch_cvm(const std::string& cvm_id,
                                           wire::GuestKind kind,
                                           ConstSpan image_bytes) override;
  Result<void> inject_secret(const std::string& cvm_id, ConstSpan godh_public,
                             ConstSpan sealed) override;
  Result<net::ChannelPtr> open_guest_channel(
      const std::string& cvm_id) override;
  Result<void> bind_vtpm(const std::string& acvm_id,
                         const std::string& tpmcvm_id) override;
  Result<net::ChannelPtr> open_user_channel(
      const std::string& acvm_id) override;
  Result<void> destroy_cvm(const std::string& cvm_id) override;

 private:
  explicit TcpNodeLink(net::ChannelPtr control) : control_(std::move(control)) {}

  Result<wire::ControlResponse> roundtrip(const wire::ControlRequest& request);
  Result<net::ChannelPtr> open_port_channel(wire::NodeOp op,
                                            const std::string& id);

  net::ChannelPtr control_;
  std::mutex mu_;
};

}  // namespace t3cvm::cloud

#endif  // T3CVM_CLOUD_NODE_HPP_
