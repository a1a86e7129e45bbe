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

#ifndef T3CVM_WIRE_HPP_
#define T3CVM_WIRE_HPP_

#include <string>
#include <vector>

#include "t3cvm/channel.hpp"
#include "t3cvm/common.hpp"
#include "t3cvm/crypto.hpp"
#include "t3cvm/event_log.hpp"
#include "t3cvm/result.hpp"

// Frame payload grammar for every link in the system. Byte-exact layouts are
// documented in docs/protocol.md; everything here uses the canonical
// length-prefixed encoding from encode.hpp.
namespace t3cvm::wire {

enum class FrameType : std::uint8_t {
  kControlReq = 1,
  kControlResp,
  kMeasureEvent,   // sealed boot measurement, guest -> manager
  kBootComplete,   // sealed end-of-boot marker
  kTlsHs1,
  kTlsHs2,
  kTlsRecord,
  kStateTransfer,  // sealed vTPM state blob, plaintext-visible ciphertext
  kWrappedCmd,     // session-key wrapped TPM command
  kWrappedResp,
  kUserReq,
  kUserResp,
};

// ---- Sealed envelope (measurement stream, injection payloads) ----

// {sender_id, sequence, AEAD blob}; the AAD binds a context label, the
// sender identity and the sequence number.
struct SealedEnvelope {
  std::string sender_id;
  std::uint64_t sequence = 0;
  Bytes blob;

  Bytes encode() const;
  static Result<SealedEnvelope> decode(ConstSpan data);
};

Bytes envelope_aad(std::string_view context, const std::string& sender_id,
                   std::uint64_t sequence);

// Plaintext carried by a kMeasureEvent envelope.
struct MeasureEventBody {
  boot::Stage stage = boot::Stage::kUefi;
  std::string description;
  crypto::Digest measurement;

  Bytes encode() const;
  static Result<MeasureEventBody> decode(ConstSpan data);
};

// Plaintext carried by a kBootComplete envelope.
struct BootCompleteBody {
  std::uint64_t event_count = 0;

  Bytes encode() const;
  static Result<BootCompleteBody> decode(ConstSpan data);
};

// ---- Secret injection ----

inline constexpr std::uint8_t kInjectTpmcvmKeys = 1;
inline constexpr std::uint8_t kInjectSessionKey = 2;

Bytes injection_aad(const std::string& cvm_id);

// Transport key for one injection, derived by both the guest owner and the
// in-guest firmware surrogate from the GODH/launch-key X25519 agreement.
crypto::SymmetricKey injection_channel_key(ConstSpan dh_shared_secret,
                                           const std::string& cvm_id);

// Transcript the platform identity key signs over a per-launch DH public
// key, binding it to the launched CVM.
Bytes launch_dh_transcript(const std::string& cvm_id, ConstSpan dh_public);

struct InjectionBody {
  std::uint8_t purpose = 0;
  Bytes key1;  // image key or session key
  Bytes key2;  // measure key (kInjectTpmcvmKeys only)

  Bytes encode() const;
  static Result<InjectionBody> decode(ConstSpan data);
};

// ---- Manager <-> CN-MvTPM management records (inside the TLS channel) ----

enum class MgmtOp : std::uint8_t {
  kDeployRoot = 1,
  kVmKeyAndState,
  kSessionKey,
  kBindingHmacRequest,
  kBindingHmacResponse,
  kBindResult,
  kTeardown,
  kTeardownResult,
  kAck,
};

struct MgmtRecord {
  MgmtOp op;
  Bytes body;

  Bytes encode() const;
  static Result<MgmtRecord> decode(ConstSpan data);
};

struct DeployRootBody {
  Bytes root_pair;  // crypto::KeyPair::encode
  crypto::Certificate rk_certificate;
  std::vector<crypto::Certificate> issuer_chain;  // trust anchor down to MRK

  Bytes encode() const;
  static Result<DeployRootBody> decode(ConstSpan data);
};

struct VmKeyAndStateBody {
  std::string acvm_id;
  Bytes vm_key;
  std::uint64_t expected_counter = 0;
  bool fresh = false;  // no prior sealed state exists
  crypto::Digest init_measurement;

  Bytes encode() const;
  static Result<VmKeyAndStateBody> decode(ConstSpan data);
};

struct SessionKeyBody {
  std::string acvm_id;
  Bytes session_key;

  Bytes encode() const;
  static Result<SessionKeyBody> decode(ConstSpan data);
};

struct AcvmRef {
  std::string acvm_id;

  Bytes encode() const;
  static Result<AcvmRef> decode(ConstSpan data);
};

struct BindingHmacResponseBody {
  std::string acvm_id;
  crypto::Digest binding_hmac;

  Bytes encode() const;
  static Result<BindingHmacResponseBody> decode(ConstSpan data);
};

struct StatusBody {
  std::string acvm_id;
  bool ok = false;
  Err error = Err::kRefused;
  std::string detail;
  std::uint64_t counter = 0;  // teardown result: counter the state was sealed under

  Bytes encode() const;
  static Result<StatusBody> decode(ConstSpan data);
};

// ---- Plain state transfer frame ----

struct StateTransferBody {
  std::string acvm_id;
  Bytes sealed_state;

  Bytes encode() const;
  static Result<StateTransferBody> decode(ConstSpan data);
};

// ---- Session-key wrapped TPM command frames ----

inline constexpr std::uint8_t kDirCommand = 0;
inline constexpr std::uint8_t kDirResponse = 1;

struct WrappedFrameBody {
  std::string acvm_id;
  std::uint8_t direction = kDirCommand;
  std::uint64_t sequence = 0;
  Bytes blob;

  Bytes encode() const;
  static Result<WrappedFrameBody> decode(ConstSpan data);
};

Bytes wrapped_aad(const std::string& acvm_id, std::uint8_t direction,
                  std::uint64_t sequence);

// ---- User <-> ACVM requests ----

enum class UserOp : std::uint8_t {
  kWaitBooted = 1,
  kCollectEvidence,
  kGetBootView,  // the vTPM's raw extend history, for replay oracles
};

struct UserRequest {
  UserOp op;
  Bytes nonce;  // kCollectEvidence: verifier challenge

  Bytes encode() const;
  static Result<UserRequest> decode(ConstSpan data);
};

struct UserResponse {
  bool ok = false;
  std::string detail;
  Bytes body;  // kCollectEvidence: evidence JSON

  Bytes encode() const;
  static Result<UserResponse> decode(ConstSpan data);
};

// ---- Cloud-node control protocol ----

enum class NodeOp : std::uint8_t {
  kGetPlatform = 1,
  kLaunchCvm,
  kInjectSecret,
  kBindVtpm,
  kOpenGuestChannel,
  kOpenUserChannel,
  kDestroyCvm,
};

enum class GuestKind : std::uint8_t {
  kTpmcvm = 1,
  kAcvm,
};

struct ControlRequest {
  NodeOp op;
  std::string cvm_id;      // primary subject
  std::string peer_id;     // kBindVtpm: tpmcvm id
  std::uint8_t kind = 0;   // GuestKind or channel purpose
  Bytes data1;             // image / godh pub
  Bytes data2;             // sealed injection blob

  Bytes encode() const;
  static Result<ControlRequest> decode(ConstSpan data);
};

struct ControlResponse {
  bool ok = false;
  Err error = Err::kRefused;
  std::string detail;
  Bytes body;

  Bytes encode() const;
  static Result<ControlResponse> decode(ConstSpan data);
};

struct LaunchCvmResult {
  crypto::Digest init_measurement;
  Bytes launch_dh_public;   // per-launch platform DH key
  Bytes launch_dh_signature;  // by the platform identity key

  Bytes encode() const;
  static Result<LaunchCvmResult> decode(ConstSpan data);
};

Bytes encode_cert_list(const std::vector<crypto::Certificate>& certs);
Result<std::vector<crypto::Certificate>> decode_cert_list(ConstSpan data);

// Single request/response turn on a channel, filtering for the expected
// frame type.
Result<net::Frame> request_response(net::Channel& channel,
                                    const net::Frame& request,
                                    std::uint8_t expected_type,
                                    std::chrono::milliseconds timeout);

}  // namespace t3cvm::wire

#endif  // T3CVM_WIRE_HPP_
