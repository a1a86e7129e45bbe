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

#include "t3cvm/wire.hpp"

#include "t3cvm/encode.hpp"

namespace t3cvm::wire {

Bytes SealedEnvelope::encode() const {
  Encoder enc;
  enc.put_str(sender_id).put_u64(sequence).put_bytes(blob);
  return enc.take();
}

Result<SealedEnvelope> SealedEnvelope::decode(ConstSpan data) {
  Decoder dec(data);
  auto id = dec.str();
  auto seq = dec.u64();
  auto blob = dec.bytes();
  if (!id || !seq || !blob || !dec.done()) {
    return {Err::kMalformed, "bad sealed envelope"};
  }
  return SealedEnvelope{std::move(*id), *seq, std::move(*blob)};
}

Bytes envelope_aad(std::string_view context, const std::string& sender_id,
                   std::uint64_t sequence) {
  Encoder enc;
  enc.put_str(context).put_str(sender_id).put_u64(sequence);
  return enc.take();
}

Bytes MeasureEventBody::encode() const {
  Encoder enc;
  enc.put_u8(static_cast<std::uint8_t>(stage))
      .put_str(description)
      .put_bytes(measurement.span());
  return enc.take();
}

Result<MeasureEventBody> MeasureEventBody::decode(ConstSpan data) {
  Decoder dec(data);
  auto stage = dec.u8();
  auto description = dec.str();
  auto digest_bytes = dec.bytes();
  if (!stage || !description || !digest_bytes || !dec.done() ||
      *stage > static_cast<std::uint8_t>(boot::Stage::kApplication)) {
    return {Err::kMalformed, "bad measure event body"};
  }
  auto digest = crypto::Digest::from_bytes(*digest_bytes);
  if (!digest) return {Err::kMalformed, "bad measurement digest"};
  return MeasureEventBody{static_cast<boot::Stage>(*stage),
                          std::move(*description), *digest};
}

Bytes BootCompleteBody::encode() const {
  Encoder enc;
  enc.put_u64(event_count);
  return enc.take();
}

Result<BootCompleteBody> BootCompleteBody::decode(ConstSpan data) {
  Decoder dec(data);
  auto count = dec.u64();
  if (!count || !dec.done()) return {Err::kMalformed, "bad boot complete body"};
  return BootCompleteBody{*count};
}

Bytes injection_aad(const std::string& cvm_id) {
  Encoder enc;
  enc.put_str("secret-injection").put_str(cvm_id);
  return enc.take();
}

crypto::SymmetricKey injection_channel_key(ConstSpan dh_shared_secret,
                                           const std::string& cvm_id) {
  Encoder enc;
  enc.put_str("godh-injection").put_str(cvm_id).put_bytes(dh_shared_secret);
  crypto::Digest derived = crypto::hash(enc.view());
  crypto::KeyMaterialRegistry::instance().add(derived.span());
  return *crypto::SymmetricKey::from_bytes(crypto::KeyRole::kSessionKey,
                                           derived.span());
}

Bytes launch_dh_transcript(const std::string& cvm_id, ConstSpan dh_public) {
  Encoder enc;
  enc.put_str("launch-dh").put_str(cvm_id).put_bytes(dh_public);
  return enc.take();
}

Bytes InjectionBody::encode() const {
  Encoder enc;
  enc.put_u8(purpose).put_bytes(key1).put_bytes(key2);
  return enc.take();
}

Result<InjectionBody> InjectionBody::decode(ConstSpan data) {
  Decoder dec(data);
  auto purpose = dec.u8();
  auto key1 = dec.bytes();
  auto key2 = dec.bytes();
  if (!purpose || !key1 || !key2 || !dec.done()) {
    return {Err::kMalformed, "bad injection body"};
  }
  return InjectionBody{*purpose, std::move(*key1), std::move(*key2)};
}

Bytes MgmtRecord::encode() const {
  Encoder enc;
  enc.put_u8(static_cast<std::uint8_t>(op)).put_bytes(body);
  return enc.take();
}

Result<MgmtRecord> MgmtRecord::decode(ConstSpan data) {
  Decoder dec(data);
  auto op = dec.u8();
  auto body = dec.bytes();
  if (!op || !body || !dec.done() || *op < 1 ||
      *op > static_cast<std::uint8_t>(MgmtOp::kAck)) {
    return {Err::kMalformed, "bad management record"};
  }
  return MgmtRecord{static_cast<MgmtOp>(*op), std::move(*body)};
}

Bytes DeployRootBody::encode() const {
  Encoder enc;
  enc.put_bytes(root_pair)
      .put_bytes(rk_certificate.encode())
      .put_bytes(encode_cert_list(issuer_chain));
  return enc.take();
}

Result<DeployRootBody> DeployRootBody::decode(ConstSpan data) {
  Decoder dec(data);
  auto pair = dec.bytes();
  auto cert_bytes = dec.bytes();
  auto chain_bytes = dec.bytes();
  if (!pair || !cert_bytes || !chain_bytes || !dec.done()) {
    return {Err::kMalformed, "bad deploy-root body"};
  }
  auto cert = crypto::Certificate::decode(*cert_bytes);
  if (!cert) return {Err::kMalformed, "bad rk certificate"};
  auto chain = decode_cert_list(*chain_bytes);
  if (!chain.ok()) return chain.error();
  return DeployRootBody{std::move(*pair), std::move(*cert), chain.take()};
}

Bytes VmKeyAndStateBody::encode() const {
  Encoder enc;
  enc.put_str(acvm_id)
      .put_bytes(vm_key)
      .put_u64(expected_counter)
      .put_u8(fresh ? 1 : 0)
      .put_bytes(init_measurement.span());
  return enc.take();
}

Result<VmKeyAndStateBody> VmKeyAndStateBody::decode(ConstSpan data) {
  Decoder dec(data);
  auto id = dec.str();
  auto key = dec.bytes();
  auto counter = dec.u64();
  auto fresh = dec.u8();
  auto init = dec.bytes();
  if (!id || !key || !counter || !fresh || !init || !dec.done()) {
    return {Err::kMalformed, "bad vm-key-and-state body"};
  }
  auto digest = crypto::Digest::from_bytes(*init);
  if (!digest) return {Err::kMalformed, "bad init measurement"};
  return VmKeyAndStateBody{std::move(*id), std::move(*key), *counter,
                           *fresh != 0, *digest};
}

Bytes SessionKeyBody::encode() const {
  Encoder enc;
  enc.put_str(acvm_id).put_bytes(session_key);
  return enc.take();
}

Result<SessionKeyBody> SessionKeyBody::decode(ConstSpan data) {
  Decoder dec(data);
  auto id = dec.str();
  auto key = dec.bytes();
  if (!id || !key || !dec.done()) {
    return {Err::kMalformed, "bad session key body"};
  }
  return SessionKeyBody{std::move(*id), std::move(*key)};
}

Bytes AcvmRef::encode() const {
  Encoder enc;
  enc.put_str(acvm_id);
  return enc.take();
}

Result<AcvmRef> AcvmRef::decode(ConstSpan data) {
  Decoder dec(data);
  auto id = dec.str();
  if (!id || !dec.done()) return {Err::kMalformed, "bad acvm reference"};
  return AcvmRef{std::move(*id)};
}

Bytes BindingHmacResponseBody::encode() const {
  Encoder enc;
  enc.put_str(acvm_id).put_bytes(binding_hmac.span());
  return enc.take();
}

Result<BindingHmacResponseBody> BindingHmacResponseBody::decode(
    ConstSpan data) {
  Decoder dec(data);
  auto id = dec.str();
  auto hmac_bytes = dec.bytes();
  if (!id || !hmac_bytes || !dec.done()) {
    return {Err::kMalformed, "bad binding hmac body"};
  }
  auto digest = crypto::Digest::from_bytes(*hmac_bytes);
  if (!digest) return {Err::kMalformed, "bad binding hmac digest"};
  return BindingHmacResponseBody{std::move(*id), *digest};
}

Bytes StatusBody::encode() const {
  Encoder enc;
  enc.put_str(acvm_id)
      .put_u8(ok ? 1 : 0)
      .put_u8(static_cast<std::uint8_t>(error))
      .put_str(detail)
      .put_u64(counter);
  return enc.take();
}

Result<StatusBody> StatusBody::decode(ConstSpan data) {
  Decoder dec(data);
  auto id = dec.str();
  auto ok = dec.u8();
  auto error = dec.u8();
  auto detail = dec.str();
  auto counter = dec.u64();
  if (!id || !ok || !error || !detail || !counter || !dec.done()) {
    return {Err::kMalformed, "bad status body"};
  }
  return StatusBody{std::move(*id), *ok != 0, static_cast<Err>(*error),
                    std::move(*detail), *counter};
}

Bytes StateTransferBody::encode() const {
  Encoder enc;
  enc.put_str(acvm_id).put_bytes(sealed_state);
  return enc.take();
}

Result<StateTransferBody> StateTransferBody::decode(ConstSpan data) {
  Decoder dec(data);
  auto id = dec.str();
  auto blob = dec.bytes();
  if (!id || !blob || !dec.done()) {
    return {Err::kMalformed, "bad state transfer body"};
  }
  return StateTransferBody{std::move(*id), std::move(*blob)};
}

Bytes WrappedFrameBody::encode() const {
  Encoder enc;
  enc.put_str(acvm_id).put_u8(direction).put_u64(sequence).put_bytes(blob);
  return enc.take();
}

Result<WrappedFrameBody> WrappedFrameBody::decode(ConstSpan data) {
  Decoder dec(data);
  auto id = dec.str();
  auto direction = dec.u8();
  auto sequence = dec.u64();
  auto blob = dec.bytes();
  if (!id || !direction || !sequence || !blob || !dec.done()) {
    return {Err::kMalformed, "bad wrapped frame body"};
  }
  return WrappedFrameBody{std::move(*id), *direction, *sequence,
                          std::move(*blob)};
}

Bytes wrapped_aad(const std::string& acvm_id, std::uint8_t direction,
                  std::uint64_t sequence) {
  Encoder enc;
  enc.put_str("tpm-cmd").put_str(acvm_id).put_u8(direction).put_u64(sequence);
  return enc.take();
}

Bytes UserRequest::encode() const {
  Encoder enc;
  enc.put_u8(static_cast<std::uint8_t>(op)).put_bytes(nonce);
  return enc.take();
}

Result<UserRequest> UserRequest::decode(ConstSpan data) {
  Decoder dec(data);
  auto op = dec.u8();
  auto nonce = dec.bytes();
  if (!op || !nonce || !dec.done() || *op < 1 ||
      *op > static_cast<std::uint8_t>(UserOp::kGetBootView)) {
    return {Err::kMalformed, "bad user request"};
  }
  return UserRequest{static_cast<UserOp>(*op), std::move(*nonce)};
}

Bytes UserResponse::encode() const {
  Encoder enc;
  enc.put_u8(ok ? 1 : 0).put_str(detail).put_bytes(body);
  return enc.take();
}

Result<UserResponse> UserResponse::decode(ConstSpan data) {
  Decoder dec(data);
  auto ok = dec.u8();
  auto detail = dec.str();
  auto body = dec.bytes();
  if (!ok || !detail || !body || !dec.done()) {
    return {Err::kMalformed, "bad user response"};
  }
  return UserResponse{*ok != 0, std::move(*detail), std::move(*body)};
}

Bytes ControlRequest::encode() const {
  Encoder enc;
  enc.put_u8(static_cast<std::uint8_t>(op))
      .put_str(cvm_id)
      .put_str(peer_id)
      .put_u8(kind)
      .put_bytes(data1)
      .put_bytes(data2);
  return enc.take();
}

Result<ControlRequest> ControlRequest::decode(ConstSpan data) {
  Decoder dec(data);
  auto op = dec.u8();
  auto cvm_id = dec.str();
  auto peer_id = dec.str();
  auto kind = dec.u8();
  auto data1 = dec.bytes();
  auto data2 = dec.bytes();
  if (!op || !cvm_id || !peer_id || !kind || !data1 || !data2 || !dec.done() ||
      *op < 1 || *op > static_cast<std::uint8_t>(NodeOp::kDestroyCvm)) {
    return {Err::kMalformed, "bad control request"};
  }
  return ControlRequest{static_cast<NodeOp>(*op), std::move(*cvm_id),
                        std::move(*peer_id),      *kind,
                        std::move(*data1),        std::move(*data2)};
}

Bytes ControlResponse::encode() const {
  Encoder enc;
  enc.put_u8(ok ? 1 : 0)
      .put_u8(static_cast<std::uint8_t>(error))
      .put_str(detail)
      .put_bytes(body);
  return enc.take();
}

Result<ControlResponse> ControlResponse::decode(ConstSpan data) {
  Decoder dec(data);
  auto ok = dec.u8();
  auto error = dec.u8();
  auto detail = dec.str();
  auto body = dec.bytes();
  if (!ok || !error || !detail || !body || !dec.done()) {
    return {Err::kMalformed, "bad control response"};
  }
  return ControlResponse{*ok != 0, static_cast<Err>(*error),
                         std::move(*detail), std::move(*body)};
}

Bytes LaunchCvmResult::encode() const {
  Encoder enc;
  enc.put_bytes(init_measurement.span())
      .put_bytes(launch_dh_public)
      .put_bytes(launch_dh_signature);
  return enc.take();
}

Result<LaunchCvmResult> LaunchCvmResult::decode(ConstSpan data) {
  Decoder dec(data);
  auto init = dec.bytes();
  auto dh_pub = dec.bytes();
  auto dh_sig = dec.bytes();
  if (!init || !dh_pub || !dh_sig || !dec.done()) {
    return {Err::kMalformed, "bad launch result"};
  }
  auto digest = crypto::Digest::from_bytes(*init);
  if (!digest) return {Err::kMalformed, "bad init measurement"};
  return LaunchCvmResult{*digest, std::move(*dh_pub), std::move(*dh_sig)};
}

Bytes encode_cert_list(const std::vector<crypto::Certificate>& certs) {
  Encoder enc;
  enc.put_u64(certs.size());
  for (const auto& cert : certs) enc.put_bytes(cert.encode());
  return enc.take();
}

Result<std::vector<crypto::Certificate>> decode_cert_list(ConstSpan data) {
  Decoder dec(data);
  auto count = dec.u64();
  if (!count || *count > 64) return {Err::kMalformed, "bad certificate count"};
  std::vector<crypto::Certificate> certs;
  for (std::uint64_t i = 0; i < *count; ++i) {
    auto cert_bytes = dec.bytes();
    if (!cert_bytes) return {Err::kMalformed, "truncated certificate list"};
    auto cert = crypto::Certificate::decode(*cert_bytes);
    if (!cert) return {Err::kMalformed, "bad certificate"};
    certs.push_back(std::move(*cert));
  }
  if (!dec.done()) return {Err::kMalformed, "trailing certificate bytes"};
  return certs;
}

Result<net::Frame> request_response(net::Channel& channel,
                                    const net::Frame& request,
                                    std::uint8_t expected_type,
                                    std::chrono::milliseconds timeout) {
  if (!channel.send(request)) {
    return {Err::kUnavailable, "channel closed on send"};
  }
  auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      return {Err::kTimeout, "no response within timeout"};
    }
    auto frame = channel.recv(remaining);
    if (!frame) return {Err::kTimeout, "channel closed or timed out"};
    if (frame->type == expected_type) return *frame;
    // Unexpected interleaved frame; protocol errors surface at the caller.
    return {Err::kSequenceViolation,
            "unexpected frame type " + std::to_string(frame->type)};
  }
}

}  // namespace t3cvm::wire
