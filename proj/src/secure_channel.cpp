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

#include "t3cvm/secure_channel.hpp"

#include "t3cvm/encode.hpp"
#include "t3cvm/wire.hpp"

namespace t3cvm::net {

namespace {

struct HandshakeMsg {
  Bytes eph_public;
  Bytes nonce;
  Bytes signature;

  Bytes encode() const {
    Encoder enc;
    enc.put_bytes(eph_public).put_bytes(nonce).put_bytes(signature);
    return enc.take();
  }

  static std::optional<HandshakeMsg> decode(ConstSpan data) {
    Decoder dec(data);
    auto eph = dec.bytes();
    auto nonce = dec.bytes();
    auto sig = dec.bytes();
    if (!eph || !nonce || !sig || !dec.done()) return std::nullopt;
    return HandshakeMsg{std::move(*eph), std::move(*nonce), std::move(*sig)};
  }
};

Bytes initiator_transcript(const HandshakeMsg& m) {
  Encoder enc;
  enc.put_str("tls-init").put_bytes(m.eph_public).put_bytes(m.nonce);
  return enc.take();
}

Bytes responder_transcript(ConstSpan hs1_payload, const HandshakeMsg& m) {
  Encoder enc;
  enc.put_str("tls-resp")
      .put_bytes(hs1_payload)
      .put_bytes(m.eph_public)
      .put_bytes(m.nonce);
  return enc.take();
}

crypto::SymmetricKey derive_session_key(ConstSpan shared, ConstSpan hs1,
                                        ConstSpan hs2) {
  Encoder enc;
  enc.put_str("tls-session-key").put_bytes(shared).put_bytes(hs1).put_bytes(
      hs2);
  crypto::Digest derived = crypto::hash(enc.view());
  crypto::KeyMaterialRegistry::instance().add(derived.span());
  return *crypto::SymmetricKey::from_bytes(crypto::KeyRole::kSessionKey,
                                           derived.span());
}

Bytes record_aad(std::uint8_t direction, std::uint64_t sequence) {
  Encoder enc;
  enc.put_str("tls-record").put_u8(direction).put_u64(sequence);
  return enc.take();
}

}  // namespace

Result<TlsSession> TlsSession::initiate(Channel& channel,
                                        const crypto::KeyPair& auth_key,
                                        ConstSpan peer_public,
                                        std::chrono::milliseconds timeout) {
  crypto::EphemeralDh eph = crypto::dh_generate();
  HandshakeMsg hs1{eph.public_key, crypto::random_bytes(16), {}};
  hs1.signature = auth_key.sign(initiator_transcript(hs1));
  Bytes hs1_payload = hs1.encode();
  if (!channel.send(
          Frame{static_cast<std::uint8_t>(wire::FrameType::kTlsHs1),
                kWireVersion, hs1_payload})) {
    return {Err::kUnavailable, "channel closed during handshake"};
  }

  auto reply = channel.recv(timeout);
  if (!reply) return {Err::kTimeout, "no handshake response"};
  if (reply->type != static_cast<std::uint8_t>(wire::FrameType::kTlsHs2)) {
    return {Err::kChannelAuthFailure, "unexpected handshake frame"};
  }
  auto hs2 = HandshakeMsg::decode(reply->payload);
  if (!hs2) return {Err::kChannelAuthFailure, "malformed handshake response"};
  if (!crypto::verify_signature(peer_public,
                                responder_transcript(hs1_payload, *hs2),
                                hs2->signature)) {
    return {Err::kChannelAuthFailure, "peer handshake signature invalid"};
  }
  Bytes shared = crypto::dh_shared(eph.private_key, hs2->eph_public);
  return TlsSession(derive_session_key(shared, hs1_payload, reply->payload),
                    0);
}

Result<TlsSession> TlsSession::respond(Channel& channel,
                                       const crypto::KeyPair& auth_key,
                                       ConstSpan peer_public,
                                       std::chrono::milliseconds timeout) {
  auto first = channel.recv(timeout);
  if (!first) return {Err::kTimeout, "no handshake request"};
  if (first->type != static_cast<std::uint8_t>(wire::FrameType::kTlsHs1)) {
    return {Err::kChannelAuthFailure, "unexpected handshake frame"};
  }
  auto hs1 = HandshakeMsg::decode(first->payload);
  if (!hs1) return {Err::kChannelAuthFailure, "malformed handshake request"};
  if (!crypto::verify_signature(peer_public, initiator_transcript(*hs1),
                                hs1->signature)) {
    return {Err::kChannelAuthFailure, "peer handshake signature invalid"};
  }

  crypto::EphemeralDh eph = crypto::dh_generate();
  HandshakeMsg hs2{eph.public_key, crypto::random_bytes(16), {}};
  hs2.signature = auth_key.sign(responder_transcript(first->payload, hs2));
  Bytes hs2_payload = hs2.encode();
  if (!channel.send(
          Frame{static_cast<std::uint8_t>(wire::FrameType::kTlsHs2),
                kWireVersion, hs2_payload})) {
    return {Err::kUnavailable, "channel closed during handshake"};
  }
  Bytes shared = crypto::dh_shared(eph.private_key, hs1->eph_public);
  return TlsSession(derive_session_key(shared, first->payload, hs2_payload),
                    1);
}

Frame TlsSession::seal_record(ConstSpan plaintext) {
  ++send_seq_;
  Bytes blob =
      crypto::aead_seal(key_, plaintext, record_aad(send_dir_, send_seq_));
  return Frame{static_cast<std::uint8_t>(wire::FrameType::kTlsRecord),
               kWireVersion, std::move(blob)};
}

Result<Bytes> TlsSession::open_record(const Frame& frame) {
  if (frame.type != static_cast<std::uint8_t>(wire::FrameType::kTlsRecord)) {
    return {Err::kChannelAuthFailure, "not a record frame"};
  }
  std::uint8_t peer_dir = send_dir_ == 0 ? 1 : 0;
  auto opened = crypto::aead_open(key_, frame.payload,
                                  record_aad(peer_dir, recv_seq_ + 1));
  if (!opened.ok()) {
    return {Err::kChannelAuthFailure,
            "record authentication failed (tampered, replayed or reordered)"};
  }
  ++recv_seq_;
  return opened;
}

}  // namespace t3cvm::net
