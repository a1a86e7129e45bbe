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

#ifndef T3CVM_SECURE_CHANNEL_HPP_
#define T3CVM_SECURE_CHANNEL_HPP_

#include <optional>

#include "t3cvm/channel.hpp"
#include "t3cvm/crypto.hpp"
#include "t3cvm/result.hpp"

namespace t3cvm::net {

// The modeled TLS channel between TR-Manager and the CN-MvTPM module:
// signature-authenticated ephemeral X25519 agreement, then per-record AEAD
// with per-direction sequence numbers. Both sides authenticate with the TLS
// key pair the manager embedded in the CN-TPMCVM image.
//
// TlsSession is a record codec over an existing Channel; the handshake runs
// on the channel, after which callers seal/open kTlsRecord frames themselves
// so other frame types can interleave on the same link.
class TlsSession {
 public:
  static Result<TlsSession> initiate(Channel& channel,
                                     const crypto::KeyPair& auth_key,
                                     ConstSpan peer_public,
                                     std::chrono::milliseconds timeout);
  static Result<TlsSession> respond(Channel& channel,
                                    const crypto::KeyPair& auth_key,
                                    ConstSpan peer_public,
                                    std::chrono::milliseconds timeout);

  Frame seal_record(ConstSpan plaintext);
  Result<Bytes> open_record(const Frame& frame);

 private:
  TlsSession(crypto::SymmetricKey key, std::uint8_t send_dir)
      : key_(std::move(key)), send_dir_(send_dir) {}

  crypto::SymmetricKey key_;
  std::uint8_t send_dir_;  // 0 = initiator->responder, 1 = responder->initiator
  std::uint64_t send_seq_ = 0;
  std::uint64_t recv_seq_ = 0;
};

}  // namespace t3cvm::net

#endif  // T3CVM_SECURE_CHANNEL_HPP_
