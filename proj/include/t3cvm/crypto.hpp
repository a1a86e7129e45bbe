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

#ifndef T3CVM_CRYPTO_HPP_
#define T3CVM_CRYPTO_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "t3cvm/common.hpp"
#include "t3cvm/result.hpp"

namespace t3cvm::crypto {

inline constexpr std::size_t kDigestSize = 32;
inline constexpr std::size_t kSymmetricKeySize = 32;
inline constexpr std::size_t kAeadNonceSize = 12;
inline constexpr std::size_t kAeadTagSize = 16;

// A 256-bit digest: the unit of all measurements and PCR contents.
struct Digest {
  std::array<std::uint8_t, kDigestSize> bytes{};

  static const Digest& zero();
  static std::optional<Digest> from_bytes(ConstSpan data);
  static std::optional<Digest> from_hex(std::string_view hex);

  ConstSpan span() const { return ConstSpan(bytes.data(), bytes.size()); }
  std::string hex() const;

  bool operator==(const Digest&) const = default;
};

Digest hash(ConstSpan data);

enum class KeyRole : std::uint8_t {
  kImageKey = 1,
  kMeasureKey,
  kVmKey,
  kSessionKey,
};

const char* key_role_name(KeyRole role);

// 256-bit symmetric key with an immutable role. Generation registers the key
// material with the process-wide KeyMaterialRegistry so scenario harnesses
// can scan adversary-visible traces for custody violations.
class SymmetricKey {
 public:
  static SymmetricKey generate(KeyRole role);
  static std::optional<SymmetricKey> from_bytes(KeyRole role, ConstSpan raw);

  KeyRole role() const { return role_; }
  ConstSpan span() const { return ConstSpan(bytes_.data(), bytes_.size()); }

  bool operator==(const SymmetricKey& other) const {
    return role_ == other.role_ && bytes_ == other.bytes_;
  }

 private:
  SymmetricKey(KeyRole role, std::array<std::uint8_t, kSymmetricKeySize> b)
      : role_(role), bytes_(b) {}

  KeyRole role_;
  std::array<std::uint8_t, kSymmetricKeySize> bytes_;
};

Digest hmac(const SymmetricKey& key, ConstSpan data);

// AES-256-GCM. Blob layout: nonce (12) || ciphertext || tag (16).
Bytes aead_seal(const SymmetricKey& key, ConstSpan plaintext, ConstSpan aad);
Result<Bytes> aead_open(const SymmetricKey& key, ConstSpan blob, ConstSpan aad);

enum class KeyPairRole : std::uint8_t {
  kUserNodeRoot = 1,  // TRK
  kManagerRoot,       // MRK
  kTpmcvmRoot,
  kEndorsement,
  kTls,
  kGodh,  // guest-owner DH; key agreement only
  // Simulation-side identities outside the trust-chain roles above.
  kCaRoot,
  kAmdRoot,
  kPlatform,
};

bool is_signing_role(KeyPairRole role);

// Ed25519 signing pair, or X25519 agreement pair for kGodh. Raw 32-byte key
// material both sides; role immutable after creation.
class KeyPair {
 public:
  // Empty placeholder; operations on it fail. Assign a generated or decoded
  // pair before use.
  KeyPair() : role_(KeyPairRole::kEndorsement) {}

  static KeyPair generate(KeyPairRole role);
  static std::optional<KeyPair> from_raw(KeyPairRole role, ConstSpan priv,
                                         ConstSpan pub);

  KeyPairRole role() const { return role_; }
  const Bytes& public_key() const { return public_; }
  const Bytes& private_key() const { return private_; }

  Bytes sign(ConstSpan data) const;  // requires a signing role
  // X25519 agreement hashed with `context` into a fresh SymmetricKey.
  // Requires role kGodh.
  SymmetricKey agree(ConstSpan peer_public, KeyRole derived_role,
                     ConstSpan context) const;

  Bytes encode() const;
  static std::optional<KeyPair> decode(ConstSpan data);

 private:
  KeyPair(KeyPairRole role, Bytes priv, Bytes pub);

  KeyPairRole role_;
  Bytes private_;
  Bytes public_;
};

bool verify_signature(ConstSpan public_key, ConstSpan data, ConstSpan signature);

// Raw ephemeral X25519, used by the secure-channel handshake.
struct EphemeralDh {
  Bytes private_key;
  Bytes public_key;
};
EphemeralDh dh_generate();
Bytes dh_shared(ConstSpan private_key, ConstSpan peer_public);

Bytes random_bytes(std::size_t n);

// Minimal certificate: subject identity, subject public key and the issuer's
// signature over the canonical body. Not X.509; chain-of-signature trust only.
struct Certificate {
  std::string subject;
  Bytes subject_public_key;
  std::string issuer;
  Bytes signature;

  Bytes canonical_body() const;
  Bytes encode() const;
  static std::optional<Certificate> decode(ConstSpan data);

  bool operator==(const Certificate&) const = default;
};

Certificate issue_certificate(const KeyPair& issuer_key,
                              const std::string& issuer_name,
                              const std::string& subject_name,
                              ConstSpan subject_public_key);

// Accepts iff the chain is nonempty, chain[0] equals the trusted root (and is
// validly self-signed), and every subsequent link's signature verifies under
// its predecessor. Error.step carries the failing link index.
Result<void> verify_chain(const std::vector<Certificate>& chain,
                          const Certificate& trusted_root);

// Minimal issuing authority. `reachable` models CA availability at
// manager startup.
class CertificateAuthority {
 public:
  explicit CertificateAuthority(std::string name = "ca-root");

  const std::string& name() const { return name_; }
  const Certificate& root_certificate() const { return root_cert_; }
  Certificate issue(const std::string& subject, ConstSpan subject_public) const;

  bool reachable = true;

 private:
  std::string name_;
  KeyPair root_;
  Certificate root_cert_;
};

// Process-wide log of generated symmetric key material; the scenario
// harness scans node-side traces against it after every run.
class KeyMaterialRegistry {
 public:
  static KeyMaterialRegistry& instance();

  void add(ConstSpan key_bytes);
  std::vector<Bytes> all() const;
  void clear();

 private:
  mutable std::mutex mu_;
  std::vector<Bytes> keys_;
};

}  // namespace t3cvm::crypto

#endif  // T3CVM_CRYPTO_HPP_
