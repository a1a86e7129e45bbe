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

#ifndef T3CVM_VTPM_HPP_
#define T3CVM_VTPM_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "t3cvm/common.hpp"
#include "t3cvm/crypto.hpp"
#include "t3cvm/result.hpp"

namespace t3cvm::vtpm {

using crypto::Digest;

inline constexpr int kNumPcrs = 24;

// Hash-chain extend rule: new = hash(old || measurement), raw 64-byte input.
Digest extend_digest(const Digest& old_value, const Digest& measurement);

// 24 extend-only registers, all-zero at creation. No direct write exists.
class PcrBank {
 public:
  PcrBank() = default;

  Result<void> extend(int index, const Digest& measurement);
  Result<Digest> read(int index) const;
  const std::array<Digest, kNumPcrs>& registers() const { return regs_; }

  bool operator==(const PcrBank&) const = default;

 private:
  std::array<Digest, kNumPcrs> regs_{};
};

// Digest over the selected registers in ascending index order.
Result<Digest> pcr_composite(const PcrBank& bank,
                             const std::vector<int>& selection);

struct MonotonicCounter {
  std::uint64_t value = 0;
};

// A vTPM's persistent state. At rest it exists only sealed (seal_state).
struct TpmStateFile {
  std::uint64_t format_version = 1;
  std::string vtpm_id;
  crypto::KeyPair endorsement_key;
  crypto::Certificate endorsement_cert;
  MonotonicCounter counter;
  std::map<std::string, Bytes> persistent_objects;

  Bytes encode() const;
  static Result<TpmStateFile> decode(ConstSpan data);
};

// Sealed blob layout: version byte (0x01) || nonce || ciphertext || tag.
// AAD = canonical("tpm-state", acvm_id, counter_value); tying the ACVM
// identity and counter into the AAD is what defeats state substitution
// and replay. Requires state.counter.value == counter_value.
Bytes seal_state(const TpmStateFile& state, const crypto::SymmetricKey& vm_key,
                 const std::string& acvm_id, std::uint64_t counter_value);

// Typed failures: BindingViolation (wrong key or wrong acvm_id),
// RollbackDetected (genuine blob sealed under a different counter),
// MalformedState (authenticates but fails canonical parse).
//
// The counter appears only in the AAD, so a stale-counter blob is an AEAD
// failure like any other; unseal probes a bounded window of counters around
// expected_counter to recognize genuine-but-stale blobs and type them as
// rollback. Genuine counters at any plausible launch cadence sit well inside
// the window.
Result<TpmStateFile> unseal_state(ConstSpan blob,
                                  const crypto::SymmetricKey& vm_key,
                                  const std::string& acvm_id,
                                  std::uint64_t expected_counter);

// Signed attestation over selected PCR values and a verifier nonce.
struct Quote {
  std::vector<int> pcr_selection;
  Digest pcr_composite;
  Bytes nonce;
  std::uint64_t counter = 0;
  Bytes signature;  // over canonical(pcr_composite, nonce, counter)

  Bytes signed_payload() const;
  Bytes encode() const;
  static Result<Quote> decode(ConstSpan data);
};

Result<void> verify_quote(const Quote& quote, ConstSpan ek_public,
                          const PcrBank& expected_bank, ConstSpan nonce);

// The software TPM instance: PCR bank, endorsement identity, monotonic
// counter, persistent key objects, and an internal extend history used by
// replay oracles.
class Vtpm {
 public:
  struct ExtendRecord {
    int pcr;
    Digest measurement;
    std::string label;
  };

  // Fresh vTPM: new endorsement key pair certified by the given CN-TPMCVM
  // root; counter 0; all PCRs zero.
  static Vtpm create(const crypto::KeyPair& tpmcvm_root,
                     const std::string& issuer_name,
                     const std::string& vtpm_id);
  // Returning vTPM: restores persistent state; the PCR bank starts fresh and
  // is re-extended by the launch protocol.
  static Vtpm from_state(TpmStateFile state);

  Result<void> pcr_extend(int index, const Digest& measurement,
                          std::string_view label = "");
  Result<Digest> pcr_read(int index) const { return bank_.read(index); }
  Bytes get_random(std::size_t n) const { return crypto::random_bytes(n); }
  static Digest hash_data(ConstSpan data) { return crypto::hash(data); }

  std::string create_signing_key();
  Result<Bytes> sign_with_key(const std::string& handle, ConstSpan data) const;
  Result<bool> verify_with_key(const std::string& handle, ConstSpan data,
                               ConstSpan signature) const;

  Result<Quote> make_quote(const std::vector<int>& selection,
                           ConstSpan nonce) const;

  void bump_counter() { ++state_.counter.value; }
  std::uint64_t counter() const { return state_.counter.value; }

  const PcrBank& bank() const { return bank_; }
  const TpmStateFile& state() const { return state_; }
  const std::vector<ExtendRecord>& extend_log() const { return extend_log_; }

 private:
  explicit Vtpm(TpmStateFile state) : state_(std::move(state)) {}

  TpmStateFile state_;
  PcrBank bank_;
  std::vector<ExtendRecord> extend_log_;
};

}  // namespace t3cvm::vtpm

#endif  // T3CVM_VTPM_HPP_
