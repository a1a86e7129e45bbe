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

#include "t3cvm/vtpm.hpp"

#include <algorithm>
#include <set>

#include "t3cvm/encode.hpp"

namespace t3cvm::vtpm {

namespace {

constexpr std::uint8_t kStateBlobVersion = 0x01;

// Counter window probed by unseal_state to distinguish rollback from a
// wrong key or identity. Probing the full [0, expected) range is cheap at
// simulation scale; the cap keeps the cost bounded if a counter ever grows
// past it.
constexpr std::uint64_t kCounterProbeAhead = 64;
constexpr std::uint64_t kCounterProbeFullScanLimit = 4096;

Bytes state_aad(const std::string& acvm_id, std::uint64_t counter_value) {
  Encoder enc;
  enc.put_str("tpm-state").put_str(acvm_id).put_u64(counter_value);
  return enc.take();
}

}  // namespace

Digest extend_digest(const Digest& old_value, const Digest& measurement) {
  return crypto::hash(concat({old_value.span(), measurement.span()}));
}

Result<void> PcrBank::extend(int index, const Digest& measurement) {
  if (index < 0 || index >= kNumPcrs) {
    return {Err::kPcrIndexOutOfRange,
            "PCR index " + std::to_string(index) + " out of range"};
  }
  regs_[static_cast<std::size_t>(index)] =
      extend_digest(regs_[static_cast<std::size_t>(index)], measurement);
  return {};
}

Result<Digest> PcrBank::read(int index) const {
  if (index < 0 || index >= kNumPcrs) {
    return {Err::kPcrIndexOutOfRange,
            "PCR index " + std::to_string(index) + " out of range"};
  }
  return regs_[static_cast<std::size_t>(index)];
}

Result<Digest> pcr_composite(const PcrBank& bank,
                             const std::vector<int>& selection) {
  if (selection.empty()) {
    return {Err::kEmptySelection, "PCR selection is empty"};
  }
  std::set<int> ordered(selection.begin(), selection.end());
  Bytes input;
  for (int index : ordered) {
    auto reg = bank.read(index);
    if (!reg.ok()) return reg.error();
    input.insert(input.end(), reg.value().bytes.begin(),
                 reg.value().bytes.end());
  }
  return crypto::hash(input);
}

Bytes TpmStateFile::encode() const {
  Encoder enc;
  enc.put_u64(format_version)
      .put_str(vtpm_id)
      .put_bytes(endorsement_key.encode())
      .put_bytes(endorsement_cert.encode())
      .put_u64(counter.value)
      .put_u64(persistent_objects.size());
  for (const auto& [handle, blob] : persistent_objects) {
    enc.put_str(handle).put_bytes(blob);
  }
  return enc.take();
}

Result<TpmStateFile> TpmStateFile::decode(ConstSpan data) {
  Decoder dec(data);
  auto version = dec.u64();
  auto id = dec.str();
  auto key_bytes = dec.bytes();
  auto cert_bytes = dec.bytes();
  auto counter_value = dec.u64();
  auto object_count = dec.u64();
  if (!version || !id || !key_bytes || !cert_bytes || !counter_value ||
      !object_count) {
    return {Err::kMalformedState, "truncated state file"};
  }
  auto key = crypto::KeyPair::decode(*key_bytes);
  auto cert = crypto::Certificate::decode(*cert_bytes);
  if (!key || !cert) {
    return {Err::kMalformedState, "bad endorsement material"};
  }
  std::map<std::string, Bytes> objects;
  for (std::uint64_t i = 0; i < *object_count; ++i) {
    auto handle = dec.str();
    auto blob = dec.bytes();
    if (!handle || !blob) {
      return {Err::kMalformedState, "truncated persistent objects"};
    }
    objects.emplace(std::move(*handle), std::move(*blob));
  }
  if (!dec.done()) {
    return {Err::kMalformedState, "trailing bytes in state file"};
  }
  return TpmStateFile{*version,
                      std::move(*id),
                      std::move(*key),
                      std::move(*cert),
                      MonotonicCounter{*counter_value},
                      std::move(objects)};
}

Bytes seal_state(const TpmStateFile& state, const crypto::SymmetricKey& vm_key,
                 const std::string& acvm_id, std::uint64_t counter_value) {
  // The sealed counter and the state's own counter must agree; unseal
  // re-checks this after authentication.
  Bytes blob = crypto::aead_seal(vm_key, state.encode(),
                                 state_aad(acvm_id, counter_value));
  Bytes out;
  out.reserve(1 + blob.size());
  out.push_back(kStateBlobVersion);
  out.insert(out.end(), blob.begin(), blob.end());
  return out;
}

Result<TpmStateFile> unseal_state(ConstSpan blob,
                                  const crypto::SymmetricKey& vm_key,
                                  const std::string& acvm_id,
                                  std::uint64_t expected_counter) {
  if (blob.size() < 1 + crypto::kAeadNonceSize + crypto::kAeadTagSize) {
    return {Err::kMalformedState, "sealed blob too short"};
  }
  if (blob[0] != kStateBlobVersion) {
    return {Err::kMalformedState, "unknown sealed blob version"};
  }
  ConstSpan sealed = blob.subspan(1);

  auto opened =
      crypto::aead_open(vm_key, sealed, state_aad(acvm_id, expected_counter));
  if (opened.ok()) {
    auto state = TpmStateFile::decode(opened.value());
    if (!state.ok()) return state.error();
    if (state.value().counter.value != expected_counter) {
      return {Err::kRollbackDetected,
              "state counter " +
                  std::to_string(state.value().counter.value) +
                  " does not match sealed counter " +
                  std::to_string(expected_counter)};
    }
    return state;
  }

  // Authentication failed under the expected counter. Probe nearby counters
  // to recognize a genuine-but-stale (or future) blob for this identity.
  std::uint64_t low = 0;
  if (expected_counter > kCounterProbeFullScanLimit) {
    low = expected_counter - kCounterProbeFullScanLimit;
  }
  std::uint64_t high = expected_counter + kCounterProbeAhead;
  for (std::uint64_t c = low; c <= high; ++c) {
    if (c == expected_counter) continue;
    auto probe = crypto::aead_open(vm_key, sealed, state_aad(acvm_id, c));
    if (probe.ok()) {
      return {Err::kRollbackDetected,
              "blob sealed under counter " + std::to_string(c) +
                  ", expected " + std::to_string(expected_counter)};
    }
  }
  return {Err::kBindingViolation,
          "sealed state does not authenticate for identity '" + acvm_id + "'"};
}

Bytes Quote::signed_payload() const {
  Encoder enc;
  enc.put_bytes(pcr_composite.span()).put_bytes(nonce).put_u64(counter);
  return enc.take();
}

Bytes Quote::encode() const {
  Encoder enc;
  enc.put_u64(pcr_selection.size());
  for (int index : pcr_selection) {
    enc.put_u64(static_cast<std::uint64_t>(index));
  }
  enc.put_bytes(pcr_composite.span())
      .put_bytes(nonce)
      .put_u64(counter)
      .put_bytes(signature);
  return enc.take();
}

Result<Quote> Quote::decode(ConstSpan data) {
  Decoder dec(data);
  auto count = dec.u64();
  if (!count || *count > kNumPcrs) {
    return {Err::kMalformed, "bad quote selection count"};
  }
  Quote q;
  for (std::uint64_t i = 0; i < *count; ++i) {
    auto index = dec.u64();
    if (!index) return {Err::kMalformed, "truncated quote selection"};
    q.pcr_selection.push_back(static_cast<int>(*index));
  }
  auto composite = dec.bytes();
  auto nonce = dec.bytes();
  auto counter = dec.u64();
  auto signature = dec.bytes();
  if (!composite || !nonce || !counter || !signature || !dec.done()) {
    return {Err::kMalformed, "truncated quote"};
  }
  auto digest = Digest::from_bytes(*composite);
  if (!digest) return {Err::kMalformed, "bad composite digest"};
  q.pcr_composite = *digest;
  q.nonce = std::move(*nonce);
  q.counter = *counter;
  q.signature = std::move(*signature);
  return q;
}

Result<void> verify_quote(const Quote& quote, ConstSpan ek_public,
                          const PcrBank& expected_bank, ConstSpan nonce) {
  if (quote.nonce.size() != nonce.size() ||
      !std::equal(quote.nonce.begin(), quote.nonce.end(), nonce.begin())) {
    return {Err::kAuthFailure, "quote nonce does not match the challenge"};
  }
  auto composite = pcr_composite(expected_bank, quote.pcr_selection);
  if (!composite.ok()) return composite.error();
  if (!(composite.value() == quote.pcr_composite)) {
    return {Err::kAuthFailure, "PCR composite mismatch"};
  }
  if (!crypto::verify_signature(ek_public, quote.signed_payload(),
                                quote.signature)) {
    return {Err::kAuthFailure, "quote signature invalid"};
  }
  return {};
}

Vtpm Vtpm::create(const crypto::KeyPair& tpmcvm_root,
                  const std::string& issuer_name, const std::string& vtpm_id) {
  TpmStateFile state;
  state.vtpm_id = vtpm_id;
  state.endorsement_key =
      crypto::KeyPair::generate(crypto::KeyPairRole::kEndorsement);
  state.endorsement_cert = crypto::issue_certificate(
      tpmcvm_root, issuer_name, vtpm_id, state.endorsement_key.public_key());
  state.counter.value = 0;
  return Vtpm(std::move(state));
}

Vtpm Vtpm::from_state(TpmStateFile state) {
  return Vtpm(std::move(state));
}

Result<void> Vtpm::pcr_extend(int index, const Digest& measurement,
                              std::string_view label) {
  auto result = bank_.extend(index, measurement);
  if (!result.ok()) return result;
  extend_log_.push_back(ExtendRecord{index, measurement, std::string(label)});
  return {};
}

std::string Vtpm::create_signing_key() {
  std::string handle = "key-" + std::to_string(state_.persistent_objects.size() + 1);
  auto key = crypto::KeyPair::generate(crypto::KeyPairRole::kEndorsement);
  state_.persistent_objects[handle] = key.encode();
  return handle;
}

Result<Bytes> Vtpm::sign_with_key(const std::string& handle,
                                  ConstSpan data) const {
  auto it = state_.persistent_objects.find(handle);
  if (it == state_.persistent_objects.end()) {
    return {Err::kNotFound, "no persistent object '" + handle + "'"};
  }
  auto key = crypto::KeyPair::decode(it->second);
  if (!key) return {Err::kMalformedState, "corrupt key object"};
  return key->sign(data);
}

Result<bool> Vtpm::verify_with_key(const std::string& handle, ConstSpan data,
                                   ConstSpan signature) const {
  auto it = state_.persistent_objects.find(handle);
  if (it == state_.persistent_objects.end()) {
    return {Err::kNotFound, "no persistent object '" + handle + "'"};
  }
  auto key = crypto::KeyPair::decode(it->second);
  if (!key) return {Err::kMalformedState, "corrupt key object"};
  return crypto::verify_signature(key->public_key(), data, signature);
}

Result<Quote> Vtpm::make_quote(const std::vector<int>& selection,
                               ConstSpan nonce) const {
  auto composite = pcr_composite(bank_, selection);
  if (!composite.ok()) return composite.error();
  Quote q;
  q.pcr_selection = selection;
  std::sort(q.pcr_selection.begin(), q.pcr_selection.end());
  q.pcr_selection.erase(
      std::unique(q.pcr_selection.begin(), q.pcr_selection.end()),
      q.pcr_selection.end());
  q.pcr_composite = composite.value();
  q.nonce = Bytes(nonce.begin(), nonce.end());
  q.counter = state_.counter.value;
  q.signature = state_.endorsement_key.sign(q.signed_payload());
  return q;
}

}  // namespace t3cvm::vtpm
