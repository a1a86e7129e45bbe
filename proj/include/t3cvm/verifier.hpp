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

#ifndef T3CVM_VERIFIER_HPP_
#define T3CVM_VERIFIER_HPP_

#include <string>
#include <vector>

#include "t3cvm/common.hpp"
#include "t3cvm/crypto.hpp"
#include "t3cvm/event_log.hpp"
#include "t3cvm/result.hpp"
#include "t3cvm/vtpm.hpp"

namespace t3cvm::attest {

// Evidence parts produced inside the guest (or fabricated by an adversary):
// the measured-boot log, a quote over the vTPM's PCR bank, and the EK
// certificate chain.
struct GuestEvidence {
  boot::EventLog event_log;
  vtpm::Quote quote;
  std::vector<crypto::Certificate> ek_chain;

  std::string to_json() const;
  static Result<GuestEvidence> from_json(std::string_view text);
};

// Everything the user-side check consumes, self-contained up to golden
// values, the VM key (held via the manager) and the trusted root.
struct EvidenceBundle {
  std::string acvm_id;
  crypto::Digest init_measurement;
  boot::EventLog event_log;
  vtpm::Quote quote;
  std::vector<crypto::Certificate> ek_chain;
  // Canonical encoding of the hosting CN-TPMCVM's (final boot fold, init
  // measurement), as disclosed by the manager; HMAC'd under the VM key to
  // form the binding proof.
  Bytes binding_inputs;

  std::string to_json() const;
  static Result<EvidenceBundle> from_json(std::string_view text);
};

enum class Failure : std::uint8_t {
  kNone = 0,
  kChainOfCertsInvalid,
  kQuoteInvalid,
  kInitMeasurementMismatch,
  kBootEventMismatch,
  kBindingProofInvalid,
  kRollbackSuspected,
};

const char* failure_name(Failure failure);

struct Verdict {
  bool accepted = false;
  Failure failure = Failure::kNone;
  int event_index = -1;  // kBootEventMismatch: offending event (0-based)
  std::string detail;

  std::string code() const;  // "ACCEPTED" or the failure name
};

// Golden values the user holds for this ACVM.
struct Golden {
  crypto::Digest init_measurement;
  std::vector<boot::BootEvent> boot_events;
  std::uint64_t expected_counter = 0;

  std::string to_json(const crypto::SymmetricKey& vm_key,
                      const crypto::Certificate& trusted_root,
                      ConstSpan nonce) const;
};

// Loaded form of a golden file, for the CLI verify path.
struct GoldenFile {
  Golden golden;
  crypto::SymmetricKey vm_key;
  crypto::Certificate trusted_root;
  Bytes nonce;

  static Result<GoldenFile> from_json(std::string_view text);
};

// Pure fold of pcr_extend over the stage->PCR mapping, seeding PCR0 with the
// given events first.
vtpm::PcrBank replay_log(const boot::EventLog& log,
                         const std::vector<crypto::Digest>& pcr0_seeds);

// The user-side decision, in fixed order: (1) EK chain to the trusted root;
// (2) quote signature, nonce freshness and counter; (3) event-log replay vs
// the quote composite; (4) PCR0 prefix = extend(extend(zero, hmac(vm_key,
// binding_inputs)), golden init); (5) init measurement vs golden; (6) each
// boot event vs golden. First failure wins.
Verdict verify(const EvidenceBundle& bundle, const Golden& golden,
               const crypto::SymmetricKey& vm_key,
               const crypto::Certificate& trusted_root, ConstSpan nonce);

}  // namespace t3cvm::attest

#endif  // T3CVM_VERIFIER_HPP_
