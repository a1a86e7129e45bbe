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

#ifndef T3CVM_EVENT_LOG_HPP_
#define T3CVM_EVENT_LOG_HPP_

#include <string>
#include <vector>

#include "t3cvm/common.hpp"
#include "t3cvm/crypto.hpp"
#include "t3cvm/result.hpp"

namespace t3cvm::boot {

using crypto::Digest;

enum class Stage : std::uint8_t {
  kUefi = 0,
  kBootloader = 1,
  kKernel = 2,
  kApplication = 3,
};

const char* stage_name(Stage stage);
Result<Stage> stage_from_name(std::string_view name);

// Stage-to-PCR mapping, fixed for the whole artifact: chain events land in
// PCR0, the bootloader in PCR4, the kernel in PCR8, user-space applications
// in PCR10.
int stage_pcr(Stage stage);

// Measurement of one boot stage's content. The stage label is bound into
// the hash so identical bytes in different stages measure differently.
Digest measure_content(Stage stage, ConstSpan content);

struct BootEvent {
  std::uint64_t sequence = 0;  // strictly increasing from 1
  Stage stage = Stage::kUefi;
  std::string description;
  Digest measurement;

  bool operator==(const BootEvent&) const = default;
};

// Ordered measured-boot record for one launch of one guest.
struct EventLog {
  std::string owner_id;
  Bytes launch_nonce;
  std::vector<BootEvent> events;

  Bytes encode() const;
  static Result<EventLog> decode(ConstSpan data);

  std::string to_json() const;
  static Result<EventLog> from_json(std::string_view text);

  bool operator==(const EventLog&) const = default;
};

// Hash-chain fold of an ordered measurement list starting from the zero
// digest; the value stored as a TPM-List entry's final boot measurement.
Digest fold_measurements(const std::vector<Digest>& measurements);

}  // namespace t3cvm::boot

#endif  // T3CVM_EVENT_LOG_HPP_
