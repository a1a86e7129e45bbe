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

#ifndef T3CVM_GUEST_AGENT_HPP_
#define T3CVM_GUEST_AGENT_HPP_

#include <optional>
#include <string>

#include "t3cvm/channel.hpp"
#include "t3cvm/crypto.hpp"
#include "t3cvm/event_log.hpp"
#include "t3cvm/result.hpp"
#include "t3cvm/wire.hpp"

namespace t3cvm::agent {

// The enhanced TPM driver running inside both guest kinds. In CN-TPMCVM mode
// it seals each boot measurement under the Measure Key for streaming to the
// manager; in ACVM mode it wraps TPM commands under the per-launch session
// key for the bound vTPM.
class GuestAgent {
 public:
  enum class Mode { kTpmcvm, kAcvm };

  GuestAgent(Mode mode, std::string owner_id);

  // Measures one boot stage and appends the event to the local log. Stage
  // order must be non-decreasing (uefi <= bootloader <= kernel <=
  // application); violations are refused locally.
  Result<boot::BootEvent> measure_stage(boot::Stage stage, ConstSpan content,
                                        std::string_view description);

  // kTpmcvm mode: sealed measurement stream to the manager.
  Result<net::Frame> seal_event(const boot::BootEvent& event,
                                const crypto::SymmetricKey& measure_key);
  net::Frame seal_boot_complete(const crypto::SymmetricKey& measure_key);

  // kAcvm mode: session-key wrapped command framing. One outstanding
  // command at a time.
  void install_session_key(crypto::SymmetricKey key);
  bool has_session_key() const { return session_key_.has_value(); }
  Result<net::Frame> wrap_command(ConstSpan raw_command);
  Result<Bytes> unwrap_response(const net::Frame& frame);

  void mark_boot_complete() { boot_complete_ = true; }
  bool boot_complete() const { return boot_complete_; }

  // The exported log replays to the bound vTPM's PCR bank (PCR0 seed events
  // are supplied by the verifier, not recorded here).
  Result<boot::EventLog> export_event_log() const;
  const boot::EventLog& event_log() const { return log_; }

  const std::string& owner_id() const { return log_.owner_id; }

 private:
  Mode mode_;
  boot::EventLog log_;
  std::optional<boot::Stage> last_stage_;
  bool boot_complete_ = false;

  std::optional<crypto::SymmetricKey> session_key_;
  std::uint64_t stream_seq_ = 0;
  std::uint64_t command_seq_ = 0;
  std::uint64_t awaiting_seq_ = 0;  // response expected for this command
};

}  // namespace t3cvm::agent

#endif  // T3CVM_GUEST_AGENT_HPP_
