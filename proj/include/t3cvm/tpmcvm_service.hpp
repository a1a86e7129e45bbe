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

#ifndef T3CVM_TPMCVM_SERVICE_HPP_
#define T3CVM_TPMCVM_SERVICE_HPP_

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "t3cvm/channel.hpp"
#include "t3cvm/crypto.hpp"
#include "t3cvm/result.hpp"
#include "t3cvm/tpm_commands.hpp"
#include "t3cvm/vtpm.hpp"
#include "t3cvm/wire.hpp"

namespace t3cvm::tpmcvm {

// The CN-MvTPM module state: the deployed CN-TPMCVM root, and one vTPM per
// bound ACVM. Holds no persistent storage; every vTPM's sealed state
// round-trips through the manager.
class TpmcvmService {
 public:
  explicit TpmcvmService(std::string tpmcvm_id)
      : tpmcvm_id_(std::move(tpmcvm_id)) {}

  void install_root(crypto::KeyPair root_pair,
                    crypto::Certificate rk_certificate,
                    std::vector<crypto::Certificate> issuer_chain);
  bool has_root() const;

  // Restores the vTPM from the sealed state (or creates a fresh one when
  // `params.fresh`); typed unseal failures propagate and abort the bind.
  Result<void> begin_bind(const wire::VmKeyAndStateBody& params,
                          ConstSpan sealed_state,
                          crypto::SymmetricKey session_key);
  // Extends the binding proof and then the init measurement into PCR0 and
  // exposes the vTPM to wrapped commands.
  Result<void> complete_bind(const std::string& acvm_id,
                             const crypto::Digest& binding_hmac);

  // Session-key wrapped command path. Commands for one vTPM run strictly
  // serially; authentication or sequence failures drop the command and log
  // an alert (nullopt return).
  std::optional<net::Frame> handle_wrapped(const net::Frame& frame);

  struct TeardownOutput {
    Bytes sealed_state;
    std::uint64_t new_counter = 0;
  };
  // Increments the counter, seals the state for the manager and destroys the
  // in-memory vTPM.
  Result<TeardownOutput> teardown(const std::string& acvm_id);

  std::vector<std::string> active_acvms() const;
  std::vector<std::string> alerts() const;

  std::vector<crypto::Certificate> ek_chain_for(
      const std::string& acvm_id) const;
  // Bank snapshot for harness-side oracles; nullopt when not bound.
  std::optional<vtpm::PcrBank> bank_of(const std::string& acvm_id) const;

  const std::string& id() const { return tpmcvm_id_; }

 private:
  struct Binding {
    vtpm::Vtpm tpm;
    crypto::SymmetricKey vm_key;
    crypto::SymmetricKey session_key;
    crypto::Digest init_measurement;
    std::uint64_t expected_cmd_seq = 0;
    bool bound = false;  // true once PCR0 is seeded
  };

  std::string tpmcvm_id_;
  mutable std::mutex mu_;
  std::optional<crypto::KeyPair> root_pair_;
  crypto::Certificate rk_certificate_;
  std::vector<crypto::Certificate> issuer_chain_;
  std::map<std::string, Binding> bindings_;
  std::vector<std::string> alerts_;
};

}  // namespace t3cvm::tpmcvm

#endif  // T3CVM_TPMCVM_SERVICE_HPP_
