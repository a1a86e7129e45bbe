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

#include "t3cvm/tpmcvm_service.hpp"

namespace t3cvm::tpmcvm {

void TpmcvmService::install_root(crypto::KeyPair root_pair,
                                 crypto::Certificate rk_certificate,
                                 std::vector<crypto::Certificate> issuer_chain) {
  std::lock_guard<std::mutex> lock(mu_);
  root_pair_ = std::move(root_pair);
  rk_certificate_ = std::move(rk_certificate);
  issuer_chain_ = std::move(issuer_chain);
}

bool TpmcvmService::has_root() const {
  std::lock_guard<std::mutex> lock(mu_);
  return root_pair_.has_value();
}

Result<void> TpmcvmService::begin_bind(const wire::VmKeyAndStateBody& params,
                                       ConstSpan sealed_state,
                                       crypto::SymmetricKey session_key) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!root_pair_) {
    return {Err::kRefused, "CN-TPMCVM root not deployed yet"};
  }
  if (bindings_.count(params.acvm_id) != 0) {
    return {Err::kAlreadyExists,
            "ACVM '" + params.acvm_id + "' already bound"};
  }
  auto vm_key =
      crypto::SymmetricKey::from_bytes(crypto::KeyRole::kVmKey, params.vm_key);
  if (!vm_key) {
    return {Err::kMalformed, "bad VM key length"};
  }

  if (params.fresh) {
    if (params.expected_counter != 0 || !sealed_state.empty()) {
      return {Err::kRefused, "fresh bind with non-initial state"};
    }
    vtpm::Vtpm tpm = vtpm::Vtpm::create(*root_pair_, tpmcvm_id_,
                                        "vtpm-for-" + params.acvm_id);
    bindings_.emplace(
        params.acvm_id,
        Binding{std::move(tpm), std::move(*vm_key), std::move(session_key),
                params.init_measurement, 0, false});
    return {};
  }

  auto state = vtpm::unseal_state(sealed_state, *vm_key, params.acvm_id,
                                  params.expected_counter);
  if (!state.ok()) return state.error();
  bindings_.emplace(
      params.acvm_id,
      Binding{vtpm::Vtpm::from_state(state.take()), std::move(*vm_key),
              std::move(session_key), params.init_measurement, 0, false});
  return {};
}

Result<void> TpmcvmService::complete_bind(const std::string& acvm_id,
                                          const crypto::Digest& binding_hmac) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = bindings_.find(acvm_id);
  if (it == bindings_.end()) {
    return {Err::kNotFound, "no pending bind for '" + acvm_id + "'"};
  }
  Binding& binding = it->second;
  if (binding.bound) {
    return {Err::kRefused, "binding proof already extended"};
  }
  // The proof precedes the init measurement in PCR0, always.
  auto first = binding.tpm.pcr_extend(0, binding_hmac, "binding-proof");
  if (!first.ok()) return first;
  auto second =
      binding.tpm.pcr_extend(0, binding.init_measurement, "acvm-init");
  if (!second.ok()) return second;
  binding.bound = true;
  return {};
}

std::optional<net::Frame> TpmcvmService::handle_wrapped(
    const net::Frame& frame) {
  std::lock_guard<std::mutex> lock(mu_);
  auto body = wire::WrappedFrameBody::decode(frame.payload);
  if (!body.ok()) {
    alerts_.push_back("wrapped frame: malformed body, dropped");
    return std::nullopt;
  }
  auto it = bindings_.find(body.value().acvm_id);
  if (it == bindings_.end() || !it->second.bound) {
    alerts_.push_back("wrapped frame for unknown or unbound ACVM '" +
                      body.value().acvm_id + "', dropped");
    return std::nullopt;
  }
  Binding& binding = it->second;
  if (body.value().direction != wire::kDirCommand) {
    alerts_.push_back("wrapped frame with wrong direction, dropped");
    return std::nullopt;
  }
  std::uint64_t expected_seq = binding.expected_cmd_seq + 1;
  if (body.value().sequence != expected_seq) {
    alerts_.push_back("wrapped frame out of sequence (got " +
                      std::to_string(body.value().sequence) + ", expected " +
                      std::to_string(expected_seq) + "), dropped");
    return std::nullopt;
  }
  // AAD is rebuilt from the expected sequence; a replayed or cross-session
  // frame fails authentication here even with a doctored header.
  auto command = crypto::aead_open(
      binding.session_key, body.value().blob,
      wire::wrapped_aad(body.value().acvm_id, wire::kDirCommand,
                        expected_seq));
  if (!command.ok()) {
    alerts_.push_back("wrapped frame failed authentication, dropped");
    return std::nullopt;
  }
  binding.expected_cmd_seq = expected_seq;

  Bytes chain_bytes;
  std::vector<crypto::Certificate> chain = issuer_chain_;
  chain.push_back(rk_certificate_);
  chain.push_back(binding.tpm.state().endorsement_cert);
  Bytes response = tpm_cmd::dispatch(binding.tpm, chain, command.value());

  wire::WrappedFrameBody reply;
  reply.acvm_id = body.value().acvm_id;
  reply.direction = wire::kDirResponse;
  reply.sequence = expected_seq;
  reply.blob = crypto::aead_seal(
      binding.session_key, response,
      wire::wrapped_aad(reply.acvm_id, wire::kDirResponse, expected_seq));
  return net::Frame{static_cast<std::uint8_t>(wire::FrameType::kWrappedResp),
                    net::kWireVersion, reply.encode()};
}

Result<TpmcvmService::TeardownOutput> TpmcvmService::teardown(
    const std::string& acvm_id) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = bindings_.find(acvm_id);
  if (it == bindings_.end()) {
    return {Err::kNotFound, "ACVM '" + acvm_id + "' not bound"};
  }
  Binding& binding = it->second;
  binding.tpm.bump_counter();
  std::uint64_t new_counter = binding.tpm.counter();
  Bytes sealed = vtpm::seal_state(binding.tpm.state(), binding.vm_key, acvm_id,
                                  new_counter);
  bindings_.erase(it);
  return TeardownOutput{std::move(sealed), new_counter};
}

std::vector<std::string> TpmcvmService::active_acvms() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::string> ids;
  for (const auto& [id, binding] : bindings_) {
    (void)binding;
    ids.push_back(id);
  }
  return ids;
}

std::vector<std::string> TpmcvmService::alerts() const {
  std::lock_guard<std::mutex> lock(mu_);
  return alerts_;
}

std::vector<crypto::Certificate> TpmcvmService::ek_chain_for(
    const std::string& acvm_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = bindings_.find(acvm_id);
  if (it == bindings_.end()) return {};
  std::vector<crypto::Certificate> chain = issuer_chain_;
  chain.push_back(rk_certificate_);
  chain.push_back(it->second.tpm.state().endorsement_cert);
  return chain;
}

std::optional<vtpm::PcrBank> TpmcvmService::bank_of(
    const std::string& acvm_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = bindings_.find(acvm_id);
  if (it == bindings_.end()) return std::nullopt;
  return it->second.tpm.bank();
}

}  // namespace t3cvm::tpmcvm
