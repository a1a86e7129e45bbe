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

#ifndef T3CVM_MANAGER_HPP_
#define T3CVM_MANAGER_HPP_

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "t3cvm/crypto.hpp"
#include "t3cvm/event_log.hpp"
#include "t3cvm/image.hpp"
#include "t3cvm/node_link.hpp"
#include "t3cvm/result.hpp"
#include "t3cvm/secure_channel.hpp"
#include "t3cvm/vtpm.hpp"

namespace t3cvm::mgr {

// One CN-TPMCVM under management.
struct TpmListEntry {
  enum class State { kPending, kBootedVerified, kFailed };

  std::string tpmcvm_id;
  crypto::KeyPair root_key_pair;
  crypto::Certificate rk_certificate;
  std::optional<crypto::SymmetricKey> image_key;
  std::optional<crypto::SymmetricKey> measure_key;
  crypto::KeyPair tls_key_pair;
  crypto::Certificate tls_certificate;
  crypto::Digest initialization_measurement;
  crypto::Digest boot_measurements_final;
  std::vector<boot::BootEvent> boot_event_list;
  std::vector<std::string> acvm_pointers;
  State state = State::kPending;
};

// One registered ACVM.
struct VmListEntry {
  std::string acvm_id;
  std::string acvm_id_alias;  // the registered image name; one per user
  std::string user_identifier;
  crypto::KeyPair amd_key;  // GODH key pair for secret injection
  std::optional<crypto::SymmetricKey> vm_key;
  Bytes acvm_image;  // encoded image::CvmImage
  Bytes tpm_state_sealed;  // empty until the first teardown
  std::uint64_t expected_counter = 0;
  crypto::Digest golden_init_measurement;
  std::vector<boot::BootEvent> golden_boot_events;
  std::string bound_tpmcvm;
  crypto::Digest last_init_measurement;
};

struct AuditEntry {
  int step = 0;
  std::string entry_id;
  std::string outcome;  // "ok" | "failed"
  std::string error_code;
  std::string detail;
};

// The root of trust: owns TPM-List and VM-List, runs the vTPM-like service
// for CN-TPMCVM launches, orchestrates both launch protocols and is the sole
// custodian of vTPM state files and keys.
class TrManager {
 public:
  struct Config {
    std::string identity = "tr-manager";
    crypto::KeyPair user_node_root;  // TRK; used once, to sign the MRK
    crypto::Certificate trk_certificate;
    const crypto::CertificateAuthority* ca = nullptr;
    crypto::Certificate ca_root;
    crypto::Certificate amd_root;  // anchor for cloud platform chains
  };

  // Generates the MRK, has it signed into the manager chain and opens the
  // instance. A second live instance with the same identity is refused, as
  // is startup without a reachable CA.
  static Result<std::unique_ptr<TrManager>> init(Config config);
  ~TrManager();

  TrManager(const TrManager&) = delete;
  TrManager& operator=(const TrManager&) = delete;

  Result<std::string> register_acvm(const std::string& user,
                                    const image::CvmImage& img);

  // The ten-step CN-TPMCVM launch. On success the entry is booted-verified
  // and the TLS channel to its CN-MvTPM module is up; on failure the entry
  // is marked failed and the CVM is torn down.
  Result<std::string> launch_tpmcvm(cloud::NodeLink& node);

  // The ten-step ACVM launch against a booted-verified CN-TPMCVM.
  Result<void> launch_acvm(const std::string& acvm_id,
                           const std::string& tpmcvm_id,
                           cloud::NodeLink& node);

  // Ends an ACVM: the CN-TPMCVM seals the vTPM state under the incremented
  // counter and returns it; the manager verifies the blob before storing it.
  Result<void> teardown_acvm(const std::string& acvm_id,
                             cloud::NodeLink& node);

  // User-trusted-path disclosure for verification of one ACVM.
  struct Disclosure {
    crypto::SymmetricKey vm_key;
    Bytes binding_inputs;
    crypto::Digest init_measurement;  // of the most recent launch
    crypto::Digest golden_init;
    std::vector<boot::BootEvent> golden_boot_events;
    std::uint64_t expected_counter = 0;
  };
  Result<Disclosure> disclose(const std::string& acvm_id) const;

  // [ca_root, trk, mrk]
  std::vector<crypto::Certificate> manager_chain() const;
  const crypto::Certificate& mrk_certificate() const { return mrk_cert_; }

  const TpmListEntry* tpm_entry(const std::string& tpmcvm_id) const;
  const VmListEntry* vm_entry(const std::string& acvm_id) const;
  std::size_t tpm_list_size() const;
  std::size_t vm_list_size() const;

  std::vector<AuditEntry> audit_log() const;
  std::string audit_jsonl() const;

  // Versioned at-rest snapshot of both lists, sealed under a manager
  // storage key. In-flight launches do not survive a restore.
  Bytes snapshot(const crypto::SymmetricKey& storage_key) const;
  Result<void> restore(ConstSpan blob, const crypto::SymmetricKey& storage_key);

  // Canonical (final boot fold, init measurement) encoding for one
  // CN-TPMCVM; the HMAC input of every binding proof it hosts.
  Result<Bytes> binding_inputs_for(const std::string& tpmcvm_id) const;

 private:
  explicit TrManager(Config config);

  struct Session {
    net::ChannelPtr channel;
    std::optional<net::TlsSession> tls;
  };

  void audit(int step, const std::string& entry_id, bool ok,
             const std::string& error_code = "", const std::string& detail = "");
  Result<Bytes> verified_platform_key(cloud::NodeLink& node);
  Result<void> run_acvm_launch(VmListEntry& vm, TpmListEntry& tpm,
                               Session& session, cloud::NodeLink& node);
  static Bytes binding_inputs_of(const TpmListEntry& entry);

  Config config_;
  crypto::KeyPair mrk_;
  crypto::Certificate mrk_cert_;

  mutable std::mutex mu_;
  std::map<std::string, TpmListEntry> tpm_list_;
  std::map<std::string, VmListEntry> vm_list_;
  std::map<std::string, Session> sessions_;
  std::vector<AuditEntry> audit_;
  int next_tpmcvm_ = 1;
  int next_acvm_ = 1;
  bool registered_identity_ = false;
};

}  // namespace t3cvm::mgr

#endif  // T3CVM_MANAGER_HPP_
