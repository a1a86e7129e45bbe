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

#include "t3cvm/manager.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>

#include "t3cvm/encode.hpp"
#include "t3cvm/wire.hpp"

namespace t3cvm::mgr {

namespace {

constexpr auto kProtocolTimeout = std::chrono::milliseconds(10000);
constexpr std::uint64_t kSnapshotVersion = 1;

// Live-instance registry backing the single-instance guard.
std::mutex g_instances_mu;
std::set<std::string>& instances() {
  static auto* set = new std::set<std::string>();
  return *set;
}

std::uint8_t frame_type(wire::FrameType t) {
  return static_cast<std::uint8_t>(t);
}

Bytes stage_blob(const char* label, const std::string& id) {
  Encoder enc;
  enc.put_str(label).put_str(id);
  return enc.take();
}

Result<wire::MgmtRecord> next_record(net::Channel& channel,
                                     net::TlsSession& tls,
                                     std::chrono::milliseconds timeout) {
  auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) return {Err::kTimeout, "no management record"};
    auto frame = channel.recv(remaining);
    if (!frame) return {Err::kTimeout, "channel closed or timed out"};
    if (frame->type != frame_type(wire::FrameType::kTlsRecord)) continue;
    auto opened = tls.open_record(*frame);
    if (!opened.ok()) return opened.error();
    return wire::MgmtRecord::decode(opened.value());
  }
}

}  // namespace

TrManager::TrManager(Config config) : config_(std::move(config)) {}

Result<std::unique_ptr<TrManager>> TrManager::init(Config config) {
  if (config.ca == nullptr || !config.ca->reachable) {
    return {Err::kUnavailable, "certificate authority unreachable at startup"};
  }
  {
    std::lock_guard<std::mutex> lock(g_instances_mu);
    if (!instances().insert(config.identity).second) {
      return {Err::kAlreadyExists,
              "a manager instance '" + config.identity + "' is already live"};
    }
  }
  auto manager = std::unique_ptr<TrManager>(new TrManager(std::move(config)));
  manager->registered_identity_ = true;
  manager->mrk_ = crypto::KeyPair::generate(crypto::KeyPairRole::kManagerRoot);
  // The user-trusted entity's root key signs the MRK; the CA anchors the
  // chain above it.
  manager->mrk_cert_ = crypto::issue_certificate(
      manager->config_.user_node_root,
      manager->config_.trk_certificate.subject, manager->config_.identity,
      manager->mrk_.public_key());
  return manager;
}

TrManager::~TrManager() {
  if (registered_identity_) {
    std::lock_guard<std::mutex> lock(g_instances_mu);
    instances().erase(config_.identity);
  }
}

void TrManager::audit(int step, const std::string& entry_id, bool ok,
                      const std::string& error_code,
                      const std::string& detail) {
  audit_.push_back(AuditEntry{step, entry_id, ok ? "ok" : "failed", error_code,
                              detail});
}

std::vector<crypto::Certificate> TrManager::manager_chain() const {
  return {config_.ca_root, config_.trk_certificate, mrk_cert_};
}

Result<std::string> TrManager::register_acvm(const std::string& user,
                                             const image::CvmImage& img) {
  std::lock_guard<std::mutex> lock(mu_);
  if (img.uefi_region.empty()) {
    return {Err::kRefused, "empty image"};
  }
  auto payload = image::StagePayload::decode(img.payload_region);
  if (!payload.ok()) {
    return {Err::kRefused, "ACVM image payload must be decodable for golden "
                           "measurement registration"};
  }
  for (const auto& [id, entry] : vm_list_) {
    if (entry.user_identifier == user &&
        entry.acvm_id_alias == img.metadata.name) {
      return {Err::kAlreadyExists,
              "ACVM '" + img.metadata.name + "' already registered for " + user};
    }
  }

  VmListEntry entry;
  entry.acvm_id = "acvm-" + std::to_string(next_acvm_++);
  entry.acvm_id_alias = img.metadata.name;
  entry.user_identifier = user;
  entry.amd_key = crypto::KeyPair::generate(crypto::KeyPairRole::kGodh);
  entry.vm_key = crypto::SymmetricKey::generate(crypto::KeyRole::kVmKey);
  entry.acvm_image = img.encode();
  entry.expected_counter = 0;
  entry.golden_init_measurement = image::initialization_measurement(img);
  entry.golden_boot_events = image::stage_events(img.uefi_region,
                                                 payload.value());
  std::string id = entry.acvm_id;
  vm_list_.emplace(id, std::move(entry));
  return id;
}

Result<Bytes> TrManager::verified_platform_key(cloud::NodeLink& node) {
  auto chain = node.platform_chain();
  if (!chain.ok()) return chain.error();
  auto verified = crypto::verify_chain(chain.value(), config_.amd_root);
  if (!verified.ok()) {
    return {Err::kPlatformUntrusted,
            "platform chain invalid: " + verified.error().to_string()};
  }
  return chain.value().back().subject_public_key;
}

Bytes TrManager::binding_inputs_of(const TpmListEntry& entry) {
  Encoder enc;
  enc.put_bytes(entry.boot_measurements_final.span())
      .put_bytes(entry.initialization_measurement.span());
  return enc.take();
}

Result<Bytes> TrManager::binding_inputs_for(
    const std::string& tpmcvm_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = tpm_list_.find(tpmcvm_id);
  if (it == tpm_list_.end()) {
    return {Err::kNotFound, "no CN-TPMCVM '" + tpmcvm_id + "'"};
  }
  return binding_inputs_of(it->second);
}

Result<std::string> TrManager::launch_tpmcvm(cloud::NodeLink& node) {
  std::lock_guard<std::mutex> lock(mu_);
  std::string id = "tpmcvm-" + std::to_string(next_tpmcvm_++);

  TpmListEntry entry;
  entry.tpmcvm_id = id;

  auto fail = [&](int step, Err code, const std::string& detail) -> Error {
    audit(step, id, false, err_name(code), detail);
    entry.state = TpmListEntry::State::kFailed;
    tpm_list_[id] = entry;
    sessions_.erase(id);
    (void)node.destroy_cvm(id);
    return Error{code, detail, step};
  };

  // Step 1: TPM-List entry and the CN-TPMCVM root key, certified under the
  // manager chain.
  entry.root_key_pair = crypto::KeyPair::generate(crypto::KeyPairRole::kTpmcvmRoot);
  entry.rk_certificate = crypto::issue_certificate(
      mrk_, config_.identity, id, entry.root_key_pair.public_key());
  audit(1, id, true);

  // Step 2: verify the confidential environment's certificate chain.
  auto platform_key = verified_platform_key(node);
  if (!platform_key.ok()) {
    return fail(2, Err::kPlatformUntrusted, platform_key.error().detail);
  }
  audit(2, id, true);

  // Step 3: TLS key pair and measure key.
  entry.tls_key_pair = crypto::KeyPair::generate(crypto::KeyPairRole::kTls);
  entry.tls_certificate = crypto::issue_certificate(
      mrk_, config_.identity, id + "-tls", entry.tls_key_pair.public_key());
  entry.measure_key = crypto::SymmetricKey::generate(crypto::KeyRole::kMeasureKey);
  audit(3, id, true);

  // Step 4: build the minimized image, embed the TLS material, seal the
  // payload under a fresh image key and hand it to the node.
  Bytes uefi = stage_blob("tpmcvm-uefi", id);
  image::StagePayload payload;
  payload.bootloader = stage_blob("tpmcvm-bootloader", id);
  payload.kernel = stage_blob("tpmcvm-kernel", id);
  payload.application = stage_blob("tpmcvm-application", id);
  Encoder embedded;
  embedded.put_bytes(entry.tls_key_pair.encode())
      .put_bytes(entry.tls_certificate.encode());
  payload.embedded_config = embedded.take();
  std::vector<boot::BootEvent> golden = image::stage_events(uefi, payload);
  entry.image_key = crypto::SymmetricKey::generate(crypto::KeyRole::kImageKey);
  image::CvmImage img = image::build_sealed_image(
      image::ImageMetadata{id, "1"}, uefi, payload, *entry.image_key);
  crypto::Digest expected_init = image::initialization_measurement(img);

  auto launch = node.launch_cvm(id, wire::GuestKind::kTpmcvm, img.encode());
  if (!launch.ok()) {
    return fail(4, Err::kLaunchAborted, launch.error().to_string());
  }
  if (!crypto::verify_signature(
          platform_key.value(),
          wire::launch_dh_transcript(id, launch.value().launch_dh_public),
          launch.value().launch_dh_signature)) {
    return fail(4, Err::kPlatformUntrusted, "launch DH key signature invalid");
  }
  audit(4, id, true);

  // Step 5: validate the initialization measurement.
  if (!(launch.value().init_measurement == expected_init)) {
    return fail(5, Err::kInitMeasurementMismatch,
                "firmware measured " + launch.value().init_measurement.hex());
  }
  entry.initialization_measurement = launch.value().init_measurement;
  audit(5, id, true);

  // Step 6: secret injection of the image and measure keys.
  auto channel = node.open_guest_channel(id);
  if (!channel.ok()) {
    return fail(6, Err::kLaunchAborted, channel.error().to_string());
  }
  crypto::KeyPair godh = crypto::KeyPair::generate(crypto::KeyPairRole::kGodh);
  Bytes shared = crypto::dh_shared(godh.private_key(),
                                   launch.value().launch_dh_public);
  crypto::SymmetricKey transport = wire::injection_channel_key(shared, id);
  wire::InjectionBody secrets{wire::kInjectTpmcvmKeys,
                              Bytes(entry.image_key->span().begin(),
                                    entry.image_key->span().end()),
                              Bytes(entry.measure_key->span().begin(),
                                    entry.measure_key->span().end())};
  Bytes sealed = crypto::aead_seal(transport, secrets.encode(),
                                   wire::injection_aad(id));
  auto injected = node.inject_secret(id, godh.public_key(), sealed);
  if (!injected.ok()) {
    return fail(6, Err::kLaunchAborted, injected.error().to_string());
  }
  audit(6, id, true);

  // Steps 7 and 8: the vTPM-like service. The initialization measurement is
  // stored in the PCRs-like space first, then the streamed boot measurements
  // extend it; after boot the events are validated against the golden list
  // and folded into the entry.
  vtpm::PcrBank pcrs_like;
  (void)pcrs_like.extend(0, entry.initialization_measurement);
  std::uint64_t last_seq = 0;
  std::vector<crypto::Digest> folded_inputs;
  bool complete = false;
  auto deadline = std::chrono::steady_clock::now() + kProtocolTimeout;
  while (!complete) {
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      return fail(7, Err::kLaunchAborted, "boot measurement stream timed out");
    }
    auto frame = channel.value()->recv(remaining);
    if (!frame) {
      return fail(7, Err::kLaunchAborted,
                  "boot measurement stream closed (boot halted?)");
    }
    if (frame->type == frame_type(wire::FrameType::kMeasureEvent)) {
      auto envelope = wire::SealedEnvelope::decode(frame->payload);
      if (!envelope.ok()) {
        return fail(7, Err::kChannelAuthFailure, "malformed measurement");
      }
      if (envelope.value().sequence != last_seq + 1 ||
          envelope.value().sender_id != id) {
        return fail(7, Err::kSequenceViolation,
                    "measurement out of order or misattributed");
      }
      auto opened = crypto::aead_open(
          *entry.measure_key, envelope.value().blob,
          wire::envelope_aad("measure-event", id, envelope.value().sequence));
      if (!opened.ok()) {
        return fail(7, Err::kChannelAuthFailure,
                    "measurement failed authentication");
      }
      auto body = wire::MeasureEventBody::decode(opened.value());
      if (!body.ok()) {
        return fail(7, Err::kChannelAuthFailure, "bad measurement body");
      }
      last_seq = envelope.value().sequence;
      entry.boot_event_list.push_back(
          boot::BootEvent{last_seq, body.value().stage,
                          body.value().description, body.value().measurement});
      (void)pcrs_like.extend(boot::stage_pcr(body.value().stage),
                             body.value().measurement);
      folded_inputs.push_back(body.value().measurement);
      continue;
    }
    if (frame->type == frame_type(wire::FrameType::kBootComplete)) {
      auto envelope = wire::SealedEnvelope::decode(frame->payload);
      if (!envelope.ok() || envelope.value().sequence != last_seq + 1) {
        return fail(8, Err::kSequenceViolation, "bad boot-complete marker");
      }
      auto opened = crypto::aead_open(
          *entry.measure_key, envelope.value().blob,
          wire::envelope_aad("boot-complete", id, envelope.value().sequence));
      if (!opened.ok()) {
        return fail(8, Err::kChannelAuthFailure,
                    "boot-complete failed authentication");
      }
      auto body = wire::BootCompleteBody::decode(opened.value());
      if (!body.ok() || body.value().event_count != entry.boot_event_list.size()) {
        return fail(8, Err::kBootMeasurementMismatch,
                    "boot-complete event count mismatch");
      }
      complete = true;
      continue;
    }
    // Any other traffic before boot completion is a protocol violation.
    return fail(7, Err::kSequenceViolation, "unexpected frame during boot");
  }
  audit(7, id, true);

  if (entry.boot_event_list.size() != golden.size()) {
    return fail(8, Err::kBootMeasurementMismatch, "boot event count mismatch");
  }
  for (std::size_t i = 0; i < golden.size(); ++i) {
    if (!(entry.boot_event_list[i].measurement == golden[i].measurement) ||
        entry.boot_event_list[i].stage != golden[i].stage) {
      return fail(8, Err::kBootMeasurementMismatch,
                  "boot event " + std::to_string(i) + " diverges from golden");
    }
  }
  entry.boot_measurements_final = boot::fold_measurements(folded_inputs);
  audit(8, id, true);

  // Step 9: enable the TLS key pair.
  auto tls = net::TlsSession::initiate(*channel.value(), entry.tls_key_pair,
                                       entry.tls_key_pair.public_key(),
                                       kProtocolTimeout);
  if (!tls.ok()) {
    return fail(9, Err::kChannelAuthFailure, tls.error().to_string());
  }
  audit(9, id, true);

  // Step 10: deploy the CN-TPMCVM root key pair and certificate.
  Session session{channel.value(), std::move(tls.value())};
  wire::DeployRootBody deploy{entry.root_key_pair.encode(),
                              entry.rk_certificate, manager_chain()};
  wire::MgmtRecord record{wire::MgmtOp::kDeployRoot, deploy.encode()};
  if (!session.channel->send(session.tls->seal_record(record.encode()))) {
    return fail(10, Err::kLaunchAborted, "channel closed at root deployment");
  }
  auto ack = next_record(*session.channel, *session.tls, kProtocolTimeout);
  if (!ack.ok() || ack.value().op != wire::MgmtOp::kAck) {
    return fail(10, Err::kLaunchAborted, "no acknowledgment for root deployment");
  }
  audit(10, id, true);

  entry.state = TpmListEntry::State::kBootedVerified;
  tpm_list_[id] = std::move(entry);
  sessions_[id] = std::move(session);
  return id;
}

Result<void> TrManager::run_acvm_launch(VmListEntry& vm, TpmListEntry& tpm,
                                        Session& session,
                                        cloud::NodeLink& node) {
  const std::string& id = vm.acvm_id;

  auto fail = [&](int step, Err code, const std::string& detail) -> Error {
    audit(step, id, false, err_name(code), detail);
    (void)node.destroy_cvm(id);
    return Error{code, detail, step};
  };

  // Step 1: launch request accepted.
  audit(1, id, true);

  // Step 2: hand the stored image to the hypervisor.
  auto platform_key = verified_platform_key(node);
  if (!platform_key.ok()) {
    return fail(2, Err::kPlatformUntrusted, platform_key.error().detail);
  }
  auto launch = node.launch_cvm(id, wire::GuestKind::kAcvm, vm.acvm_image);
  if (!launch.ok()) {
    return fail(2, Err::kLaunchAborted, launch.error().to_string());
  }
  if (!crypto::verify_signature(
          platform_key.value(),
          wire::launch_dh_transcript(id, launch.value().launch_dh_public),
          launch.value().launch_dh_signature)) {
    return fail(2, Err::kPlatformUntrusted, "launch DH key signature invalid");
  }
  audit(2, id, true);

  // Step 3: verify the initialization measurement against golden.
  vm.last_init_measurement = launch.value().init_measurement;
  if (!(launch.value().init_measurement == vm.golden_init_measurement)) {
    return fail(3, Err::kInitMeasurementMismatch,
                "firmware measured " + launch.value().init_measurement.hex());
  }
  audit(3, id, true);

  // Step 4: VM key and expected counter inside the secure channel; the
  // sealed state file (already ciphertext under the VM key) as its own
  // transfer frame.
  bool fresh = vm.tpm_state_sealed.empty();
  wire::VmKeyAndStateBody params{
      id,
      Bytes(vm.vm_key->span().begin(), vm.vm_key->span().end()),
      vm.expected_counter, fresh, launch.value().init_measurement};
  wire::MgmtRecord params_record{wire::MgmtOp::kVmKeyAndState, params.encode()};
  if (!session.channel->send(session.tls->seal_record(params_record.encode()))) {
    return fail(4, Err::kLaunchAborted, "secure channel closed");
  }
  if (!fresh) {
    wire::StateTransferBody transfer{id, vm.tpm_state_sealed};
    if (!session.channel->send(
            net::Frame{frame_type(wire::FrameType::kStateTransfer),
                       net::kWireVersion, transfer.encode()})) {
      return fail(4, Err::kLaunchAborted, "state transfer failed");
    }
  }
  audit(4, id, true);

  // Step 5: session key to both ends — TLS to the vTPM side, secret
  // injection to the ACVM.
  crypto::SymmetricKey session_key =
      crypto::SymmetricKey::generate(crypto::KeyRole::kSessionKey);
  wire::SessionKeyBody key_body{
      id, Bytes(session_key.span().begin(), session_key.span().end())};
  wire::MgmtRecord key_record{wire::MgmtOp::kSessionKey, key_body.encode()};
  if (!session.channel->send(session.tls->seal_record(key_record.encode()))) {
    return fail(5, Err::kLaunchAborted, "secure channel closed");
  }
  Bytes shared = crypto::dh_shared(vm.amd_key.private_key(),
                                   launch.value().launch_dh_public);
  crypto::SymmetricKey transport = wire::injection_channel_key(shared, id);
  wire::InjectionBody secrets{
      wire::kInjectSessionKey,
      Bytes(session_key.span().begin(), session_key.span().end()),
      {}};
  auto injected = node.inject_secret(
      id, vm.amd_key.public_key(),
      crypto::aead_seal(transport, secrets.encode(), wire::injection_aad(id)));
  if (!injected.ok()) {
    return fail(5, Err::kLaunchAborted, injected.error().to_string());
  }
  audit(5, id, true);
  // Step 6 is the guest's boot continuing; nothing to drive from here.
  audit(6, id, true);

  // Steps 7-9 run inside the CN-TPMCVM; serve its binding-proof request and
  // wait for the bind result.
  for (;;) {
    auto record = next_record(*session.channel, *session.tls, kProtocolTimeout);
    if (!record.ok()) {
      return fail(7, Err::kLaunchAborted, record.error().to_string());
    }
    if (record.value().op == wire::MgmtOp::kBindingHmacRequest) {
      auto ref = wire::AcvmRef::decode(record.value().body);
      if (!ref.ok() || ref.value().acvm_id != id) {
        return fail(8, Err::kSequenceViolation,
                    "binding proof requested for the wrong launch");
      }
      // Step 8: HMAC of the hosting CVM's boot measurements under the VM key.
      crypto::Digest proof =
          crypto::hmac(*vm.vm_key, binding_inputs_of(tpm));
      wire::BindingHmacResponseBody response{id, proof};
      wire::MgmtRecord reply{wire::MgmtOp::kBindingHmacResponse,
                             response.encode()};
      if (!session.channel->send(session.tls->seal_record(reply.encode()))) {
        return fail(8, Err::kLaunchAborted, "secure channel closed");
      }
      audit(8, id, true);
      continue;
    }
    if (record.value().op == wire::MgmtOp::kBindResult) {
      auto status = wire::StatusBody::decode(record.value().body);
      if (!status.ok()) {
        return fail(9, Err::kLaunchAborted, "malformed bind result");
      }
      if (!status.value().ok) {
        Err code = status.value().error;
        return fail(7, code, status.value().detail);
      }
      audit(9, id, true);
      break;
    }
    return fail(7, Err::kSequenceViolation, "unexpected management record");
  }

  // Step 10: wire the ACVM's TPM traffic and let the measured boot proceed.
  auto bound = node.bind_vtpm(id, tpm.tpmcvm_id);
  if (!bound.ok()) {
    return fail(10, Err::kLaunchAborted, bound.error().to_string());
  }
  audit(10, id, true);

  vm.bound_tpmcvm = tpm.tpmcvm_id;
  if (std::find(tpm.acvm_pointers.begin(), tpm.acvm_pointers.end(), id) ==
      tpm.acvm_pointers.end()) {
    tpm.acvm_pointers.push_back(id);
  }
  return {};
}

Result<void> TrManager::launch_acvm(const std::string& acvm_id,
                                    const std::string& tpmcvm_id,
                                    cloud::NodeLink& node) {
  std::lock_guard<std::mutex> lock(mu_);
  auto vm_it = vm_list_.find(acvm_id);
  if (vm_it == vm_list_.end()) {
    return {Err::kNotFound, "ACVM '" + acvm_id + "' is not registered"};
  }
  if (!vm_it->second.bound_tpmcvm.empty()) {
    return {Err::kRefused, "ACVM '" + acvm_id + "' is already running"};
  }
  auto tpm_it = tpm_list_.find(tpmcvm_id);
  if (tpm_it == tpm_list_.end() ||
      tpm_it->second.state != TpmListEntry::State::kBootedVerified) {
    return {Err::kRefused,
            "CN-TPMCVM '" + tpmcvm_id + "' is not booted-verified"};
  }
  auto session_it = sessions_.find(tpmcvm_id);
  if (session_it == sessions_.end() || !session_it->second.tls) {
    return {Err::kRefused, "no secure channel to '" + tpmcvm_id + "'"};
  }
  return run_acvm_launch(vm_it->second, tpm_it->second, session_it->second,
                         node);
}

Result<void> TrManager::teardown_acvm(const std::string& acvm_id,
                                      cloud::NodeLink& node) {
  std::lock_guard<std::mutex> lock(mu_);
  auto vm_it = vm_list_.find(acvm_id);
  if (vm_it == vm_list_.end()) {
    return {Err::kNotFound, "ACVM '" + acvm_id + "' is not registered"};
  }
  VmListEntry& vm = vm_it->second;
  if (vm.bound_tpmcvm.empty()) {
    return {Err::kRefused, "ACVM '" + acvm_id + "' is not running"};
  }
  auto session_it = sessions_.find(vm.bound_tpmcvm);
  if (session_it == sessions_.end() || !session_it->second.tls) {
    return {Err::kUnavailable, "no secure channel to '" + vm.bound_tpmcvm + "'"};
  }
  Session& session = session_it->second;

  wire::AcvmRef ref{acvm_id};
  wire::MgmtRecord record{wire::MgmtOp::kTeardown, ref.encode()};
  if (!session.channel->send(session.tls->seal_record(record.encode()))) {
    return {Err::kUnavailable, "secure channel closed"};
  }

  // Expect the sealed state as a transfer frame, then the teardown result.
  std::optional<Bytes> returned_state;
  std::optional<wire::StatusBody> result;
  auto deadline = std::chrono::steady_clock::now() + kProtocolTimeout;
  while (!result) {
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      return {Err::kTimeout, "teardown timed out"};
    }
    auto frame = session.channel->recv(remaining);
    if (!frame) return {Err::kUnavailable, "secure channel closed"};
    if (frame->type == frame_type(wire::FrameType::kStateTransfer)) {
      auto transfer = wire::StateTransferBody::decode(frame->payload);
      if (transfer.ok() && transfer.value().acvm_id == acvm_id) {
        returned_state = transfer.value().sealed_state;
      }
      continue;
    }
    if (frame->type == frame_type(wire::FrameType::kTlsRecord)) {
      auto opened = session.tls->open_record(*frame);
      if (!opened.ok()) return opened.error();
      auto mgmt = wire::MgmtRecord::decode(opened.value());
      if (!mgmt.ok() || mgmt.value().op != wire::MgmtOp::kTeardownResult) {
        continue;
      }
      auto status = wire::StatusBody::decode(mgmt.value().body);
      if (!status.ok()) return {Err::kMalformed, "bad teardown result"};
      result = status.take();
    }
  }
  if (!result->ok) {
    return Error{result->error, result->detail};
  }
  if (result->counter != vm.expected_counter + 1) {
    return {Err::kRollbackDetected,
            "teardown counter " + std::to_string(result->counter) +
                ", expected " + std::to_string(vm.expected_counter + 1)};
  }
  if (!returned_state) {
    return {Err::kUnavailable, "no state file returned at teardown"};
  }
  // Custody check before storing: the returned blob must unseal for this
  // ACVM under the new counter.
  auto verified = vtpm::unseal_state(*returned_state, *vm.vm_key, acvm_id,
                                     result->counter);
  if (!verified.ok()) {
    return verified.error();
  }

  vm.tpm_state_sealed = *returned_state;
  vm.expected_counter = result->counter;
  auto tpm_it = tpm_list_.find(vm.bound_tpmcvm);
  if (tpm_it != tpm_list_.end()) {
    auto& pointers = tpm_it->second.acvm_pointers;
    pointers.erase(std::remove(pointers.begin(), pointers.end(), acvm_id),
                   pointers.end());
  }
  vm.bound_tpmcvm.clear();
  (void)node.destroy_cvm(acvm_id);
  return {};
}

Result<TrManager::Disclosure> TrManager::disclose(
    const std::string& acvm_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto vm_it = vm_list_.find(acvm_id);
  if (vm_it == vm_list_.end()) {
    return {Err::kNotFound, "ACVM '" + acvm_id + "' is not registered"};
  }
  const VmListEntry& vm = vm_it->second;
  std::string host = vm.bound_tpmcvm;
  if (host.empty()) {
    return {Err::kRefused, "ACVM '" + acvm_id + "' is not running"};
  }
  auto tpm_it = tpm_list_.find(host);
  if (tpm_it == tpm_list_.end()) {
    return {Err::kNotFound, "no CN-TPMCVM '" + host + "'"};
  }
  return Disclosure{*vm.vm_key,
                    binding_inputs_of(tpm_it->second),
                    vm.last_init_measurement,
                    vm.golden_init_measurement,
                    vm.golden_boot_events,
                    vm.expected_counter};
}

const TpmListEntry* TrManager::tpm_entry(const std::string& tpmcvm_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = tpm_list_.find(tpmcvm_id);
  return it == tpm_list_.end() ? nullptr : &it->second;
}

const VmListEntry* TrManager::vm_entry(const std::string& acvm_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = vm_list_.find(acvm_id);
  return it == vm_list_.end() ? nullptr : &it->second;
}

std::size_t TrManager::tpm_list_size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return tpm_list_.size();
}

std::size_t TrManager::vm_list_size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return vm_list_.size();
}

std::vector<AuditEntry> TrManager::audit_log() const {
  std::lock_guard<std::mutex> lock(mu_);
  return audit_;
}

std::string TrManager::audit_jsonl() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::string out;
  for (const auto& entry : audit_) {
    nlohmann::json j;
    j["step"] = entry.step;
    j["entry_id"] = entry.entry_id;
    j["outcome"] = entry.outcome;
    j["error_code"] = entry.error_code;
    if (!entry.detail.empty()) j["detail"] = entry.detail;
    out += j.dump();
    out += "\n";
  }
  return out;
}

Bytes TrManager::snapshot(const crypto::SymmetricKey& storage_key) const {
  std::lock_guard<std::mutex> lock(mu_);
  Encoder enc;
  enc.put_u64(kSnapshotVersion);
  enc.put_u64(vm_list_.size());
  for (const auto& [id, vm] : vm_list_) {
    Encoder e;
    e.put_str(vm.acvm_id)
        .put_str(vm.acvm_id_alias)
        .put_str(vm.user_identifier)
        .put_bytes(vm.amd_key.encode())
        .put_bytes(vm.vm_key->span())
        .put_bytes(vm.acvm_image)
        .put_bytes(vm.tpm_state_sealed)
        .put_u64(vm.expected_counter)
        .put_bytes(vm.golden_init_measurement.span())
        .put_u64(vm.golden_boot_events.size());
    for (const auto& event : vm.golden_boot_events) {
      e.put_u64(event.sequence)
          .put_u8(static_cast<std::uint8_t>(event.stage))
          .put_str(event.description)
          .put_bytes(event.measurement.span());
    }
    enc.put_bytes(e.view());
  }
  Encoder aad;
  aad.put_str("manager-snapshot").put_str(config_.identity);
  return crypto::aead_seal(storage_key, enc.view(), aad.view());
}

Result<void> TrManager::restore(ConstSpan blob,
                                const crypto::SymmetricKey& storage_key) {
  Encoder aad;
  aad.put_str("manager-snapshot").put_str(config_.identity);
  auto opened = crypto::aead_open(storage_key, blob, aad.view());
  if (!opened.ok()) {
    return {Err::kAuthFailure, "snapshot failed authentication"};
  }
  Decoder dec(opened.value());
  auto version = dec.u64();
  auto count = dec.u64();
  if (!version || *version != kSnapshotVersion || !count) {
    return {Err::kMalformed, "bad snapshot header"};
  }
  std::map<std::string, VmListEntry> restored;
  for (std::uint64_t i = 0; i < *count; ++i) {
    auto entry_bytes = dec.bytes();
    if (!entry_bytes) return {Err::kMalformed, "truncated snapshot"};
    Decoder e(*entry_bytes);
    VmListEntry vm;
    auto id = e.str();
    auto alias = e.str();
    auto user = e.str();
    auto amd = e.bytes();
    auto key = e.bytes();
    auto img = e.bytes();
    auto state = e.bytes();
    auto counter = e.u64();
    auto golden_init = e.bytes();
    auto event_count = e.u64();
    if (!id || !alias || !user || !amd || !key || !img || !state || !counter ||
        !golden_init || !event_count) {
      return {Err::kMalformed, "truncated snapshot entry"};
    }
    vm.acvm_id = *id;
    vm.acvm_id_alias = *alias;
    vm.user_identifier = *user;
    auto amd_key = crypto::KeyPair::decode(*amd);
    auto vm_key = crypto::SymmetricKey::from_bytes(crypto::KeyRole::kVmKey,
                                                   *key);
    auto init = crypto::Digest::from_bytes(*golden_init);
    if (!amd_key || !vm_key || !init) {
      return {Err::kMalformed, "bad snapshot key material"};
    }
    vm.amd_key = std::move(*amd_key);
    vm.vm_key = std::move(*vm_key);
    vm.acvm_image = std::move(*img);
    vm.tpm_state_sealed = std::move(*state);
    vm.expected_counter = *counter;
    vm.golden_init_measurement = *init;
    for (std::uint64_t k = 0; k < *event_count; ++k) {
      auto seq = e.u64();
      auto stage = e.u8();
      auto description = e.str();
      auto digest_bytes = e.bytes();
      if (!seq || !stage || !description || !digest_bytes) {
        return {Err::kMalformed, "truncated golden events"};
      }
      auto digest = crypto::Digest::from_bytes(*digest_bytes);
      if (!digest) return {Err::kMalformed, "bad golden digest"};
      vm.golden_boot_events.push_back(
          boot::BootEvent{*seq, static_cast<boot::Stage>(*stage),
                          std::move(*description), *digest});
    }
    restored.emplace(vm.acvm_id, std::move(vm));
  }

  std::lock_guard<std::mutex> lock(mu_);
  // In-flight launches do not survive a restore; sessions and TPM-List
  // entries must be re-established.
  vm_list_ = std::move(restored);
  sessions_.clear();
  for (auto& [id, entry] : tpm_list_) {
    if (entry.state == TpmListEntry::State::kPending) {
      entry.state = TpmListEntry::State::kFailed;
    }
  }
  return {};
}

}  // namespace t3cvm::mgr
