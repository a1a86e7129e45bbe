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

#include "t3cvm/cloud_node.hpp"

#include <condition_variable>

#include "t3cvm/encode.hpp"
#include "t3cvm/guest_agent.hpp"
#include "t3cvm/secure_channel.hpp"
#include "t3cvm/tpm_commands.hpp"
#include "t3cvm/tpmcvm_service.hpp"

namespace t3cvm::cloud {

namespace {

constexpr auto kGuestWait = std::chrono::milliseconds(15000);
constexpr auto kPoll = std::chrono::milliseconds(100);

std::uint8_t frame_type(wire::FrameType t) {
  return static_cast<std::uint8_t>(t);
}

trace::DataClass classify(std::uint8_t type) {
  switch (static_cast<wire::FrameType>(type)) {
    case wire::FrameType::kMeasureEvent:
    case wire::FrameType::kBootComplete:
    case wire::FrameType::kTlsRecord:
    case wire::FrameType::kStateTransfer:
    case wire::FrameType::kWrappedCmd:
    case wire::FrameType::kWrappedResp:
      return trace::DataClass::kCiphertext;
    default:
      return trace::DataClass::kPlaintext;
  }
}

const char* frame_type_name(std::uint8_t type) {
  switch (static_cast<wire::FrameType>(type)) {
    case wire::FrameType::kControlReq: return "control-req";
    case wire::FrameType::kControlResp: return "control-resp";
    case wire::FrameType::kMeasureEvent: return "measure-event";
    case wire::FrameType::kBootComplete: return "boot-complete";
    case wire::FrameType::kTlsHs1: return "tls-hs1";
    case wire::FrameType::kTlsHs2: return "tls-hs2";
    case wire::FrameType::kTlsRecord: return "tls-record";
    case wire::FrameType::kStateTransfer: return "state-transfer";
    case wire::FrameType::kWrappedCmd: return "wrapped-cmd";
    case wire::FrameType::kWrappedResp: return "wrapped-resp";
    case wire::FrameType::kUserReq: return "user-req";
    case wire::FrameType::kUserResp: return "user-resp";
  }
  return "unknown";
}

}  // namespace

const char* adversary_flag_name(AdversaryFlag flag) {
  switch (flag) {
    case AdversaryFlag::kTamperImage: return "TamperImage";
    case AdversaryFlag::kSwapStateFile: return "SwapStateFile";
    case AdversaryFlag::kReplayStateFile: return "ReplayStateFile";
    case AdversaryFlag::kRedirectVtpm: return "RedirectVtpm";
    case AdversaryFlag::kTamperChannel: return "TamperChannel";
    case AdversaryFlag::kEavesdropChannel: return "EavesdropChannel";
  }
  return "Unknown";
}

Result<AdversaryFlag> adversary_flag_from_name(std::string_view name) {
  if (name == "TamperImage") return AdversaryFlag::kTamperImage;
  if (name == "SwapStateFile") return AdversaryFlag::kSwapStateFile;
  if (name == "ReplayStateFile") return AdversaryFlag::kReplayStateFile;
  if (name == "RedirectVtpm") return AdversaryFlag::kRedirectVtpm;
  if (name == "TamperChannel") return AdversaryFlag::kTamperChannel;
  if (name == "EavesdropChannel") return AdversaryFlag::kEavesdropChannel;
  return {Err::kMalformed, "unknown adversary flag '" + std::string(name) + "'"};
}

AmdAuthority::AmdAuthority()
    : root_(crypto::KeyPair::generate(crypto::KeyPairRole::kAmdRoot)),
      root_cert_(crypto::issue_certificate(root_, "amd-root", "amd-root",
                                           root_.public_key())) {}

AmdAuthority::PlatformCredentials AmdAuthority::issue_platform(
    const std::string& platform_name) const {
  PlatformCredentials creds;
  creds.platform_key = crypto::KeyPair::generate(crypto::KeyPairRole::kPlatform);
  creds.chain = {root_cert_,
                 crypto::issue_certificate(root_, "amd-root", platform_name,
                                           creds.platform_key.public_key())};
  return creds;
}

// ---------------------------------------------------------------------------
// Guest actors. Guest state lives only inside these structures; node-side
// code passes channels and sealed blobs through but never reads guest
// internals, which is how SEV memory isolation is modeled.
// ---------------------------------------------------------------------------

struct CloudNode::Guest {
  std::string id;
  wire::GuestKind kind;
  image::CvmImage image;
  Bytes launch_dh_private;
  crypto::Digest init_measurement;

  net::ChannelPtr mgr_guest_end;
  net::ChannelPtr mgr_outer_end;
  net::ChannelPtr user_guest_end;
  net::ChannelPtr user_outer_end;

  std::mutex mu;
  std::condition_variable cv;
  std::optional<std::pair<Bytes, Bytes>> injection;  // godh pub, sealed blob
  bool boot_started = false;
  net::ChannelPtr tpm_end;  // ACVM side, set by bind_vtpm

  tpmcvm::TpmcvmService service;
  std::vector<std::thread> agent_threads;

  std::thread thread;
  std::atomic<bool> stop{false};

  Guest(std::string guest_id, wire::GuestKind guest_kind)
      : id(std::move(guest_id)), kind(guest_kind), service(id) {}

  ~Guest() {
    stop = true;
    cv.notify_all();
    if (mgr_guest_end) mgr_guest_end->close();
    if (mgr_outer_end) mgr_outer_end->close();
    if (user_guest_end) user_guest_end->close();
    if (user_outer_end) user_outer_end->close();
    {
      std::lock_guard<std::mutex> lock(mu);
      if (tpm_end) tpm_end->close();
    }
    if (thread.joinable()) thread.join();
    for (auto& t : agent_threads) {
      if (t.joinable()) t.join();
    }
  }

  // Blocks until the manager injects secrets through the firmware surrogate.
  std::optional<std::pair<Bytes, Bytes>> wait_injection() {
    std::unique_lock<std::mutex> lock(mu);
    cv.wait_for(lock, kGuestWait, [&] { return injection || stop; });
    if (!injection) return std::nullopt;
    boot_started = true;
    return injection;
  }

  std::optional<net::ChannelPtr> wait_tpm_channel() {
    std::unique_lock<std::mutex> lock(mu);
    cv.wait_for(lock, kGuestWait, [&] { return tpm_end != nullptr || stop; });
    if (!tpm_end) return std::nullopt;
    return tpm_end;
  }
};

namespace {

Result<crypto::SymmetricKey> open_injection(CloudNode::Guest& guest,
                                            ConstSpan godh_public) {
  Bytes shared = crypto::dh_shared(guest.launch_dh_private, godh_public);
  return wire::injection_channel_key(shared, guest.id);
}

void tls_reply(net::Channel& channel, net::TlsSession& tls, wire::MgmtOp op,
               ConstSpan body) {
  wire::MgmtRecord record{op, Bytes(body.begin(), body.end())};
  channel.send(tls.seal_record(record.encode()));
}

struct PendingBind {
  std::optional<wire::VmKeyAndStateBody> params;
  std::optional<Bytes> sealed_state;
  std::optional<crypto::SymmetricKey> session_key;

  bool complete() const {
    return params && session_key && (params->fresh || sealed_state);
  }
};

void run_tpmcvm_guest(CloudNode::Guest* g) {
  auto injected = g->wait_injection();
  if (!injected) return;

  auto channel_key = open_injection(*g, injected->first);
  if (!channel_key.ok()) return;
  auto opened = crypto::aead_open(channel_key.value(), injected->second,
                                  wire::injection_aad(g->id));
  if (!opened.ok()) return;
  auto body = wire::InjectionBody::decode(opened.value());
  if (!body.ok() || body.value().purpose != wire::kInjectTpmcvmKeys) return;
  auto image_key = crypto::SymmetricKey::from_bytes(crypto::KeyRole::kImageKey,
                                                    body.value().key1);
  auto measure_key = crypto::SymmetricKey::from_bytes(
      crypto::KeyRole::kMeasureKey, body.value().key2);
  if (!image_key || !measure_key) return;

  // Decrypt the image; a wrong image key halts the boot before any
  // measurement is streamed.
  auto payload = image::open_sealed_payload(g->image, *image_key);
  if (!payload.ok()) {
    g->mgr_guest_end->close();
    return;
  }
  Decoder config(payload.value().embedded_config);
  auto tls_pair_bytes = config.bytes();
  auto tls_cert_bytes = config.bytes();
  if (!tls_pair_bytes || !tls_cert_bytes) return;
  auto tls_pair = crypto::KeyPair::decode(*tls_pair_bytes);
  if (!tls_pair) return;

  // Measured boot, streamed to the manager's vTPM-like service.
  agent::GuestAgent driver(agent::GuestAgent::Mode::kTpmcvm, g->id);
  struct StageInput {
    boot::Stage stage;
    ConstSpan content;
    const char* what;
  };
  const StageInput stages[] = {
      {boot::Stage::kUefi, g->image.uefi_region, "firmware volume"},
      {boot::Stage::kBootloader, payload.value().bootloader, "bootloader"},
      {boot::Stage::kKernel, payload.value().kernel, "kernel"},
      {boot::Stage::kApplication, payload.value().application,
       "user-space applications"},
  };
  for (const auto& input : stages) {
    auto event = driver.measure_stage(input.stage, input.content, input.what);
    if (!event.ok()) return;
    auto frame = driver.seal_event(event.value(), *measure_key);
    if (!frame.ok() || !g->mgr_guest_end->send(frame.value())) return;
  }
  driver.mark_boot_complete();
  if (!g->mgr_guest_end->send(driver.seal_boot_complete(*measure_key))) return;

  // The manager verifies the chain, then brings up the TLS channel.
  auto tls = net::TlsSession::respond(*g->mgr_guest_end, *tls_pair,
                                      tls_pair->public_key(), kGuestWait);
  if (!tls.ok()) return;

  std::map<std::string, PendingBind> pending;

  auto try_begin = [&](const std::string& acvm_id) {
    auto it = pending.find(acvm_id);
    if (it == pending.end() || !it->second.complete()) return;
    PendingBind bind = std::move(it->second);
    pending.erase(it);
    Bytes state = bind.sealed_state.value_or(Bytes{});
    auto begun =
        g->service.begin_bind(*bind.params, state, *bind.session_key);
    if (!begun.ok()) {
      wire::StatusBody status{acvm_id, false, begun.error().code,
                              begun.error().detail, 0};
      tls_reply(*g->mgr_guest_end, tls.value(), wire::MgmtOp::kBindResult,
                status.encode());
      return;
    }
    // Ask the manager for the binding proof over the hosting CVM's boot
    // measurements.
    wire::AcvmRef ref{acvm_id};
    tls_reply(*g->mgr_guest_end, tls.value(),
              wire::MgmtOp::kBindingHmacRequest, ref.encode());
  };

  while (!g->stop) {
    auto frame = g->mgr_guest_end->recv(kPoll);
    if (!frame) {
      if (g->mgr_guest_end->closed()) return;
      continue;
    }
    if (frame->type == frame_type(wire::FrameType::kStateTransfer)) {
      auto transfer = wire::StateTransferBody::decode(frame->payload);
      if (!transfer.ok()) continue;
      pending[transfer.value().acvm_id].sealed_state =
          transfer.value().sealed_state;
      try_begin(transfer.value().acvm_id);
      continue;
    }
    if (frame->type != frame_type(wire::FrameType::kTlsRecord)) continue;
    auto record_bytes = tls.value().open_record(*frame);
    if (!record_bytes.ok()) {
      // Channel integrity failure: drop the connection, aborting the launch.
      g->mgr_guest_end->close();
      return;
    }
    auto record = wire::MgmtRecord::decode(record_bytes.value());
    if (!record.ok()) continue;

    switch (record.value().op) {
      case wire::MgmtOp::kDeployRoot: {
        auto deploy = wire::DeployRootBody::decode(record.value().body);
        if (!deploy.ok()) break;
        auto root = crypto::KeyPair::decode(deploy.value().root_pair);
        if (!root) break;
        g->service.install_root(std::move(*root),
                                deploy.value().rk_certificate,
                                deploy.value().issuer_chain);
        wire::StatusBody status{"", true, Err::kRefused, "root deployed", 0};
        tls_reply(*g->mgr_guest_end, tls.value(), wire::MgmtOp::kAck,
                  status.encode());
        break;
      }
      case wire::MgmtOp::kVmKeyAndState: {
        auto params = wire::VmKeyAndStateBody::decode(record.value().body);
        if (!params.ok()) break;
        std::string acvm_id = params.value().acvm_id;
        pending[acvm_id].params = params.take();
        try_begin(acvm_id);
        break;
      }
      case wire::MgmtOp::kSessionKey: {
        auto body2 = wire::SessionKeyBody::decode(record.value().body);
        if (!body2.ok()) break;
        auto key = crypto::SymmetricKey::from_bytes(
            crypto::KeyRole::kSessionKey, body2.value().session_key);
        if (!key) break;
        pending[body2.value().acvm_id].session_key = std::move(*key);
        try_begin(body2.value().acvm_id);
        break;
      }
      case wire::MgmtOp::kBindingHmacResponse: {
        auto response =
            wire::BindingHmacResponseBody::decode(record.value().body);
        if (!response.ok()) break;
        auto done = g->service.complete_bind(response.value().acvm_id,
                                             response.value().binding_hmac);
        wire::StatusBody status{response.value().acvm_id, done.ok(),
                                done.ok() ? Err::kRefused : done.error().code,
                                done.ok() ? "" : done.error().detail, 0};
        tls_reply(*g->mgr_guest_end, tls.value(), wire::MgmtOp::kBindResult,
                  status.encode());
        break;
      }
      case wire::MgmtOp::kTeardown: {
        auto ref = wire::AcvmRef::decode(record.value().body);
        if (!ref.ok()) break;
        auto torn = g->service.teardown(ref.value().acvm_id);
        if (!torn.ok()) {
          wire::StatusBody status{ref.value().acvm_id, false,
                                  torn.error().code, torn.error().detail, 0};
          tls_reply(*g->mgr_guest_end, tls.value(),
                    wire::MgmtOp::kTeardownResult, status.encode());
          break;
        }
        wire::StateTransferBody transfer{ref.value().acvm_id,
                                         torn.value().sealed_state};
        g->mgr_guest_end->send(
            net::Frame{frame_type(wire::FrameType::kStateTransfer),
                       net::kWireVersion, transfer.encode()});
        wire::StatusBody status{ref.value().acvm_id, true, Err::kRefused, "",
                                torn.value().new_counter};
        tls_reply(*g->mgr_guest_end, tls.value(), wire::MgmtOp::kTeardownResult,
                  status.encode());
        break;
      }
      default:
        break;
    }
  }
}

// Serves one ACVM's wrapped-command link against the hosting service.
void serve_agent_link(CloudNode::Guest* host, net::ChannelPtr link) {
  while (!host->stop) {
    auto frame = link->recv(kPoll);
    if (!frame) {
      if (link->closed()) return;
      continue;
    }
    if (frame->type != frame_type(wire::FrameType::kWrappedCmd)) continue;
    auto response = host->service.handle_wrapped(*frame);
    if (response) link->send(*response);
  }
}

void run_acvm_guest(CloudNode::Guest* g) {
  bool booted = false;
  std::string failure;
  agent::GuestAgent driver(agent::GuestAgent::Mode::kAcvm, g->id);
  net::ChannelPtr tpm;

  auto boot = [&]() -> bool {
    auto injected = g->wait_injection();
    if (!injected) {
      failure = "no session key injected";
      return false;
    }
    auto channel_key = open_injection(*g, injected->first);
    if (!channel_key.ok()) {
      failure = "injection key derivation failed";
      return false;
    }
    auto opened = crypto::aead_open(channel_key.value(), injected->second,
                                    wire::injection_aad(g->id));
    if (!opened.ok()) {
      failure = "injection payload failed authentication";
      return false;
    }
    auto body = wire::InjectionBody::decode(opened.value());
    if (!body.ok() || body.value().purpose != wire::kInjectSessionKey) {
      failure = "unexpected injection payload";
      return false;
    }
    auto session = crypto::SymmetricKey::from_bytes(
        crypto::KeyRole::kSessionKey, body.value().key1);
    if (!session) {
      failure = "bad session key";
      return false;
    }
    driver.install_session_key(std::move(*session));

    auto tpm_channel = g->wait_tpm_channel();
    if (!tpm_channel) {
      failure = "no vTPM bound";
      return false;
    }
    tpm = *tpm_channel;

    auto payload = image::StagePayload::decode(g->image.payload_region);
    if (!payload.ok()) {
      failure = "image payload malformed";
      return false;
    }

    struct StageInput {
      boot::Stage stage;
      ConstSpan content;
      const char* what;
    };
    const StageInput stages[] = {
        {boot::Stage::kUefi, g->image.uefi_region, "firmware volume"},
        {boot::Stage::kBootloader, payload.value().bootloader, "bootloader"},
        {boot::Stage::kKernel, payload.value().kernel, "kernel"},
        {boot::Stage::kApplication, payload.value().application,
         "user-space applications"},
    };
    for (const auto& input : stages) {
      auto event =
          driver.measure_stage(input.stage, input.content, input.what);
      if (!event.ok()) {
        failure = event.error().to_string();
        return false;
      }
      Bytes command = tpm_cmd::encode_pcr_extend(
          boot::stage_pcr(input.stage), event.value().measurement, input.what);
      auto wrapped = driver.wrap_command(command);
      if (!wrapped.ok() || !tpm->send(wrapped.value())) {
        failure = "vTPM link send failed";
        return false;
      }
      auto reply = tpm->recv(std::chrono::milliseconds(3000));
      if (!reply) {
        failure = "vTPM did not answer (command dropped?)";
        return false;
      }
      auto raw = driver.unwrap_response(*reply);
      if (!raw.ok()) {
        failure = raw.error().to_string();
        return false;
      }
      auto status = tpm_cmd::parse_response(raw.value());
      if (!status.ok()) {
        failure = "vTPM rejected extend: " + status.error().to_string();
        return false;
      }
    }
    driver.mark_boot_complete();
    return true;
  };

  booted = boot();

  // Serve the user's channel: boot status queries and evidence collection.
  while (!g->stop) {
    auto frame = g->user_guest_end->recv(kPoll);
    if (!frame) {
      if (g->user_guest_end->closed()) return;
      continue;
    }
    if (frame->type != frame_type(wire::FrameType::kUserReq)) continue;
    auto request = wire::UserRequest::decode(frame->payload);
    if (!request.ok()) continue;

    wire::UserResponse response;
    switch (request.value().op) {
      case wire::UserOp::kWaitBooted:
        response.ok = booted;
        response.detail = booted ? "booted" : failure;
        break;
      case wire::UserOp::kGetBootView: {
        if (!booted) {
          response.ok = false;
          response.detail = "boot failed: " + failure;
          break;
        }
        auto fetch = [&]() -> Result<Bytes> {
          auto cmd = driver.wrap_command(tpm_cmd::encode_get_boot_view());
          if (!cmd.ok() || !tpm->send(cmd.value())) {
            return {Err::kUnavailable, "vTPM link send failed"};
          }
          auto reply = tpm->recv(std::chrono::milliseconds(3000));
          if (!reply) return {Err::kTimeout, "no boot view reply"};
          auto raw = driver.unwrap_response(*reply);
          if (!raw.ok()) return raw.error();
          return tpm_cmd::parse_response(raw.value());
        };
        auto view = fetch();
        if (view.ok()) {
          response.ok = true;
          response.body = view.take();
        } else {
          response.ok = false;
          response.detail = view.error().to_string();
        }
        break;
      }
      case wire::UserOp::kCollectEvidence: {
        if (!booted) {
          response.ok = false;
          response.detail = "boot failed: " + failure;
          break;
        }
        auto collect = [&]() -> Result<std::string> {
          std::vector<int> selection(vtpm::kNumPcrs);
          for (int i = 0; i < vtpm::kNumPcrs; ++i) selection[i] = i;
          auto quote_cmd =
              driver.wrap_command(tpm_cmd::encode_quote(
                  selection, request.value().nonce));
          if (!quote_cmd.ok() || !tpm->send(quote_cmd.value())) {
            return {Err::kUnavailable, "vTPM link send failed"};
          }
          auto quote_reply = tpm->recv(std::chrono::milliseconds(3000));
          if (!quote_reply) return {Err::kTimeout, "no quote reply"};
          auto quote_raw = driver.unwrap_response(*quote_reply);
          if (!quote_raw.ok()) return quote_raw.error();
          auto quote_payload = tpm_cmd::parse_response(quote_raw.value());
          if (!quote_payload.ok()) return quote_payload.error();
          auto quote = tpm_cmd::parse_quote_payload(quote_payload.value());
          if (!quote.ok()) return quote.error();

          auto chain_cmd = driver.wrap_command(tpm_cmd::encode_get_ek_chain());
          if (!chain_cmd.ok() || !tpm->send(chain_cmd.value())) {
            return {Err::kUnavailable, "vTPM link send failed"};
          }
          auto chain_reply = tpm->recv(std::chrono::milliseconds(3000));
          if (!chain_reply) return {Err::kTimeout, "no chain reply"};
          auto chain_raw = driver.unwrap_response(*chain_reply);
          if (!chain_raw.ok()) return chain_raw.error();
          auto chain_payload = tpm_cmd::parse_response(chain_raw.value());
          if (!chain_payload.ok()) return chain_payload.error();
          auto chain = tpm_cmd::parse_ek_chain_payload(chain_payload.value());
          if (!chain.ok()) return chain.error();

          auto log = driver.export_event_log();
          if (!log.ok()) return log.error();
          attest::GuestEvidence evidence{log.take(), quote.take(),
                                         chain.take()};
          return evidence.to_json();
        };
        auto evidence = collect();
        if (evidence.ok()) {
          response.ok = true;
          response.body = to_bytes(evidence.value());
        } else {
          response.ok = false;
          response.detail = evidence.error().to_string();
        }
        break;
      }
    }
    g->user_guest_end->send(
        net::Frame{frame_type(wire::FrameType::kUserResp), net::kWireVersion,
                   response.encode()});
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Rogue vTPM host: the malicious endpoint RedirectVtpm wires traffic to. It
// cannot open session-key wrapped commands; it answers them with garbage and
// fabricates evidence from what the node can observe (the ACVM image and its
// init measurement).
// ---------------------------------------------------------------------------

struct CloudNode::Rogue {
  RogueSetup setup;
  std::atomic<bool> stop{false};
  std::vector<std::thread> threads;
  std::vector<net::ChannelPtr> ends;
  std::mutex mu;

  struct Target {
    image::CvmImage image;
    crypto::Digest init_measurement;
  };
  std::map<std::string, Target> targets;

  ~Rogue() {
    stop = true;
    for (auto& end : ends) end->close();
    for (auto& t : threads) {
      if (t.joinable()) t.join();
    }
  }

  attest::GuestEvidence fabricate(const std::string& acvm_id,
                                  ConstSpan nonce) {
    Target target;
    RogueSetup setup;
    {
      std::lock_guard<std::mutex> lock(mu);
      target = targets.at(acvm_id);
      setup = this->setup;
    }
    crypto::KeyPair root;
    std::string root_name;
    std::vector<crypto::Certificate> chain;
    if (setup.certified_root) {
      root = *setup.certified_root;
      root_name = setup.certified_root_cert.subject;
      chain = setup.issuer_chain;
      chain.push_back(setup.certified_root_cert);
    } else {
      root = crypto::KeyPair::generate(crypto::KeyPairRole::kTpmcvmRoot);
      root_name = "rogue-root";
      chain = {crypto::issue_certificate(root, root_name, root_name,
                                         root.public_key())};
    }

    auto payload = image::StagePayload::decode(target.image.payload_region);
    std::vector<boot::BootEvent> events;
    if (payload.ok()) {
      events = image::stage_events(target.image.uefi_region, payload.value());
    }
    boot::EventLog log;
    log.owner_id = acvm_id;
    log.launch_nonce = crypto::random_bytes(16);
    log.events = events;

    crypto::KeyPair ek =
        crypto::KeyPair::generate(crypto::KeyPairRole::kEndorsement);
    chain.push_back(crypto::issue_certificate(root, root_name,
                                              "vtpm-for-" + acvm_id,
                                              ek.public_key()));

    vtpm::PcrBank bank;
    if (setup.leaked_bank) {
      bank = *setup.leaked_bank;
    } else {
      // No VM key, so the binding proof can only be guessed.
      auto guess = crypto::Digest::from_bytes(crypto::random_bytes(32));
      (void)bank.extend(0, *guess);
      (void)bank.extend(0, target.init_measurement);
      for (const auto& event : events) {
        (void)bank.extend(boot::stage_pcr(event.stage), event.measurement);
      }
    }

    vtpm::Quote quote;
    quote.pcr_selection.resize(vtpm::kNumPcrs);
    for (int i = 0; i < vtpm::kNumPcrs; ++i) quote.pcr_selection[i] = i;
    quote.pcr_composite = vtpm::pcr_composite(bank, quote.pcr_selection).value();
    quote.nonce = Bytes(nonce.begin(), nonce.end());
    quote.counter = setup.assumed_counter;
    quote.signature = ek.sign(quote.signed_payload());

    return attest::GuestEvidence{std::move(log), std::move(quote),
                                 std::move(chain)};
  }

  void serve_tpm(net::ChannelPtr link) {
    while (!stop) {
      auto frame = link->recv(kPoll);
      if (!frame) {
        if (link->closed()) return;
        continue;
      }
      if (frame->type != frame_type(wire::FrameType::kWrappedCmd)) continue;
      auto body = wire::WrappedFrameBody::decode(frame->payload);
      if (!body.ok()) continue;
      // The session key is unknown here; answer with garbage so the driver
      // detects the integrity failure promptly.
      wire::WrappedFrameBody reply{body.value().acvm_id, wire::kDirResponse,
                                   body.value().sequence,
                                   crypto::random_bytes(48)};
      link->send(net::Frame{frame_type(wire::FrameType::kWrappedResp),
                            net::kWireVersion, reply.encode()});
    }
  }

  void serve_user(net::ChannelPtr link, std::string acvm_id) {
    while (!stop) {
      auto frame = link->recv(kPoll);
      if (!frame) {
        if (link->closed()) return;
        continue;
      }
      if (frame->type != frame_type(wire::FrameType::kUserReq)) continue;
      auto request = wire::UserRequest::decode(frame->payload);
      if (!request.ok()) continue;
      wire::UserResponse response;
      switch (request.value().op) {
        case wire::UserOp::kWaitBooted:
          response.ok = true;
          response.detail = "booted";
          break;
        case wire::UserOp::kCollectEvidence:
          response.ok = true;
          response.body =
              to_bytes(fabricate(acvm_id, request.value().nonce).to_json());
          break;
        case wire::UserOp::kGetBootView:
          response.ok = false;
          response.detail = "unsupported";
          break;
      }
      link->send(net::Frame{frame_type(wire::FrameType::kUserResp),
                            net::kWireVersion, response.encode()});
    }
  }
};

// ---------------------------------------------------------------------------
// CloudNode
// ---------------------------------------------------------------------------

CloudNode::CloudNode(AmdAuthority::PlatformCredentials platform,
                     AdversaryConfig adversary, trace::Trace& trace)
    : platform_(std::move(platform)),
      adversary_(std::move(adversary)),
      trace_(trace) {}

CloudNode::~CloudNode() {
  stopping_ = true;
  if (control_thread_.joinable()) control_thread_.join();
  for (auto& t : channel_accept_threads_) {
    if (t.joinable()) t.join();
  }
  // Guests and the rogue join their threads on destruction; that must happen
  // outside mu_ because their threads take mu_ inside the channel tap.
  std::map<std::string, std::shared_ptr<Guest>> guests;
  std::shared_ptr<Rogue> rogue;
  {
    std::lock_guard<std::mutex> lock(mu_);
    guests.swap(guests_);
    rogue.swap(rogue_);
  }
  guests.clear();
  rogue.reset();
  relays_.clear();
}

std::vector<crypto::Certificate> CloudNode::platform_chain() const {
  return platform_.chain;
}

net::TapFn CloudNode::make_tap() {
  return [this](const std::string& link, const std::string& direction,
                net::Frame& frame) {
    apply_adversary(link, direction, frame);
    record_frame(link, direction, frame);
  };
}

void CloudNode::record_frame(const std::string& link,
                             const std::string& direction,
                             const net::Frame& frame) {
  trace_.record("cloud-node", link + " " + direction, classify(frame.type),
                frame_type_name(frame.type), frame.payload);
}

void CloudNode::apply_adversary(const std::string& link,
                                const std::string& direction,
                                net::Frame& frame) {
  std::lock_guard<std::mutex> lock(mu_);

  if (frame.type == frame_type(wire::FrameType::kStateTransfer)) {
    auto transfer = wire::StateTransferBody::decode(frame.payload);
    if (transfer.ok()) {
      auto& history = state_history_[transfer.value().acvm_id];
      bool substituted = false;
      if (direction == "a->b") {
        // Manager -> guest: the spot where a malicious transport can feed
        // the CN-TPMCVM a wrong or stale state file.
        if (adversary_.has(AdversaryFlag::kSwapStateFile)) {
          auto other = state_history_.find(adversary_.swap_source_acvm);
          if (other != state_history_.end() && !other->second.empty()) {
            wire::StateTransferBody swapped{transfer.value().acvm_id,
                                            other->second.back()};
            frame.payload = swapped.encode();
            substituted = true;
            trace_.record("cloud-node", link + " " + direction,
                          trace::DataClass::kCiphertext,
                          "state file substituted (swap)");
          }
        } else if (adversary_.has(AdversaryFlag::kReplayStateFile) &&
                   !history.empty() &&
                   history.front() != transfer.value().sealed_state) {
          wire::StateTransferBody replayed{transfer.value().acvm_id,
                                           history.front()};
          frame.payload = replayed.encode();
          substituted = true;
          trace_.record("cloud-node", link + " " + direction,
                        trace::DataClass::kCiphertext,
                        "state file substituted (replay)");
        }
      }
      if (!substituted) {
        history.push_back(transfer.value().sealed_state);
      }
    }
  }

  if (adversary_.has(AdversaryFlag::kTamperChannel) && !tamper_fired_ &&
      link.find(adversary_.tamper_link) != std::string::npos &&
      classify(frame.type) == trace::DataClass::kCiphertext &&
      !frame.payload.empty()) {
    frame.payload.back() ^= 0x01;
    tamper_fired_ = true;
    trace_.record("cloud-node", link + " " + direction,
                  trace::DataClass::kCiphertext, "frame tampered in flight");
  }
}

Result<wire::LaunchCvmResult> CloudNode::launch_cvm(const std::string& cvm_id,
                                                    wire::GuestKind kind,
                                                    ConstSpan image_bytes) {
  auto decoded = image::CvmImage::decode(image_bytes);
  if (!decoded.ok()) return decoded.error();
  image::CvmImage img = decoded.take();

  trace_.record("cloud-node", "launch_cvm " + cvm_id,
                trace::DataClass::kPlaintext,
                kind == wire::GuestKind::kTpmcvm ? "tpmcvm image" : "acvm image",
                image_bytes);

  if (adversary_.has(AdversaryFlag::kTamperImage) &&
      kind == adversary_.tamper_image_target && !img.uefi_region.empty()) {
    img.uefi_region[0] ^= 0x01;
    trace_.record("cloud-node", "launch_cvm " + cvm_id,
                  trace::DataClass::kPlaintext, "image tampered before launch");
  }

  auto guest = std::make_shared<Guest>(cvm_id, kind);
  guest->image = std::move(img);
  guest->init_measurement = image::initialization_measurement(guest->image);

  crypto::EphemeralDh launch_dh = crypto::dh_generate();
  guest->launch_dh_private = launch_dh.private_key;
  Bytes dh_sig = platform_.platform_key.sign(
      wire::launch_dh_transcript(cvm_id, launch_dh.public_key));

  std::string mgmt_link = "boot-mgmt-" + cvm_id;
  std::string user_link = "user-" + cvm_id;
  net::TapFn pair_tap = tcp_mode_ ? nullptr : make_tap();
  auto [mgr_outer, mgr_guest] = net::make_inproc_pair(mgmt_link, pair_tap);
  auto [user_outer, user_guest] = net::make_inproc_pair(user_link, pair_tap);
  guest->mgr_outer_end = mgr_outer;
  guest->mgr_guest_end = mgr_guest;
  guest->user_outer_end = user_outer;
  guest->user_guest_end = user_guest;

  {
    std::lock_guard<std::mutex> lock(mu_);
    if (guests_.count(cvm_id) != 0) {
      return {Err::kAlreadyExists, "CVM '" + cvm_id + "' already running"};
    }
    guests_[cvm_id] = guest;
  }

  // Threads take a raw pointer; Guest's destructor stops and joins them
  // before the object goes away, and holding a shared_ptr in the thread
  // would keep the destructor from ever running.
  if (kind == wire::GuestKind::kTpmcvm) {
    guest->thread = std::thread(run_tpmcvm_guest, guest.get());
  } else {
    guest->thread = std::thread(run_acvm_guest, guest.get());
  }

  return wire::LaunchCvmResult{guest->init_measurement, launch_dh.public_key,
                               std::move(dh_sig)};
}

Result<void> CloudNode::inject_secret(const std::string& cvm_id,
                                      ConstSpan godh_public, ConstSpan sealed) {
  std::shared_ptr<Guest> guest;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = guests_.find(cvm_id);
    if (it == guests_.end()) {
      return {Err::kNotFound, "no CVM '" + cvm_id + "'"};
    }
    guest = it->second;
  }
  trace_.record("cloud-node", "inject_secret " + cvm_id,
                trace::DataClass::kCiphertext,
                "sealed launch secrets (godh pub " + to_hex(godh_public) + ")",
                sealed);
  std::lock_guard<std::mutex> lock(guest->mu);
  if (guest->boot_started) {
    return {Err::kRefused, "CVM already past pre-boot"};
  }
  guest->injection = std::make_pair(Bytes(godh_public.begin(), godh_public.end()),
                                    Bytes(sealed.begin(), sealed.end()));
  guest->cv.notify_all();
  return {};
}

Result<net::ChannelPtr> CloudNode::open_guest_channel(
    const std::string& cvm_id) {
  std::shared_ptr<Guest> guest;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = guests_.find(cvm_id);
    if (it == guests_.end()) {
      return {Err::kNotFound, "no CVM '" + cvm_id + "'"};
    }
    guest = it->second;
  }
  trace_.record("cloud-node", "open_guest_channel " + cvm_id,
                trace::DataClass::kPlaintext, "manager link attached");
  return guest->mgr_outer_end;
}

Result<net::ChannelPtr> CloudNode::open_user_channel(
    const std::string& acvm_id) {
  std::lock_guard<std::mutex> lock(mu_);
  trace_.record("cloud-node", "open_user_channel " + acvm_id,
                trace::DataClass::kPlaintext, "user link attached");
  if (adversary_.has(AdversaryFlag::kRedirectVtpm) && rogue_ &&
      rogue_->targets.count(acvm_id) != 0) {
    auto [outer, rogue_end] =
        net::make_inproc_pair("user-" + acvm_id + "-redirected", make_tap());
    rogue_->ends.push_back(rogue_end);
    rogue_->threads.emplace_back(
        [rogue = rogue_.get(), rogue_end, acvm_id] {
          rogue->serve_user(rogue_end, acvm_id);
        });
    return outer;
  }
  auto it = guests_.find(acvm_id);
  if (it == guests_.end()) {
    return {Err::kNotFound, "no CVM '" + acvm_id + "'"};
  }
  return it->second->user_outer_end;
}

Result<void> CloudNode::bind_vtpm(const std::string& acvm_id,
                                  const std::string& tpmcvm_id) {
  std::shared_ptr<Guest> acvm;
  std::shared_ptr<Guest> host;
  bool redirect = false;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = guests_.find(acvm_id);
    if (it == guests_.end()) {
      return {Err::kNotFound, "no ACVM '" + acvm_id + "'"};
    }
    acvm = it->second;
    redirect = adversary_.has(AdversaryFlag::kRedirectVtpm);
    if (redirect) {
      if (!rogue_) rogue_ = std::make_shared<Rogue>();
      {
        std::lock_guard<std::mutex> rogue_lock(rogue_->mu);
        if (rogue_setup_) rogue_->setup = *rogue_setup_;
        rogue_->targets[acvm_id] =
            Rogue::Target{acvm->image, acvm->init_measurement};
      }
    } else {
      auto host_it = guests_.find(tpmcvm_id);
      if (host_it == guests_.end()) {
        return {Err::kNotFound, "no CN-TPMCVM '" + tpmcvm_id + "'"};
      }
      host = host_it->second;
    }
  }

  trace_.record("cloud-node", "bind_vtpm " + acvm_id,
                trace::DataClass::kPlaintext,
                redirect ? "redirected to rogue endpoint" : "bound to " + tpmcvm_id);

  auto [agent_end, service_end] =
      net::make_inproc_pair("tpm-" + acvm_id, make_tap());
  if (redirect) {
    std::lock_guard<std::mutex> lock(mu_);
    rogue_->ends.push_back(service_end);
    rogue_->threads.emplace_back([rogue = rogue_.get(), service_end] {
      rogue->serve_tpm(service_end);
    });
  } else {
    host->agent_threads.emplace_back(serve_agent_link, host.get(), service_end);
  }
  {
    std::lock_guard<std::mutex> lock(acvm->mu);
    acvm->tpm_end = agent_end;
    acvm->cv.notify_all();
  }
  return {};
}

Result<void> CloudNode::destroy_cvm(const std::string& cvm_id) {
  std::shared_ptr<Guest> guest;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = guests_.find(cvm_id);
    if (it == guests_.end()) {
      return {Err::kNotFound, "no CVM '" + cvm_id + "'"};
    }
    guest = it->second;
    guests_.erase(it);
  }
  trace_.record("cloud-node", "destroy_cvm " + cvm_id,
                trace::DataClass::kPlaintext, "guest destroyed");
  guest.reset();  // joins threads
  return {};
}

void CloudNode::arm_rogue(RogueSetup setup) {
  std::lock_guard<std::mutex> lock(mu_);
  rogue_setup_ = std::move(setup);
  if (rogue_) {
    std::lock_guard<std::mutex> rogue_lock(rogue_->mu);
    rogue_->setup = *rogue_setup_;
  }
}

// ---------------------------------------------------------------------------
// TCP control plane
// ---------------------------------------------------------------------------

Result<std::uint16_t> CloudNode::start_control_server() {
  auto listener = net::TcpListener::bind_loopback();
  if (!listener.ok()) return listener.error();
  tcp_mode_ = true;
  control_listener_.emplace(std::move(listener.value()));
  std::uint16_t port = control_listener_->port();
  control_thread_ = std::thread([this] {
    while (!stopping_) {
      auto accepted = control_listener_->accept(std::chrono::milliseconds(500));
      if (!accepted.ok()) continue;
      control_serve(accepted.value());
      return;
    }
  });
  return port;
}

void CloudNode::control_serve(net::ChannelPtr channel) {
  while (!stopping_) {
    auto frame = channel->recv(kPoll);
    if (!frame) {
      if (channel->closed()) return;
      continue;
    }
    if (frame->type != frame_type(wire::FrameType::kControlReq)) continue;
    auto request = wire::ControlRequest::decode(frame->payload);
    wire::ControlResponse response;
    if (!request.ok()) {
      response.ok = false;
      response.error = Err::kMalformed;
      response.detail = "bad control request";
    } else {
      response = handle_control(request.value());
    }
    channel->send(net::Frame{frame_type(wire::FrameType::kControlResp),
                             net::kWireVersion, response.encode()});
  }
}

wire::ControlResponse CloudNode::handle_control(
    const wire::ControlRequest& request) {
  wire::ControlResponse response;
  auto fail = [&](const Error& error) {
    response.ok = false;
    response.error = error.code;
    response.detail = error.detail;
  };

  switch (request.op) {
    case wire::NodeOp::kGetPlatform: {
      response.ok = true;
      response.body = wire::encode_cert_list(platform_chain());
      break;
    }
    case wire::NodeOp::kLaunchCvm: {
      auto result = launch_cvm(request.cvm_id,
                               static_cast<wire::GuestKind>(request.kind),
                               request.data1);
      if (!result.ok()) {
        fail(result.error());
      } else {
        response.ok = true;
        response.body = result.value().encode();
      }
      break;
    }
    case wire::NodeOp::kInjectSecret: {
      auto result = inject_secret(request.cvm_id, request.data1, request.data2);
      if (!result.ok()) {
        fail(result.error());
      } else {
        response.ok = true;
      }
      break;
    }
    case wire::NodeOp::kBindVtpm: {
      auto result = bind_vtpm(request.cvm_id, request.peer_id);
      if (!result.ok()) {
        fail(result.error());
      } else {
        response.ok = true;
      }
      break;
    }
    case wire::NodeOp::kOpenGuestChannel:
    case wire::NodeOp::kOpenUserChannel: {
      bool user = request.op == wire::NodeOp::kOpenUserChannel;
      // Resolve the guest-side endpoint, then publish a loopback port
      // relayed (and tapped) to it.
      net::ChannelPtr outer;
      if (user) {
        auto opened = open_user_channel(request.cvm_id);
        if (!opened.ok()) {
          fail(opened.error());
          break;
        }
        outer = opened.value();
      } else {
        auto opened = open_guest_channel(request.cvm_id);
        if (!opened.ok()) {
          fail(opened.error());
          break;
        }
        outer = opened.value();
      }
      auto listener = net::TcpListener::bind_loopback();
      if (!listener.ok()) {
        fail(listener.error());
        break;
      }
      auto holder =
          std::make_unique<net::TcpListener>(std::move(listener.value()));
      std::uint16_t port = holder->port();
      net::TcpListener* raw = holder.get();
      std::string link = (user ? "user-" : "boot-mgmt-") + request.cvm_id;
      {
        std::lock_guard<std::mutex> lock(mu_);
        channel_listeners_.push_back(std::move(holder));
      }
      channel_accept_threads_.emplace_back([this, raw, outer, link] {
        while (!stopping_) {
          auto accepted = raw->accept(std::chrono::milliseconds(500));
          if (!accepted.ok()) continue;
          auto relay = std::make_unique<net::Relay>(accepted.value(), outer,
                                                    link, make_tap());
          std::lock_guard<std::mutex> lock(mu_);
          relays_.push_back(std::move(relay));
          return;
        }
      });
      response.ok = true;
      Encoder enc;
      enc.put_u64(port);
      response.body = enc.take();
      break;
    }
    case wire::NodeOp::kDestroyCvm: {
      auto result = destroy_cvm(request.cvm_id);
      if (!result.ok()) {
        fail(result.error());
      } else {
        response.ok = true;
      }
      break;
    }
  }
  return response;
}

// ---------------------------------------------------------------------------
// NodeLink implementations
// ---------------------------------------------------------------------------

Result<std::vector<crypto::Certificate>> InprocNodeLink::platform_chain() {
  return node_.platform_chain();
}

Result<wire::LaunchCvmResult> InprocNodeLink::launch_cvm(
    const std::string& cvm_id, wire::GuestKind kind, ConstSpan image_bytes) {
  return node_.launch_cvm(cvm_id, kind, image_bytes);
}

Result<void> InprocNodeLink::inject_secret(const std::string& cvm_id,
                                           ConstSpan godh_public,
                                           ConstSpan sealed) {
  return node_.inject_secret(cvm_id, godh_public, sealed);
}

Result<net::ChannelPtr> InprocNodeLink::open_guest_channel(
    const std::string& cvm_id) {
  return node_.open_guest_channel(cvm_id);
}

Result<void> InprocNodeLink::bind_vtpm(const std::string& acvm_id,
                                       const std::string& tpmcvm_id) {
  return node_.bind_vtpm(acvm_id, tpmcvm_id);
}

Result<net::ChannelPtr> InprocNodeLink::open_user_channel(
    const std::string& acvm_id) {
  return node_.open_user_channel(acvm_id);
}

Result<void> InprocNodeLink::destroy_cvm(const std::string& cvm_id) {
  return node_.destroy_cvm(cvm_id);
}

Result<std::unique_ptr<TcpNodeLink>> TcpNodeLink::connect(
    std::uint16_t control_port) {
  auto channel = net::tcp_connect(control_port);
  if (!channel.ok()) return channel.error();
  return std::unique_ptr<TcpNodeLink>(new TcpNodeLink(channel.take()));
}

Result<wire::ControlResponse> TcpNodeLink::roundtrip(
    const wire::ControlRequest& request) {
  std::lock_guard<std::mutex> lock(mu_);
  auto reply = wire::request_response(
      *control_,
      net::Frame{static_cast<std::uint8_t>(wire::FrameType::kControlReq),
                 net::kWireVersion, request.encode()},
      static_cast<std::uint8_t>(wire::FrameType::kControlResp),
      net::kDefaultTimeout);
  if (!reply.ok()) return reply.error();
  return wire::ControlResponse::decode(reply.value().payload);
}

Result<std::vector<crypto::Certificate>> TcpNodeLink::platform_chain() {
  wire::ControlRequest request{wire::NodeOp::kGetPlatform, "", "", 0, {}, {}};
  auto response = roundtrip(request);
  if (!response.ok()) return response.error();
  if (!response.value().ok) {
    return Error{response.value().error, response.value().detail};
  }
  return wire::decode_cert_list(response.value().body);
}

Result<wire::LaunchCvmResult> TcpNodeLink::launch_cvm(
    const std::string& cvm_id, wire::GuestKind kind, ConstSpan image_bytes) {
  wire::ControlRequest request{wire::NodeOp::kLaunchCvm,
                               cvm_id,
                               "",
                               static_cast<std::uint8_t>(kind),
                               Bytes(image_bytes.begin(), image_bytes.end()),
                               {}};
  auto response = roundtrip(request);
  if (!response.ok()) return response.error();
  if (!response.value().ok) {
    return Error{response.value().error, response.value().detail};
  }
  return wire::LaunchCvmResult::decode(response.value().body);
}

Result<void> TcpNodeLink::inject_secret(const std::string& cvm_id,
                                        ConstSpan godh_public,
                                        ConstSpan sealed) {
  wire::ControlRequest request{wire::NodeOp::kInjectSecret,
                               cvm_id,
                               "",
                               0,
                               Bytes(godh_public.begin(), godh_public.end()),
                               Bytes(sealed.begin(), sealed.end())};
  auto response = roundtrip(request);
  if (!response.ok()) return response.error();
  if (!response.value().ok) {
    return Error{response.value().error, response.value().detail};
  }
  return {};
}

Result<net::ChannelPtr> TcpNodeLink::open_port_channel(wire::NodeOp op,
                                                       const std::string& id) {
  wire::ControlRequest request{op, id, "", 0, {}, {}};
  auto response = roundtrip(request);
  if (!response.ok()) return response.error();
  if (!response.value().ok) {
    return Error{response.value().error, response.value().detail};
  }
  Decoder dec(response.value().body);
  auto port = dec.u64();
  if (!port || !dec.done()) return {Err::kMalformed, "bad port payload"};
  return net::tcp_connect(static_cast<std::uint16_t>(*port));
}

Result<net::ChannelPtr> TcpNodeLink::open_guest_channel(
    const std::string& cvm_id) {
  return open_port_channel(wire::NodeOp::kOpenGuestChannel, cvm_id);
}

Result<void> TcpNodeLink::bind_vtpm(const std::string& acvm_id,
                                    const std::string& tpmcvm_id) {
  wire::ControlRequest request{wire::NodeOp::kBindVtpm, acvm_id, tpmcvm_id, 0,
                               {}, {}};
  auto response = roundtrip(request);
  if (!response.ok()) return response.error();
  if (!response.value().ok) {
    return Error{response.value().error, response.value().detail};
  }
  return {};
}

Result<net::ChannelPtr> TcpNodeLink::open_user_channel(
    const std::string& acvm_id) {
  return open_port_channel(wire::NodeOp::kOpenUserChannel, acvm_id);
}

Result<void> TcpNodeLink::destroy_cvm(const std::string& cvm_id) {
  wire::ControlRequest request{wire::NodeOp::kDestroyCvm, cvm_id, "", 0, {},
                               {}};
  auto response = roundtrip(request);
  if (!response.ok()) return response.error();
  if (!response.value().ok) {
    return Error{response.value().error, response.value().detail};
  }
  return {};
}

}  // namespace t3cvm::cloud
