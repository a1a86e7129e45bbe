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

#include "t3cvm/scenario.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <random>

#include "t3cvm/encode.hpp"
#include "t3cvm/guest_agent.hpp"
#include "t3cvm/manager.hpp"
#include "t3cvm/tpm_commands.hpp"
#include "t3cvm/tpmcvm_service.hpp"
#include "t3cvm/wire.hpp"

namespace t3cvm::sim {

namespace {

std::atomic<int> g_run_counter{0};

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

image::CvmImage random_image(std::mt19937_64& rng, const std::string& name) {
  auto blob = [&rng](std::size_t min_len, std::size_t max_len) {
    std::uniform_int_distribution<std::size_t> len_dist(min_len, max_len);
    std::uniform_int_distribution<int> byte_dist(0, 255);
    Bytes out(len_dist(rng));
    for (auto& b : out) b = static_cast<std::uint8_t>(byte_dist(rng));
    return out;
  };
  image::StagePayload payload;
  payload.bootloader = blob(64, 512);
  payload.kernel = blob(128, 1024);
  payload.application = blob(64, 512);
  return image::build_acvm_image(image::ImageMetadata{name, "1"},
                                 blob(128, 512), payload);
}

// Families and their default knobs.
void apply_family_defaults(ScenarioSpec& spec) {
  using cloud::AdversaryFlag;
  auto set_expected = [&](const char* code) {
    if (spec.expected_code.empty()) spec.expected_code = code;
  };
  auto set_launches = [&](int n) {
    if (spec.launches <= 0) spec.launches = n;
  };

  if (spec.name == "clean-boot") {
    set_launches(1);
    set_expected("ACCEPTED");
  } else if (spec.name == "returning-acvm") {
    set_launches(2);
    set_expected("ACCEPTED");
  } else if (spec.name == "counter-run") {
    set_launches(5);
    set_expected("ACCEPTED");
  } else if (spec.name == "tamper-image") {
    spec.adversary.flags.insert(AdversaryFlag::kTamperImage);
    spec.adversary.tamper_image_target = wire::GuestKind::kTpmcvm;
    set_launches(1);
    set_expected("InitMeasurementMismatch");
  } else if (spec.name == "tamper-image-acvm") {
    spec.adversary.flags.insert(AdversaryFlag::kTamperImage);
    spec.adversary.tamper_image_target = wire::GuestKind::kAcvm;
    set_launches(1);
    set_expected("InitMeasurementMismatch");
  } else if (spec.name == "tamper-channel") {
    spec.adversary.flags.insert(AdversaryFlag::kTamperChannel);
    if (spec.adversary.tamper_link.empty()) spec.adversary.tamper_link = "boot";
    set_launches(1);
    set_expected("ChannelAuthFailure");
  } else if (spec.name == "eavesdrop") {
    spec.adversary.flags.insert(AdversaryFlag::kEavesdropChannel);
    set_launches(1);
    set_expected("ACCEPTED");
  } else if (spec.name == "nvram-binding-attack") {
    spec.adversary.flags.insert(AdversaryFlag::kSwapStateFile);
    // Registration order is deterministic: the decoy workload is acvm-2.
    if (spec.adversary.swap_source_acvm.empty()) {
      spec.adversary.swap_source_acvm = "acvm-2";
    }
    set_launches(2);
    set_expected("BindingViolation");
  } else if (spec.name == "rollback") {
    spec.adversary.flags.insert(AdversaryFlag::kReplayStateFile);
    set_launches(3);
    set_expected("RollbackDetected");
  } else if (spec.name == "rogue-vtpm") {
    spec.adversary.flags.insert(AdversaryFlag::kRedirectVtpm);
    set_launches(1);
    set_expected("BindingProofInvalid");
  } else if (spec.name == "rogue-vtpm-uncertified") {
    spec.adversary.flags.insert(AdversaryFlag::kRedirectVtpm);
    set_launches(1);
    set_expected("ChainOfCertsInvalid");
  } else {
    set_launches(1);
    set_expected("ACCEPTED");
  }
}

// Pulls the leading error-code token out of a guest failure string
// ("ChannelAuthFailure: response integrity ..." -> "ChannelAuthFailure").
std::string leading_code(const std::string& detail) {
  auto pos = detail.find_first_of(" :(");
  return pos == std::string::npos ? detail : detail.substr(0, pos);
}

struct UserLink {
  net::ChannelPtr channel;

  Result<wire::UserResponse> ask(wire::UserOp op, ConstSpan nonce = {}) {
    wire::UserRequest request{op, Bytes(nonce.begin(), nonce.end())};
    auto reply = wire::request_response(
        *channel,
        net::Frame{static_cast<std::uint8_t>(wire::FrameType::kUserReq),
                   net::kWireVersion, request.encode()},
        static_cast<std::uint8_t>(wire::FrameType::kUserResp),
        std::chrono::milliseconds(20000));
    if (!reply.ok()) return reply.error();
    return wire::UserResponse::decode(reply.value().payload);
  }
};

vtpm::PcrBank fold_extend_records(
    const std::vector<vtpm::Vtpm::ExtendRecord>& records) {
  vtpm::PcrBank bank;
  for (const auto& record : records) {
    (void)bank.extend(record.pcr, record.measurement);
  }
  return bank;
}

}  // namespace

Result<ScenarioSpec> ScenarioSpec::from_json(std::string_view text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return {Err::kMalformed, "scenario file is not valid JSON"};
  }
  ScenarioSpec spec;
  spec.launches = 0;
  spec.expected_code.clear();
  try {
    spec.name = j.at("name").get<std::string>();
    if (j.contains("transport")) {
      spec.transport = j.at("transport").get<std::string>();
    }
    if (j.contains("image_seed")) {
      spec.image_seed = j.at("image_seed").get<std::uint64_t>();
    }
    if (j.contains("launches")) spec.launches = j.at("launches").get<int>();
    if (j.contains("expected")) {
      spec.expected_code = j.at("expected").get<std::string>();
    }
    if (j.contains("adversary")) {
      const auto& a = j.at("adversary");
      if (a.contains("flags")) {
        for (const auto& flag : a.at("flags")) {
          auto parsed = cloud::adversary_flag_from_name(
              flag.get<std::string>());
          if (!parsed.ok()) return parsed.error();
          spec.adversary.flags.insert(parsed.value());
        }
      }
      if (a.contains("swap_source_acvm")) {
        spec.adversary.swap_source_acvm =
            a.at("swap_source_acvm").get<std::string>();
      }
      if (a.contains("tamper_link")) {
        spec.adversary.tamper_link = a.at("tamper_link").get<std::string>();
      }
      if (a.contains("tamper_image_target")) {
        spec.adversary.tamper_image_target =
            a.at("tamper_image_target").get<std::string>() == "acvm"
                ? wire::GuestKind::kAcvm
                : wire::GuestKind::kTpmcvm;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    return {Err::kMalformed, std::string("scenario JSON: ") + e.what()};
  }
  if (spec.transport != "local" && spec.transport != "tcp") {
    return {Err::kMalformed, "transport must be 'local' or 'tcp'"};
  }
  return spec;
}

std::string ScenarioSpec::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["transport"] = transport;
  if (image_seed != 0) j["image_seed"] = image_seed;
  if (launches > 0) j["launches"] = launches;
  if (!expected_code.empty()) j["expected"] = expected_code;
  nlohmann::json flags = nlohmann::json::array();
  for (auto flag : adversary.flags) {
    flags.push_back(cloud::adversary_flag_name(flag));
  }
  if (!flags.empty()) {
    j["adversary"]["flags"] = flags;
    if (!adversary.swap_source_acvm.empty()) {
      j["adversary"]["swap_source_acvm"] = adversary.swap_source_acvm;
    }
    j["adversary"]["tamper_link"] = adversary.tamper_link;
    j["adversary"]["tamper_image_target"] =
        adversary.tamper_image_target == wire::GuestKind::kAcvm ? "acvm"
                                                                : "tpmcvm";
  }
  return j.dump(2);
}

std::string Report::to_json() const {
  nlohmann::json j;
  j["scenario"] = scenario;
  j["transport"] = transport;
  j["expected"] = expected_code;
  j["actual"] = actual_code;
  j["detail"] = detail;
  j["custody_clean"] = custody_clean;
  j["pass"] = pass;
  j["wall_ms"] = wall_ms;
  for (const auto& [phase, elapsed] : phases) {
    j["phases"].push_back({{"phase", phase}, {"ms", elapsed}});
  }
  j["launches"] = nlohmann::json::array();
  for (const auto& artifacts : clean_launches) {
    nlohmann::json l;
    l["verdict"] = artifacts.verdict.code();
    l["quote_counter"] = artifacts.bundle.quote.counter;
    nlohmann::json bank = nlohmann::json::array();
    for (const auto& reg : artifacts.replayed_bank.registers()) {
      bank.push_back(reg.hex());
    }
    l["pcr_bank"] = bank;
    j["launches"].push_back(std::move(l));
  }
  return j.dump(2);
}

Report run_scenario(const ScenarioSpec& spec_in) {
  ScenarioSpec spec = spec_in;
  apply_family_defaults(spec);

  Report report;
  report.scenario = spec.name;
  report.transport = spec.transport;
  report.expected_code = spec.expected_code;
  report.node_trace = std::make_shared<trace::Trace>();

  auto total_start = Clock::now();
  auto phase_start = Clock::now();
  auto end_phase = [&](const char* phase) {
    report.phases.emplace_back(phase, ms_since(phase_start));
    phase_start = Clock::now();
  };

  // Trust anchors and actors.
  crypto::CertificateAuthority ca;
  crypto::KeyPair trk =
      crypto::KeyPair::generate(crypto::KeyPairRole::kUserNodeRoot);
  crypto::Certificate trk_cert = ca.issue("user-node", trk.public_key());
  cloud::AmdAuthority amd;
  cloud::CloudNode node(amd.issue_platform("cloud-node-1"), spec.adversary,
                        *report.node_trace);

  std::unique_ptr<cloud::NodeLink> link;
  if (spec.transport == "tcp") {
    auto port = node.start_control_server();
    if (!port.ok()) {
      report.actual_code = "Infrastructure";
      report.detail = port.error().to_string();
      return report;
    }
    auto connected = cloud::TcpNodeLink::connect(port.value());
    if (!connected.ok()) {
      report.actual_code = "Infrastructure";
      report.detail = connected.error().to_string();
      return report;
    }
    link = connected.take();
  } else {
    link = std::make_unique<cloud::InprocNodeLink>(node);
  }

  mgr::TrManager::Config config;
  config.identity = "tr-manager-" + std::to_string(++g_run_counter);
  config.user_node_root = trk;
  config.trk_certificate = trk_cert;
  config.ca = &ca;
  config.ca_root = ca.root_certificate();
  config.amd_root = amd.root_certificate();
  auto manager = mgr::TrManager::init(std::move(config));
  if (!manager.ok()) {
    report.actual_code = "Infrastructure";
    report.detail = manager.error().to_string();
    return report;
  }
  mgr::TrManager& tr = *manager.value();

  std::uint64_t seed = spec.image_seed != 0
                           ? spec.image_seed
                           : std::random_device{}();
  std::mt19937_64 rng(seed);

  bool needs_decoy = spec.name == "nvram-binding-attack";
  auto target_id = tr.register_acvm("user-1", random_image(rng, "workload-a"));
  Result<std::string> decoy_id =
      needs_decoy ? tr.register_acvm("user-1", random_image(rng, "workload-b"))
                  : Result<std::string>{Err::kNotFound, "unused"};
  if (!target_id.ok() || (needs_decoy && !decoy_id.ok())) {
    report.actual_code = "Infrastructure";
    report.detail = "registration failed";
    return report;
  }
  end_phase("setup");

  auto finish = [&](std::string code, std::string detail) {
    report.actual_code = std::move(code);
    report.detail = std::move(detail);
    report.audit_jsonl = tr.audit_jsonl();
    report.custody_clean = true;
    for (const auto& key : crypto::KeyMaterialRegistry::instance().all()) {
      if (report.node_trace->contains_bytes(key)) {
        report.custody_clean = false;
        break;
      }
    }
    report.pass =
        report.actual_code == report.expected_code && report.custody_clean;
    report.wall_ms = ms_since(total_start);
    return report;
  };

  auto tpmcvm = tr.launch_tpmcvm(*link);
  if (!tpmcvm.ok()) {
    end_phase("tpmcvm-launch");
    return finish(err_name(tpmcvm.error().code), tpmcvm.error().detail);
  }
  end_phase("tpmcvm-launch");

  // Rogue arming for redirect families: the strongest modeled adversary
  // holds a certified (stolen) CN-TPMCVM root; the uncertified variant also
  // gets a leaked copy of the PCR values it cannot otherwise produce.
  if (spec.adversary.has(cloud::AdversaryFlag::kRedirectVtpm)) {
    cloud::RogueSetup setup;
    if (spec.name != "rogue-vtpm-uncertified") {
      const auto* entry = tr.tpm_entry(tpmcvm.value());
      setup.certified_root = entry->root_key_pair;
      setup.certified_root_cert = entry->rk_certificate;
      setup.issuer_chain = tr.manager_chain();
    } else {
      const auto* vm = tr.vm_entry(target_id.value());
      auto inputs = tr.binding_inputs_for(tpmcvm.value());
      if (vm && inputs.ok() && vm->vm_key) {
        boot::EventLog hypothetical;
        hypothetical.owner_id = target_id.value();
        hypothetical.events = vm->golden_boot_events;
        setup.leaked_bank = attest::replay_log(
            hypothetical, {crypto::hmac(*vm->vm_key, inputs.value()),
                           vm->golden_init_measurement});
      }
    }
    node.arm_rogue(std::move(setup));
  }

  // Decoy cycle so a sealed state exists for the swap hook to substitute.
  if (needs_decoy) {
    auto launched = tr.launch_acvm(decoy_id.value(), tpmcvm.value(), *link);
    if (!launched.ok()) {
      return finish(err_name(launched.error().code), launched.error().detail);
    }
    auto user = link->open_user_channel(decoy_id.value());
    if (user.ok()) {
      UserLink decoy_user{user.value()};
      (void)decoy_user.ask(wire::UserOp::kWaitBooted);
    }
    auto torn = tr.teardown_acvm(decoy_id.value(), *link);
    if (!torn.ok()) {
      return finish(err_name(torn.error().code), torn.error().detail);
    }
  }

  for (int launch = 1; launch <= spec.launches; ++launch) {
    auto launched = tr.launch_acvm(target_id.value(), tpmcvm.value(), *link);
    if (!launched.ok()) {
      end_phase("acvm-launch");
      return finish(err_name(launched.error().code), launched.error().detail);
    }
    auto user_channel = link->open_user_channel(target_id.value());
    if (!user_channel.ok()) {
      return finish("Infrastructure", user_channel.error().to_string());
    }
    UserLink user{user_channel.value()};

    auto booted = user.ask(wire::UserOp::kWaitBooted);
    if (!booted.ok()) {
      return finish("Infrastructure", booted.error().to_string());
    }
    if (!booted.value().ok) {
      return finish(leading_code(booted.value().detail), booted.value().detail);
    }
    end_phase("acvm-launch");

    // Evidence collection and verification.
    Bytes nonce = crypto::random_bytes(16);
    auto evidence_reply = user.ask(wire::UserOp::kCollectEvidence, nonce);
    if (!evidence_reply.ok() || !evidence_reply.value().ok) {
      return finish("Infrastructure",
                    evidence_reply.ok() ? evidence_reply.value().detail
                                        : evidence_reply.error().to_string());
    }
    auto evidence = attest::GuestEvidence::from_json(
        to_string(evidence_reply.value().body));
    if (!evidence.ok()) {
      return finish("Infrastructure", evidence.error().to_string());
    }
    auto disclosure = tr.disclose(target_id.value());
    if (!disclosure.ok()) {
      return finish("Infrastructure", disclosure.error().to_string());
    }

    attest::EvidenceBundle bundle;
    bundle.acvm_id = target_id.value();
    bundle.init_measurement = disclosure.value().init_measurement;
    bundle.event_log = evidence.value().event_log;
    bundle.quote = evidence.value().quote;
    bundle.ek_chain = evidence.value().ek_chain;
    bundle.binding_inputs = disclosure.value().binding_inputs;

    attest::Golden golden;
    golden.init_measurement = disclosure.value().golden_init;
    golden.boot_events = disclosure.value().golden_boot_events;
    golden.expected_counter = disclosure.value().expected_counter;

    attest::Verdict verdict =
        attest::verify(bundle, golden, disclosure.value().vm_key,
                       ca.root_certificate(), nonce);
    end_phase("verify");

    if (!verdict.accepted) {
      return finish(verdict.code(), verdict.detail);
    }

    LaunchArtifacts artifacts;
    artifacts.bundle = std::move(bundle);
    artifacts.golden = std::move(golden);
    artifacts.nonce = nonce;
    artifacts.vm_key = disclosure.value().vm_key;
    artifacts.trusted_root = ca.root_certificate();
    artifacts.verdict = verdict;
    auto view_reply = user.ask(wire::UserOp::kGetBootView);
    if (view_reply.ok() && view_reply.value().ok) {
      auto records = tpm_cmd::parse_boot_view_payload(view_reply.value().body);
      if (records.ok()) {
        artifacts.extend_records = records.take();
        artifacts.replayed_bank = fold_extend_records(artifacts.extend_records);
      }
    }
    report.clean_launches.push_back(std::move(artifacts));

    auto torn = tr.teardown_acvm(target_id.value(), *link);
    if (!torn.ok()) {
      return finish(err_name(torn.error().code), torn.error().detail);
    }
    const auto* vm = tr.vm_entry(target_id.value());
    if (vm) report.counters_after_teardown.push_back(vm->expected_counter);
    end_phase("teardown");
  }

  return finish("ACCEPTED", "");
}

const std::vector<BuiltinScenario>& builtin_scenarios() {
  static const auto* scenarios = [] {
    auto make = [](const char* name) {
      ScenarioSpec spec;
      spec.name = name;
      spec.launches = 0;
      spec.expected_code.clear();
      apply_family_defaults(spec);
      return spec;
    };
    auto* list = new std::vector<BuiltinScenario>{
        {make("clean-boot"), {"SR1", "SR3", "SR7"}},
        {make("returning-acvm"), {"SR5"}},
        {make("counter-run"), {"SR5"}},
        {make("tamper-image"), {"SR3"}},
        {make("tamper-image-acvm"), {"SR7"}},
        {make("tamper-channel"), {"SR3", "SR4"}},
        {make("eavesdrop"), {"SR2", "SR4"}},
        {make("nvram-binding-attack"), {"SR2", "SR5"}},
        {make("rollback"), {"SR5"}},
        {make("rogue-vtpm"), {"SR6"}},
        {make("rogue-vtpm-uncertified"), {"SR6"}},
    };
    return list;
  }();
  return *scenarios;
}

std::vector<BenchRow> bench_tpm_commands(int repetitions) {
  std::vector<BenchRow> rows;
  if (repetitions <= 0) return rows;

  // A bound vTPM with a live wrapped-command path: service on one end of a
  // channel, driver agent on the other, exactly as inside a launched ACVM.
  crypto::KeyPair root = crypto::KeyPair::generate(crypto::KeyPairRole::kTpmcvmRoot);
  crypto::Certificate root_cert =
      crypto::issue_certificate(root, "bench-root", "bench-root", root.public_key());
  tpmcvm::TpmcvmService service("bench-tpmcvm");
  service.install_root(root, root_cert, {root_cert});

  crypto::SymmetricKey vm_key = crypto::SymmetricKey::generate(crypto::KeyRole::kVmKey);
  crypto::SymmetricKey session = crypto::SymmetricKey::generate(crypto::KeyRole::kSessionKey);
  wire::VmKeyAndStateBody params{
      "bench-acvm", Bytes(vm_key.span().begin(), vm_key.span().end()), 0, true,
      crypto::hash(to_bytes("bench"))};
  (void)service.begin_bind(params, {}, session);
  (void)service.complete_bind(
      "bench-acvm", crypto::hmac(vm_key, to_bytes("bench-binding")));

  auto [agent_end, service_end] = net::make_inproc_pair("bench-tpm");
  std::atomic<bool> stop{false};
  std::thread server([&] {
    while (!stop) {
      auto frame = service_end->recv(std::chrono::milliseconds(50));
      if (!frame) {
        if (service_end->closed()) return;
        continue;
      }
      auto response = service.handle_wrapped(*frame);
      if (response) service_end->send(*response);
    }
  });

  agent::GuestAgent driver(agent::GuestAgent::Mode::kAcvm, "bench-acvm");
  driver.install_session_key(session);

  auto wrapped_call = [&](ConstSpan command) -> Result<Bytes> {
    auto frame = driver.wrap_command(command);
    if (!frame.ok() || !agent_end->send(frame.value())) {
      return {Err::kUnavailable, "send failed"};
    }
    auto reply = agent_end->recv(std::chrono::milliseconds(5000));
    if (!reply) return {Err::kTimeout, "no reply"};
    auto raw = driver.unwrap_response(*reply);
    if (!raw.ok()) return raw.error();
    return tpm_cmd::parse_response(raw.value());
  };

  // Baseline: the same commands dispatched directly in process.
  vtpm::Vtpm baseline = vtpm::Vtpm::create(root, "bench-root", "bench-baseline");
  std::vector<crypto::Certificate> baseline_chain = {root_cert};

  // Handles and a signature prepared up front so the timed loops measure the
  // command itself.
  auto wrapped_handle_payload = wrapped_call(tpm_cmd::encode_create_key());
  if (!wrapped_handle_payload.ok()) {
    stop = true;
    agent_end->close();
    server.join();
    return rows;
  }
  std::string wrapped_handle =
      tpm_cmd::parse_handle_payload(wrapped_handle_payload.value()).value();
  std::string baseline_handle = baseline.create_signing_key();
  Bytes message = to_bytes("bench message payload");
  Bytes wrapped_sig = tpm_cmd::parse_bytes_payload(
      wrapped_call(tpm_cmd::encode_sign(wrapped_handle, message)).value())
      .value();

  crypto::Digest extend_digest = crypto::hash(to_bytes("bench extend"));
  Bytes hash_input = crypto::random_bytes(256);

  (void)baseline_handle;
  struct Candidate {
    const char* name;
    Bytes command;
  };
  const std::vector<Candidate> candidates = {
      {"GetRandom", tpm_cmd::encode_get_random(32)},
      {"PCR Read", tpm_cmd::encode_pcr_read(0)},
      {"PCR Extend", tpm_cmd::encode_pcr_extend(16, extend_digest, "bench")},
      {"Hash", tpm_cmd::encode_hash(hash_input)},
      {"Create", tpm_cmd::encode_create_key()},
      {"Sign", tpm_cmd::encode_sign(wrapped_handle, message)},
      {"Verify Signature",
       tpm_cmd::encode_verify_signature(wrapped_handle, message, wrapped_sig)},
  };

  for (const auto& candidate : candidates) {
    auto wrapped_start = Clock::now();
    for (int i = 0; i < repetitions; ++i) {
      (void)wrapped_call(candidate.command);
    }
    double wrapped_ms = ms_since(wrapped_start) / repetitions;

    auto baseline_start = Clock::now();
    for (int i = 0; i < repetitions; ++i) {
      Bytes response = tpm_cmd::dispatch(baseline, baseline_chain,
                                         candidate.command);
      (void)response;
    }
    double baseline_ms = ms_since(baseline_start) / repetitions;

    rows.push_back(BenchRow{candidate.name, wrapped_ms, baseline_ms});
  }

  stop = true;
  agent_end->close();
  service_end->close();
  server.join();
  return rows;
}

std::string bench_to_json(const std::vector<BenchRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& row : rows) {
    j.push_back({{"command", row.command},
                 {"wrapped_ms", row.wrapped_ms},
                 {"baseline_ms", row.baseline_ms}});
  }
  return j.dump(2);
}

}  // namespace t3cvm::sim
