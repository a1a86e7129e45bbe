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

#include "t3cvm/verifier.hpp"

#include <json.hpp>

namespace t3cvm::attest {

namespace {

nlohmann::json cert_to_json(const crypto::Certificate& cert) {
  return {{"subject", cert.subject},
          {"subject_public_key", to_hex(cert.subject_public_key)},
          {"issuer", cert.issuer},
          {"signature", to_hex(cert.signature)}};
}

Result<crypto::Certificate> cert_from_json(const nlohmann::json& j) {
  try {
    crypto::Certificate cert;
    cert.subject = j.at("subject").get<std::string>();
    auto pub = from_hex(j.at("subject_public_key").get<std::string>());
    auto sig = from_hex(j.at("signature").get<std::string>());
    if (!pub || !sig) return {Err::kMalformed, "bad certificate hex"};
    cert.subject_public_key = std::move(*pub);
    cert.issuer = j.at("issuer").get<std::string>();
    cert.signature = std::move(*sig);
    return cert;
  } catch (const nlohmann::json::exception& e) {
    return {Err::kMalformed, std::string("certificate JSON: ") + e.what()};
  }
}

nlohmann::json quote_to_json(const vtpm::Quote& quote) {
  return {{"pcr_selection", quote.pcr_selection},
          {"pcr_composite", quote.pcr_composite.hex()},
          {"nonce", to_hex(quote.nonce)},
          {"counter", quote.counter},
          {"signature", to_hex(quote.signature)}};
}

Result<vtpm::Quote> quote_from_json(const nlohmann::json& j) {
  try {
    vtpm::Quote quote;
    quote.pcr_selection = j.at("pcr_selection").get<std::vector<int>>();
    auto composite =
        crypto::Digest::from_hex(j.at("pcr_composite").get<std::string>());
    auto nonce = from_hex(j.at("nonce").get<std::string>());
    auto signature = from_hex(j.at("signature").get<std::string>());
    if (!composite || !nonce || !signature) {
      return {Err::kMalformed, "bad quote hex"};
    }
    quote.pcr_composite = *composite;
    quote.nonce = std::move(*nonce);
    quote.counter = j.at("counter").get<std::uint64_t>();
    quote.signature = std::move(*signature);
    return quote;
  } catch (const nlohmann::json::exception& e) {
    return {Err::kMalformed, std::string("quote JSON: ") + e.what()};
  }
}

nlohmann::json events_to_json(const std::vector<boot::BootEvent>& events) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& event : events) {
    arr.push_back({{"sequence", event.sequence},
                   {"stage", boot::stage_name(event.stage)},
                   {"description", event.description},
                   {"measurement", event.measurement.hex()}});
  }
  return arr;
}

Result<std::vector<boot::BootEvent>> events_from_json(
    const nlohmann::json& arr) {
  std::vector<boot::BootEvent> events;
  try {
    for (const auto& entry : arr) {
      boot::BootEvent event;
      event.sequence = entry.at("sequence").get<std::uint64_t>();
      auto stage = boot::stage_from_name(entry.at("stage").get<std::string>());
      if (!stage.ok()) return stage.error();
      event.stage = stage.value();
      event.description = entry.at("description").get<std::string>();
      auto digest =
          crypto::Digest::from_hex(entry.at("measurement").get<std::string>());
      if (!digest) return {Err::kMalformed, "bad measurement hex"};
      event.measurement = *digest;
      events.push_back(std::move(event));
    }
  } catch (const nlohmann::json::exception& e) {
    return {Err::kMalformed, std::string("events JSON: ") + e.what()};
  }
  return events;
}

nlohmann::json log_to_json(const boot::EventLog& log) {
  return {{"owner_id", log.owner_id},
          {"launch_nonce", to_hex(log.launch_nonce)},
          {"events", events_to_json(log.events)}};
}

Result<boot::EventLog> log_from_json(const nlohmann::json& j) {
  try {
    boot::EventLog log;
    log.owner_id = j.at("owner_id").get<std::string>();
    auto nonce = from_hex(j.at("launch_nonce").get<std::string>());
    if (!nonce) return {Err::kMalformed, "bad launch nonce hex"};
    log.launch_nonce = std::move(*nonce);
    auto events = events_from_json(j.at("events"));
    if (!events.ok()) return events.error();
    log.events = events.take();
    return log;
  } catch (const nlohmann::json::exception& e) {
    return {Err::kMalformed, std::string("event log JSON: ") + e.what()};
  }
}

}  // namespace

std::string GuestEvidence::to_json() const {
  nlohmann::json j;
  j["event_log"] = log_to_json(event_log);
  j["quote"] = quote_to_json(quote);
  j["ek_chain"] = nlohmann::json::array();
  for (const auto& cert : ek_chain) j["ek_chain"].push_back(cert_to_json(cert));
  return j.dump();
}

Result<GuestEvidence> GuestEvidence::from_json(std::string_view text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return {Err::kMalformed, "guest evidence is not valid JSON"};
  }
  GuestEvidence evidence;
  try {
    auto log = log_from_json(j.at("event_log"));
    if (!log.ok()) return log.error();
    evidence.event_log = log.take();
    auto quote = quote_from_json(j.at("quote"));
    if (!quote.ok()) return quote.error();
    evidence.quote = quote.take();
    for (const auto& entry : j.at("ek_chain")) {
      auto cert = cert_from_json(entry);
      if (!cert.ok()) return cert.error();
      evidence.ek_chain.push_back(cert.take());
    }
  } catch (const nlohmann::json::exception& e) {
    return {Err::kMalformed, std::string("guest evidence JSON: ") + e.what()};
  }
  return evidence;
}

std::string EvidenceBundle::to_json() const {
  nlohmann::json j;
  j["acvm_id"] = acvm_id;
  j["init_measurement"] = init_measurement.hex();
  j["event_log"] = log_to_json(event_log);
  j["quote"] = quote_to_json(quote);
  j["ek_chain"] = nlohmann::json::array();
  for (const auto& cert : ek_chain) j["ek_chain"].push_back(cert_to_json(cert));
  j["binding_inputs"] = to_hex(binding_inputs);
  return j.dump(2);
}

Result<EvidenceBundle> EvidenceBundle::from_json(std::string_view text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return {Err::kMalformed, "bundle is not valid JSON"};
  }
  EvidenceBundle bundle;
  try {
    bundle.acvm_id = j.at("acvm_id").get<std::string>();
    auto init =
        crypto::Digest::from_hex(j.at("init_measurement").get<std::string>());
    if (!init) return {Err::kMalformed, "bad init measurement hex"};
    bundle.init_measurement = *init;
    auto log = log_from_json(j.at("event_log"));
    if (!log.ok()) return log.error();
    bundle.event_log = log.take();
    auto quote = quote_from_json(j.at("quote"));
    if (!quote.ok()) return quote.error();
    bundle.quote = quote.take();
    for (const auto& entry : j.at("ek_chain")) {
      auto cert = cert_from_json(entry);
      if (!cert.ok()) return cert.error();
      bundle.ek_chain.push_back(cert.take());
    }
    auto inputs = from_hex(j.at("binding_inputs").get<std::string>());
    if (!inputs) return {Err::kMalformed, "bad binding inputs hex"};
    bundle.binding_inputs = std::move(*inputs);
  } catch (const nlohmann::json::exception& e) {
    return {Err::kMalformed, std::string("bundle JSON: ") + e.what()};
  }
  return bundle;
}

const char* failure_name(Failure failure) {
  switch (failure) {
    case Failure::kNone: return "None";
    case Failure::kChainOfCertsInvalid: return "ChainOfCertsInvalid";
    case Failure::kQuoteInvalid: return "QuoteInvalid";
    case Failure::kInitMeasurementMismatch: return "InitMeasurementMismatch";
    case Failure::kBootEventMismatch: return "BootEventMismatch";
    case Failure::kBindingProofInvalid: return "BindingProofInvalid";
    case Failure::kRollbackSuspected: return "RollbackSuspected";
  }
  return "Unknown";
}

std::string Verdict::code() const {
  return accepted ? "ACCEPTED" : failure_name(failure);
}

std::string Golden::to_json(const crypto::SymmetricKey& vm_key,
                            const crypto::Certificate& trusted_root,
                            ConstSpan nonce) const {
  nlohmann::json j;
  j["init_measurement"] = init_measurement.hex();
  j["boot_events"] = events_to_json(boot_events);
  j["expected_counter"] = expected_counter;
  j["vm_key"] = to_hex(vm_key.span());
  j["trusted_root"] = cert_to_json(trusted_root);
  j["nonce"] = to_hex(nonce);
  return j.dump(2);
}

Result<GoldenFile> GoldenFile::from_json(std::string_view text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return {Err::kMalformed, "golden file is not valid JSON"};
  }
  try {
    Golden golden;
    auto init =
        crypto::Digest::from_hex(j.at("init_measurement").get<std::string>());
    if (!init) return {Err::kMalformed, "bad init measurement hex"};
    golden.init_measurement = *init;
    auto events = events_from_json(j.at("boot_events"));
    if (!events.ok()) return events.error();
    golden.boot_events = events.take();
    golden.expected_counter = j.at("expected_counter").get<std::uint64_t>();

    auto key_raw = from_hex(j.at("vm_key").get<std::string>());
    if (!key_raw) return {Err::kMalformed, "bad vm key hex"};
    auto vm_key =
        crypto::SymmetricKey::from_bytes(crypto::KeyRole::kVmKey, *key_raw);
    if (!vm_key) return {Err::kMalformed, "bad vm key length"};
    auto root = cert_from_json(j.at("trusted_root"));
    if (!root.ok()) return root.error();
    auto nonce = from_hex(j.at("nonce").get<std::string>());
    if (!nonce) return {Err::kMalformed, "bad nonce hex"};
    return GoldenFile{std::move(golden), std::move(*vm_key), root.take(),
                      std::move(*nonce)};
  } catch (const nlohmann::json::exception& e) {
    return {Err::kMalformed, std::string("golden JSON: ") + e.what()};
  }
}

vtpm::PcrBank replay_log(const boot::EventLog& log,
                         const std::vector<crypto::Digest>& pcr0_seeds) {
  vtpm::PcrBank bank;
  for (const auto& seed : pcr0_seeds) {
    (void)bank.extend(0, seed);
  }
  for (const auto& event : log.events) {
    (void)bank.extend(boot::stage_pcr(event.stage), event.measurement);
  }
  return bank;
}

Verdict verify(const EvidenceBundle& bundle, const Golden& golden,
               const crypto::SymmetricKey& vm_key,
               const crypto::Certificate& trusted_root, ConstSpan nonce) {
  Verdict verdict;

  // (1) Endorsement certificate chain.
  auto chain_ok = crypto::verify_chain(bundle.ek_chain, trusted_root);
  if (!chain_ok.ok()) {
    verdict.failure = Failure::kChainOfCertsInvalid;
    verdict.detail = chain_ok.error().to_string();
    return verdict;
  }
  ConstSpan ek_public = bundle.ek_chain.back().subject_public_key;

  // (2) Quote signature, nonce freshness, counter expectation.
  if (bundle.quote.nonce.size() != nonce.size() ||
      !std::equal(bundle.quote.nonce.begin(), bundle.quote.nonce.end(),
                  nonce.begin())) {
    verdict.failure = Failure::kQuoteInvalid;
    verdict.detail = "quote nonce does not match the issued challenge";
    return verdict;
  }
  if (!crypto::verify_signature(ek_public, bundle.quote.signed_payload(),
                                bundle.quote.signature)) {
    verdict.failure = Failure::kQuoteInvalid;
    verdict.detail = "quote signature invalid under the certified EK";
    return verdict;
  }
  if (bundle.quote.counter != golden.expected_counter) {
    verdict.failure = Failure::kRollbackSuspected;
    verdict.detail = "quote counter " + std::to_string(bundle.quote.counter) +
                     ", expected " + std::to_string(golden.expected_counter);
    return verdict;
  }

  // (3) Event-log replay against the quoted composite. The PCR0 seed events
  // are recomputed from the VM key, not taken from the bundle.
  crypto::Digest binding = crypto::hmac(vm_key, bundle.binding_inputs);
  vtpm::PcrBank replayed =
      replay_log(bundle.event_log, {binding, bundle.init_measurement});
  auto composite = vtpm::pcr_composite(replayed, bundle.quote.pcr_selection);
  if (!composite.ok() || !(composite.value() == bundle.quote.pcr_composite)) {
    // Diagnose the divergence for a precise failure code.
    for (std::size_t i = 0;
         i < std::max(bundle.event_log.events.size(),
                      golden.boot_events.size());
         ++i) {
      if (i >= bundle.event_log.events.size() ||
          i >= golden.boot_events.size() ||
          !(bundle.event_log.events[i].measurement ==
            golden.boot_events[i].measurement) ||
          bundle.event_log.events[i].stage != golden.boot_events[i].stage) {
        verdict.failure = Failure::kBootEventMismatch;
        verdict.event_index = static_cast<int>(i);
        verdict.detail =
            "replay mismatch; event " + std::to_string(i) +
            " diverges from the golden list";
        return verdict;
      }
    }
    if (!(bundle.init_measurement == golden.init_measurement)) {
      verdict.failure = Failure::kInitMeasurementMismatch;
      verdict.detail = "replay mismatch; bundle init measurement diverges";
      return verdict;
    }
    verdict.failure = Failure::kBindingProofInvalid;
    verdict.detail =
        "replayed PCR bank does not match the quote; the quoted PCR0 chain "
        "was not seeded with hmac(vm_key, binding_inputs)";
    return verdict;
  }

  // (4) PCR0 prefix law against the golden init measurement.
  crypto::Digest expected_prefix = vtpm::extend_digest(
      vtpm::extend_digest(crypto::Digest::zero(), binding),
      golden.init_measurement);
  crypto::Digest replayed_prefix = vtpm::extend_digest(
      vtpm::extend_digest(crypto::Digest::zero(), binding),
      bundle.init_measurement);
  if (!(replayed_prefix == expected_prefix)) {
    verdict.failure = Failure::kBindingProofInvalid;
    verdict.detail = "PCR0 prefix does not equal extend(extend(zero, "
                     "binding), golden init)";
    return verdict;
  }

  // (5) Initialization measurement against golden.
  if (!(bundle.init_measurement == golden.init_measurement)) {
    verdict.failure = Failure::kInitMeasurementMismatch;
    verdict.detail = "init measurement does not match golden";
    return verdict;
  }

  // (6) Every boot event against the golden list.
  if (bundle.event_log.events.size() != golden.boot_events.size()) {
    verdict.failure = Failure::kBootEventMismatch;
    verdict.event_index = static_cast<int>(
        std::min(bundle.event_log.events.size(), golden.boot_events.size()));
    verdict.detail = "boot event count differs from golden";
    return verdict;
  }
  for (std::size_t i = 0; i < golden.boot_events.size(); ++i) {
    if (!(bundle.event_log.events[i].measurement ==
          golden.boot_events[i].measurement) ||
        bundle.event_log.events[i].stage != golden.boot_events[i].stage) {
      verdict.failure = Failure::kBootEventMismatch;
      verdict.event_index = static_cast<int>(i);
      verdict.detail = "boot event " + std::to_string(i) +
                       " does not match golden";
      return verdict;
    }
  }

  verdict.accepted = true;
  return verdict;
}

}  // namespace t3cvm::attest
