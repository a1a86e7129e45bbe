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

#include "t3cvm/event_log.hpp"

#include <json.hpp>

#include "t3cvm/encode.hpp"
#include "t3cvm/vtpm.hpp"

namespace t3cvm::boot {

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::kUefi: return "uefi";
    case Stage::kBootloader: return "bootloader";
    case Stage::kKernel: return "kernel";
    case Stage::kApplication: return "application";
  }
  return "unknown";
}

Result<Stage> stage_from_name(std::string_view name) {
  if (name == "uefi") return Stage::kUefi;
  if (name == "bootloader") return Stage::kBootloader;
  if (name == "kernel") return Stage::kKernel;
  if (name == "application") return Stage::kApplication;
  return {Err::kMalformed, "unknown stage '" + std::string(name) + "'"};
}

int stage_pcr(Stage stage) {
  switch (stage) {
    case Stage::kUefi: return 0;
    case Stage::kBootloader: return 4;
    case Stage::kKernel: return 8;
    case Stage::kApplication: return 10;
  }
  return 0;
}

Digest measure_content(Stage stage, ConstSpan content) {
  Encoder enc;
  enc.put_str(stage_name(stage)).put_bytes(content);
  return crypto::hash(enc.view());
}

Bytes EventLog::encode() const {
  Encoder enc;
  enc.put_str(owner_id).put_bytes(launch_nonce).put_u64(events.size());
  for (const auto& event : events) {
    enc.put_u64(event.sequence)
        .put_u8(static_cast<std::uint8_t>(event.stage))
        .put_str(event.description)
        .put_bytes(event.measurement.span());
  }
  return enc.take();
}

Result<EventLog> EventLog::decode(ConstSpan data) {
  Decoder dec(data);
  auto owner = dec.str();
  auto nonce = dec.bytes();
  auto count = dec.u64();
  if (!owner || !nonce || !count || *count > 65536) {
    return {Err::kMalformed, "bad event log header"};
  }
  EventLog log;
  log.owner_id = std::move(*owner);
  log.launch_nonce = std::move(*nonce);
  for (std::uint64_t i = 0; i < *count; ++i) {
    auto sequence = dec.u64();
    auto stage = dec.u8();
    auto description = dec.str();
    auto digest_bytes = dec.bytes();
    if (!sequence || !stage || !description || !digest_bytes) {
      return {Err::kMalformed, "truncated event log"};
    }
    if (*stage > static_cast<std::uint8_t>(Stage::kApplication)) {
      return {Err::kMalformed, "bad stage value"};
    }
    auto digest = Digest::from_bytes(*digest_bytes);
    if (!digest) return {Err::kMalformed, "bad event digest"};
    log.events.push_back(BootEvent{*sequence, static_cast<Stage>(*stage),
                                   std::move(*description), *digest});
  }
  if (!dec.done()) return {Err::kMalformed, "trailing event log bytes"};
  return log;
}

std::string EventLog::to_json() const {
  nlohmann::json j;
  j["owner_id"] = owner_id;
  j["launch_nonce"] = to_hex(launch_nonce);
  j["events"] = nlohmann::json::array();
  for (const auto& event : events) {
    j["events"].push_back({{"sequence", event.sequence},
                           {"stage", stage_name(event.stage)},
                           {"description", event.description},
                           {"measurement", event.measurement.hex()}});
  }
  return j.dump(2);
}

Result<EventLog> EventLog::from_json(std::string_view text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return {Err::kMalformed, "event log is not valid JSON"};
  }
  EventLog log;
  try {
    log.owner_id = j.at("owner_id").get<std::string>();
    auto nonce = from_hex(j.at("launch_nonce").get<std::string>());
    if (!nonce) return {Err::kMalformed, "bad launch nonce hex"};
    log.launch_nonce = std::move(*nonce);
    for (const auto& entry : j.at("events")) {
      BootEvent event;
      event.sequence = entry.at("sequence").get<std::uint64_t>();
      auto stage = stage_from_name(entry.at("stage").get<std::string>());
      if (!stage.ok()) return stage.error();
      event.stage = stage.value();
      event.description = entry.at("description").get<std::string>();
      auto digest =
          Digest::from_hex(entry.at("measurement").get<std::string>());
      if (!digest) return {Err::kMalformed, "bad measurement hex"};
      event.measurement = *digest;
      log.events.push_back(std::move(event));
    }
  } catch (const nlohmann::json::exception& e) {
    return {Err::kMalformed, std::string("event log JSON: ") + e.what()};
  }
  return log;
}

Digest fold_measurements(const std::vector<Digest>& measurements) {
  Digest acc = Digest::zero();
  for (const auto& m : measurements) {
    acc = vtpm::extend_digest(acc, m);
  }
  return acc;
}

}  // namespace t3cvm::boot
