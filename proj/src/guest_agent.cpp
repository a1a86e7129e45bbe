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

#include "t3cvm/guest_agent.hpp"

namespace t3cvm::agent {

GuestAgent::GuestAgent(Mode mode, std::string owner_id) : mode_(mode) {
  log_.owner_id = std::move(owner_id);
  log_.launch_nonce = crypto::random_bytes(16);
}

Result<boot::BootEvent> GuestAgent::measure_stage(
    boot::Stage stage, ConstSpan content, std::string_view description) {
  if (boot_complete_) {
    return {Err::kRefused, "boot already complete"};
  }
  if (last_stage_ && stage < *last_stage_) {
    return {Err::kRefused,
            std::string("stage '") + boot::stage_name(stage) +
                "' measured after '" + boot::stage_name(*last_stage_) + "'"};
  }
  last_stage_ = stage;
  boot::BootEvent event;
  event.sequence = log_.events.size() + 1;
  event.stage = stage;
  event.description = std::string(description);
  event.measurement = boot::measure_content(stage, content);
  log_.events.push_back(event);
  return event;
}

Result<net::Frame> GuestAgent::seal_event(
    const boot::BootEvent& event, const crypto::SymmetricKey& measure_key) {
  if (mode_ != Mode::kTpmcvm) {
    return {Err::kRefused, "measurement streaming is CN-TPMCVM mode only"};
  }
  stream_seq_ = event.sequence;
  wire::SealedEnvelope envelope;
  envelope.sender_id = log_.owner_id;
  envelope.sequence = event.sequence;
  wire::MeasureEventBody body{event.stage, event.description,
                              event.measurement};
  envelope.blob = crypto::aead_seal(
      measure_key, body.encode(),
      wire::envelope_aad("measure-event", log_.owner_id, event.sequence));
  return net::Frame{static_cast<std::uint8_t>(wire::FrameType::kMeasureEvent),
                    net::kWireVersion, envelope.encode()};
}

net::Frame GuestAgent::seal_boot_complete(
    const crypto::SymmetricKey& measure_key) {
  std::uint64_t seq = stream_seq_ + 1;
  wire::SealedEnvelope envelope;
  envelope.sender_id = log_.owner_id;
  envelope.sequence = seq;
  wire::BootCompleteBody body{log_.events.size()};
  envelope.blob = crypto::aead_seal(
      measure_key, body.encode(),
      wire::envelope_aad("boot-complete", log_.owner_id, seq));
  return net::Frame{static_cast<std::uint8_t>(wire::FrameType::kBootComplete),
                    net::kWireVersion, envelope.encode()};
}

void GuestAgent::install_session_key(crypto::SymmetricKey key) {
  session_key_.emplace(std::move(key));
}

Result<net::Frame> GuestAgent::wrap_command(ConstSpan raw_command) {
  if (!session_key_) {
    return {Err::kRefused, "no session key installed"};
  }
  std::uint64_t seq = ++command_seq_;
  awaiting_seq_ = seq;
  wire::WrappedFrameBody body;
  body.acvm_id = log_.owner_id;
  body.direction = wire::kDirCommand;
  body.sequence = seq;
  body.blob = crypto::aead_seal(
      *session_key_, raw_command,
      wire::wrapped_aad(log_.owner_id, wire::kDirCommand, seq));
  return net::Frame{static_cast<std::uint8_t>(wire::FrameType::kWrappedCmd),
                    net::kWireVersion, body.encode()};
}

Result<Bytes> GuestAgent::unwrap_response(const net::Frame& frame) {
  if (!session_key_) {
    return {Err::kRefused, "no session key installed"};
  }
  if (frame.type != static_cast<std::uint8_t>(wire::FrameType::kWrappedResp)) {
    return {Err::kChannelAuthFailure, "not a wrapped response frame"};
  }
  auto body = wire::WrappedFrameBody::decode(frame.payload);
  if (!body.ok()) {
    return {Err::kChannelAuthFailure, "malformed wrapped response"};
  }
  // The AAD is rebuilt from this agent's own identity and the sequence it is
  // waiting on; claimed header fields carry no authority.
  auto opened = crypto::aead_open(
      *session_key_, body.value().blob,
      wire::wrapped_aad(log_.owner_id, wire::kDirResponse, awaiting_seq_));
  if (!opened.ok()) {
    return {Err::kChannelAuthFailure,
            "response integrity check failed (replayed or cross-session)"};
  }
  return opened;
}

Result<boot::EventLog> GuestAgent::export_event_log() const {
  if (!boot_complete_) {
    return {Err::kRefused, "boot still in progress"};
  }
  return log_;
}

}  // namespace t3cvm::agent
