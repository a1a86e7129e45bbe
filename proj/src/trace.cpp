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

#include "t3cvm/trace.hpp"

#include <algorithm>

#include <json.hpp>

namespace t3cvm::trace {

void Trace::record(std::string actor, std::string event, DataClass data_class,
                   std::string summary, ConstSpan data) {
  double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
          .count();
  std::lock_guard<std::mutex> lock(mu_);
  events_.push_back(TraceEvent{elapsed, std::move(actor), std::move(event),
                               data_class, std::move(summary),
                               Bytes(data.begin(), data.end())});
}

std::vector<TraceEvent> Trace::snapshot() const {
  std::lock_guard<std::mutex> lock(mu_);
  return events_;
}

std::size_t Trace::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return events_.size();
}

bool Trace::contains_bytes(ConstSpan needle) const {
  if (needle.empty()) return false;
  std::lock_guard<std::mutex> lock(mu_);
  for (const auto& event : events_) {
    auto it = std::search(event.data.begin(), event.data.end(), needle.begin(),
                          needle.end());
    if (it != event.data.end()) return true;
  }
  return false;
}

void Trace::write_jsonl(std::ostream& out) const {
  std::lock_guard<std::mutex> lock(mu_);
  for (const auto& event : events_) {
    nlohmann::json j;
    j["time"] = event.time_s;
    j["actor"] = event.actor;
    j["event"] = event.event;
    j["data_class"] =
        event.data_class == DataClass::kPlaintext ? "plaintext" : "ciphertext";
    j["summary"] = event.summary;
    j["data_hex"] = to_hex(event.data);
    out << j.dump() << "\n";
  }
}

}  // namespace t3cvm::trace
