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

#ifndef T3CVM_TRACE_HPP_
#define T3CVM_TRACE_HPP_

#include <chrono>
#include <mutex>
#include <ostream>
#include <string>
#include <vector>

#include "t3cvm/common.hpp"

namespace t3cvm::trace {

enum class DataClass { kPlaintext, kCiphertext };

struct TraceEvent {
  double time_s;
  std::string actor;
  std::string event;
  DataClass data_class;
  std::string summary;
  Bytes data;  // the raw bytes observed at this vantage point
};

// Thread-safe append-only scenario trace. Everything an untrusted vantage
// point observes is recorded here; the custody scan greps the recorded bytes
// for generated key material after each run.
class Trace {
 public:
  Trace() : start_(std::chrono::steady_clock::now()) {}

  void record(std::string actor, std::string event, DataClass data_class,
              std::string summary, ConstSpan data = {});

  std::vector<TraceEvent> snapshot() const;
  std::size_t size() const;

  // True if `needle` occurs as a byte substring of any recorded data.
  bool contains_bytes(ConstSpan needle) const;

  // One JSON object per line: {time, actor, event, data_class, summary,
  // data_hex}.
  void write_jsonl(std::ostream& out) const;

 private:
  std::chrono::steady_clock::time_point start_;
  mutable std::mutex mu_;
  std::vector<TraceEvent> events_;
};

}  // namespace t3cvm::trace

#endif  // T3CVM_TRACE_HPP_
