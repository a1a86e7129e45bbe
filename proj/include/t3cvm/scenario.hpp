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

#ifndef T3CVM_SCENARIO_HPP_
#define T3CVM_SCENARIO_HPP_

#include <memory>
#include <string>
#include <vector>

#include "t3cvm/cloud_node.hpp"
#include "t3cvm/result.hpp"
#include "t3cvm/trace.hpp"
#include "t3cvm/verifier.hpp"
#include "t3cvm/vtpm.hpp"

namespace t3cvm::sim {

// A scripted end-to-end run. `name` selects the scenario family (the
// protocol program); the other fields parameterize it.
struct ScenarioSpec {
  std::string name = "clean-boot";
  std::string transport = "local";  // "local" | "tcp"
  std::uint64_t image_seed = 0;     // 0: draw fresh randomness
  int launches = 1;                 // sequential launches of the target ACVM
  std::string expected_code = "ACCEPTED";
  cloud::AdversaryConfig adversary;  // filled by the family, overridable

  static Result<ScenarioSpec> from_json(std::string_view text);
  std::string to_json() const;
};

// Everything one verified launch leaves behind for oracles and reports.
struct LaunchArtifacts {
  attest::EvidenceBundle bundle;
  attest::Golden golden;
  Bytes nonce;
  std::optional<crypto::SymmetricKey> vm_key;
  crypto::Certificate trusted_root;
  attest::Verdict verdict;
  // The vTPM's raw extend history and the bank it implies.
  std::vector<vtpm::Vtpm::ExtendRecord> extend_records;
  vtpm::PcrBank replayed_bank;
};

struct Report {
  std::string scenario;
  std::string transport;
  std::string expected_code;
  std::string actual_code;
  std::string detail;
  bool custody_clean = false;
  bool pass = false;
  double wall_ms = 0;
  std::vector<std::pair<std::string, double>> phases;
  std::string audit_jsonl;
  std::vector<LaunchArtifacts> clean_launches;
  std::vector<std::uint64_t> counters_after_teardown;
  std::shared_ptr<trace::Trace> node_trace;

  std::string to_json() const;
};

// Runs one scenario end to end: builds the trust anchors, the cloud node
// and the manager, executes the family's protocol program, verifies
// evidence, swaps in the configured adversary behavior and scans the node
// trace for key custody violations.
Report run_scenario(const ScenarioSpec& spec);

// Canned scenario set with the security requirements each one exercises.
struct BuiltinScenario {
  ScenarioSpec spec;
  std::vector<std::string> covers;  // SR1..SR7 tags
};
const std::vector<BuiltinScenario>& builtin_scenarios();

// Mean latency per TPM command through the session-key wrapped channel path
// versus direct in-process dispatch. Reports values; asserts nothing.
struct BenchRow {
  std::string command;
  double wrapped_ms = 0;
  double baseline_ms = 0;
};
std::vector<BenchRow> bench_tpm_commands(int repetitions);
std::string bench_to_json(const std::vector<BenchRow>& rows);

}  // namespace t3cvm::sim

#endif  // T3CVM_SCENARIO_HPP_
