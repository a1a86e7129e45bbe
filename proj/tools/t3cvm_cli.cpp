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

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "t3cvm/scenario.hpp"
#include "t3cvm/verifier.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitMismatch = 1;
constexpr int kExitInfrastructure = 2;

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

bool write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return false;
  out << content;
  return out.good();
}

int run_command(const std::string& scenario_path, const std::string& transport,
                const std::string& trace_path, const std::string& report_path,
                const std::string& artifacts_dir) {
  auto text = read_file(scenario_path);
  if (!text) {
    std::cerr << "cannot read scenario file: " << scenario_path << "\n";
    return kExitInfrastructure;
  }
  auto spec = t3cvm::sim::ScenarioSpec::from_json(*text);
  if (!spec.ok()) {
    std::cerr << spec.error().to_string() << "\n";
    return kExitInfrastructure;
  }
  if (!transport.empty()) spec.value().transport = transport;

  t3cvm::sim::Report report = t3cvm::sim::run_scenario(spec.value());
  std::cout << report.to_json() << "\n";

  if (!trace_path.empty() && report.node_trace) {
    std::ofstream out(trace_path, std::ios::binary | std::ios::trunc);
    if (!out) {
      std::cerr << "cannot write trace file: " << trace_path << "\n";
      return kExitInfrastructure;
    }
    report.node_trace->write_jsonl(out);
  }
  if (!report_path.empty() && !write_file(report_path, report.to_json())) {
    std::cerr << "cannot write report file: " << report_path << "\n";
    return kExitInfrastructure;
  }
  if (!artifacts_dir.empty() && !report.clean_launches.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(artifacts_dir, ec);
    const auto& last = report.clean_launches.back();
    bool ok = write_file(artifacts_dir + "/bundle.json", last.bundle.to_json());
    if (last.vm_key) {
      ok = ok && write_file(artifacts_dir + "/golden.json",
                            last.golden.to_json(*last.vm_key,
                                                last.trusted_root, last.nonce));
    }
    if (!ok) {
      std::cerr << "cannot write artifacts to " << artifacts_dir << "\n";
      return kExitInfrastructure;
    }
  }

  if (report.actual_code == "Infrastructure") return kExitInfrastructure;
  return report.pass ? kExitPass : kExitMismatch;
}

int verify_command(const std::string& bundle_path,
                   const std::string& golden_path) {
  auto bundle_text = read_file(bundle_path);
  auto golden_text = read_file(golden_path);
  if (!bundle_text || !golden_text) {
    std::cerr << "cannot read bundle or golden file\n";
    return kExitInfrastructure;
  }
  auto bundle = t3cvm::attest::EvidenceBundle::from_json(*bundle_text);
  if (!bundle.ok()) {
    std::cerr << bundle.error().to_string() << "\n";
    return kExitInfrastructure;
  }
  auto golden = t3cvm::attest::GoldenFile::from_json(*golden_text);
  if (!golden.ok()) {
    std::cerr << golden.error().to_string() << "\n";
    return kExitInfrastructure;
  }

  t3cvm::attest::Verdict verdict = t3cvm::attest::verify(
      bundle.value(), golden.value().golden, golden.value().vm_key,
      golden.value().trusted_root, golden.value().nonce);
  std::cout << "{\n  \"accepted\": " << (verdict.accepted ? "true" : "false")
            << ",\n  \"failure\": \"" << failure_name(verdict.failure)
            << "\",\n  \"detail\": \"" << verdict.detail << "\"\n}\n";
  return verdict.accepted ? kExitPass : kExitMismatch;
}

int bench_command(int reps, const std::string& json_path) {
  auto rows = t3cvm::sim::bench_tpm_commands(reps);
  std::cout << std::left << std::setw(20) << "command" << std::right
            << std::setw(14) << "wrapped(ms)" << std::setw(14)
            << "baseline(ms)" << "\n";
  for (const auto& row : rows) {
    std::cout << std::left << std::setw(20) << row.command << std::right
              << std::setw(14) << std::fixed << std::setprecision(4)
              << row.wrapped_ms << std::setw(14) << row.baseline_ms << "\n";
  }
  if (!json_path.empty() &&
      !write_file(json_path, t3cvm::sim::bench_to_json(rows))) {
    std::cerr << "cannot write bench json: " << json_path << "\n";
    return kExitInfrastructure;
  }
  return kExitPass;
}

int list_command() {
  for (const auto& builtin : t3cvm::sim::builtin_scenarios()) {
    std::cout << std::left << std::setw(26) << builtin.spec.name << "expect "
              << std::setw(26) << builtin.spec.expected_code << "covers";
    for (const auto& sr : builtin.covers) std::cout << " " << sr;
    std::cout << "\n";
  }
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trust-chain simulator for confidential VMs"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string transport;
  std::string trace_path;
  std::string report_path;
  std::string artifacts_dir;
  auto* run = app.add_subcommand("run", "Run a scripted scenario");
  run->add_option("--scenario", scenario_path, "Scenario JSON file")
      ->required();
  run->add_option("--transport", transport,
                  "Override the transport: tcp or local")
      ->check(CLI::IsMember({"tcp", "local"}));
  run->add_option("--trace", trace_path, "Write the node trace (JSON lines)");
  run->add_option("--report", report_path, "Write the run report (JSON)");
  run->add_option("--artifacts", artifacts_dir,
                  "Write bundle.json/golden.json of the last verified launch");

  std::string bundle_path;
  std::string golden_path;
  auto* verify = app.add_subcommand("verify", "Verify an evidence bundle");
  verify->add_option("--bundle", bundle_path, "Evidence bundle JSON file")
      ->required();
  verify->add_option("--golden", golden_path, "Golden values JSON file")
      ->required();

  int reps = 100;
  std::string bench_json;
  auto* bench = app.add_subcommand(
      "bench", "Measure TPM command latency, wrapped path vs baseline");
  bench->add_option("--reps", reps, "Repetitions per command");
  bench->add_option("--json", bench_json, "Write results as JSON");

  auto* list = app.add_subcommand("list", "List built-in scenarios");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    return run_command(scenario_path, transport, trace_path, report_path,
                       artifacts_dir);
  }
  if (verify->parsed()) return verify_command(bundle_path, golden_path);
  if (bench->parsed()) return bench_command(reps, bench_json);
  if (list->parsed()) return list_command();
  return kExitInfrastructure;
}
