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

#include <gtest/gtest.h>

#include <random>

#include "support/reference_digests.h"
#include "t3cvm/verifier.hpp"

namespace t3cvm::boot {
namespace {

Digest random_digest(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dist(0, 255);
  Digest d;
  for (auto& b : d.bytes) b = static_cast<std::uint8_t>(dist(rng));
  return d;
}

EventLog sample_log(std::mt19937_64& rng) {
  EventLog log;
  log.owner_id = "acvm-1";
  log.launch_nonce = {1, 2, 3, 4};
  Stage stages[] = {Stage::kUefi, Stage::kBootloader, Stage::kKernel,
                    Stage::kApplication};
  std::uint64_t seq = 1;
  for (Stage stage : stages) {
    log.events.push_back(
        BootEvent{seq++, stage, stage_name(stage), random_digest(rng)});
  }
  return log;
}

TEST(Measurement, StageLabelIsBoundIntoTheDigest) {
  Bytes content = to_bytes("identical bytes");
  EXPECT_EQ(measure_content(Stage::kKernel, content),
            measure_content(Stage::kKernel, content));
  EXPECT_NE(measure_content(Stage::kKernel, content),
            measure_content(Stage::kBootloader, content));
}

TEST(Mapping, StagePcrsAreTheDocumentedConstants) {
  EXPECT_EQ(stage_pcr(Stage::kUefi), 0);
  EXPECT_EQ(stage_pcr(Stage::kBootloader), 4);
  EXPECT_EQ(stage_pcr(Stage::kKernel), 8);
  EXPECT_EQ(stage_pcr(Stage::kApplication), 10);
}

TEST(Fold, MatchesIndependentReference) {
  std::mt19937_64 rng(3);
  std::vector<Digest> measurements;
  std::vector<refdig::Digest32> shadow;
  for (int i = 0; i < 16; ++i) {
    Digest d = random_digest(rng);
    measurements.push_back(d);
    refdig::Digest32 r;
    std::copy(d.bytes.begin(), d.bytes.end(), r.begin());
    shadow.push_back(r);
  }
  refdig::Digest32 expected = refdig::fold(shadow);
  EXPECT_EQ(fold_measurements(measurements).hex(),
            to_hex(ConstSpan(expected.data(), expected.size())));
}

TEST(Codec, BinaryRoundTrip) {
  std::mt19937_64 rng(5);
  EventLog log = sample_log(rng);
  auto decoded = EventLog::decode(log.encode());
  ASSERT_TRUE(decoded.ok());
  EXPECT_EQ(decoded.value(), log);
}

TEST(Codec, JsonRoundTrip) {
  std::mt19937_64 rng(7);
  EventLog log = sample_log(rng);
  auto decoded = EventLog::from_json(log.to_json());
  ASSERT_TRUE(decoded.ok());
  EXPECT_EQ(decoded.value(), log);
}

TEST(Codec, MalformedInputsAreTypedNotACrash) {
  EXPECT_FALSE(EventLog::decode(to_bytes("junk")).ok());
  EXPECT_FALSE(EventLog::from_json("{not json").ok());
  EXPECT_FALSE(EventLog::from_json("{\"owner_id\": 1}").ok());
}

TEST(Replay, EmptyLogWithoutSeedsIsAllZero) {
  EventLog log;
  vtpm::PcrBank bank = attest::replay_log(log, {});
  EXPECT_EQ(bank, vtpm::PcrBank());
}

TEST(Replay, SeedsLandInPcr0BeforeEvents) {
  std::mt19937_64 rng(9);
  Digest seed1 = random_digest(rng);
  Digest seed2 = random_digest(rng);
  EventLog log;
  log.events.push_back(BootEvent{1, Stage::kUefi, "fw", random_digest(rng)});

  vtpm::PcrBank bank = attest::replay_log(log, {seed1, seed2});
  vtpm::PcrBank manual;
  ASSERT_TRUE(manual.extend(0, seed1).ok());
  ASSERT_TRUE(manual.extend(0, seed2).ok());
  ASSERT_TRUE(manual.extend(0, log.events[0].measurement).ok());
  EXPECT_EQ(bank, manual);
}

TEST(Replay, PermutedLogProducesDifferentBank) {
  std::mt19937_64 rng(11);
  EventLog log = sample_log(rng);
  EventLog permuted = log;
  std::swap(permuted.events[1], permuted.events[2]);
  // Bootloader and kernel land in different registers, so the permutation
  // moves measurements across PCRs.
  EXPECT_FALSE(attest::replay_log(log, {}) == attest::replay_log(permuted, {}));
}

TEST(Replay, DroppedEventChangesTheBank) {
  std::mt19937_64 rng(13);
  EventLog log = sample_log(rng);
  EventLog shorter = log;
  shorter.events.pop_back();
  EXPECT_FALSE(attest::replay_log(log, {}) == attest::replay_log(shorter, {}));
}

}  // namespace
}  // namespace t3cvm::boot
