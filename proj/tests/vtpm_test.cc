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

#include "t3cvm/vtpm.hpp"

#include <gtest/gtest.h>

#include <random>

#include "support/reference_digests.h"
#include "t3cvm/tpm_commands.hpp"

namespace t3cvm::vtpm {
namespace {

// hash(64 zero bytes), frozen with an independent reference hash tool.
constexpr char kZero64Sha256[] =
    "f5a5fd42d16a20302798ef6ed309979b43003d2320d9f0e8ea9831a92759fb4b";

Digest random_digest(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dist(0, 255);
  Digest d;
  for (auto& b : d.bytes) b = static_cast<std::uint8_t>(dist(rng));
  return d;
}

refdig::Digest32 as_ref(const Digest& d) {
  refdig::Digest32 out;
  std::copy(d.bytes.begin(), d.bytes.end(), out.begin());
  return out;
}

TpmStateFile sample_state(const std::string& vtpm_id, std::uint64_t counter) {
  crypto::KeyPair root = crypto::KeyPair::generate(crypto::KeyPairRole::kTpmcvmRoot);
  Vtpm tpm = Vtpm::create(root, "issuer", vtpm_id);
  TpmStateFile state = tpm.state();
  state.counter.value = counter;
  state.persistent_objects["user-data"] = to_bytes("opaque");
  return state;
}

TEST(PcrBank, InitialRegistersAreZeroAndExtendMatchesFrozenConstant) {
  PcrBank bank;
  for (int i = 0; i < kNumPcrs; ++i) {
    EXPECT_EQ(bank.read(i).value(), Digest::zero());
  }
  ASSERT_TRUE(bank.extend(0, Digest::zero()).ok());
  EXPECT_EQ(bank.read(0).value().hex(), kZero64Sha256);
  for (int i = 1; i < kNumPcrs; ++i) {
    EXPECT_EQ(bank.read(i).value(), Digest::zero());
  }
}

TEST(PcrBank, ExtendOrderMatters) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    Digest a = random_digest(rng);
    Digest b = random_digest(rng);
    if (a == b) continue;
    PcrBank ab;
    PcrBank ba;
    ASSERT_TRUE(ab.extend(5, a).ok());
    ASSERT_TRUE(ab.extend(5, b).ok());
    ASSERT_TRUE(ba.extend(5, b).ok());
    ASSERT_TRUE(ba.extend(5, a).ok());
    ASSERT_NE(ab.read(5).value(), ba.read(5).value());
  }
}

TEST(PcrBank, OutOfRangeIndexRejected) {
  PcrBank bank;
  EXPECT_EQ(bank.extend(kNumPcrs, Digest::zero()).error().code,
            Err::kPcrIndexOutOfRange);
  EXPECT_EQ(bank.extend(-1, Digest::zero()).error().code,
            Err::kPcrIndexOutOfRange);
  EXPECT_FALSE(bank.read(kNumPcrs).ok());
}

TEST(PcrBank, ExtendAgreesWithIndependentChainOracle) {
  std::mt19937_64 rng(5);
  PcrBank bank;
  refdig::Digest32 shadow{};
  for (int i = 0; i < 50; ++i) {
    Digest m = random_digest(rng);
    ASSERT_TRUE(bank.extend(7, m).ok());
    shadow = refdig::chain(shadow, as_ref(m));
  }
  EXPECT_EQ(bank.read(7).value().hex(),
            to_hex(ConstSpan(shadow.data(), shadow.size())));
}

TEST(Composite, EmptySelectionRejected) {
  PcrBank bank;
  EXPECT_EQ(pcr_composite(bank, {}).error().code, Err::kEmptySelection);
}

TEST(Composite, SelectionIsOrderInsensitiveAndDeduplicated) {
  std::mt19937_64 rng(9);
  PcrBank bank;
  ASSERT_TRUE(bank.extend(1, random_digest(rng)).ok());
  ASSERT_TRUE(bank.extend(2, random_digest(rng)).ok());
  EXPECT_EQ(pcr_composite(bank, {1, 2}).value(),
            pcr_composite(bank, {2, 1, 1}).value());
}

TEST(StateFile, CodecRoundTrip) {
  TpmStateFile state = sample_state("vtpm-1", 4);
  auto decoded = TpmStateFile::decode(state.encode());
  ASSERT_TRUE(decoded.ok());
  EXPECT_EQ(decoded.value().encode(), state.encode());
  EXPECT_EQ(decoded.value().vtpm_id, "vtpm-1");
  EXPECT_EQ(decoded.value().counter.value, 4u);
}

TEST(StateFile, TruncatedDecodingIsTypedNotACrash) {
  TpmStateFile state = sample_state("vtpm-1", 1);
  Bytes encoded = state.encode();
  for (std::size_t keep : {std::size_t{0}, std::size_t{3}, encoded.size() / 2,
                           encoded.size() - 1}) {
    Bytes truncated(encoded.begin(), encoded.begin() + keep);
    auto decoded = TpmStateFile::decode(truncated);
    ASSERT_FALSE(decoded.ok());
    EXPECT_EQ(decoded.error().code, Err::kMalformedState);
  }
}

TEST(Sealing, RoundTripIsIdentity) {
  crypto::SymmetricKey key = crypto::SymmetricKey::generate(crypto::KeyRole::kVmKey);
  TpmStateFile state = sample_state("vtpm-a", 3);
  Bytes blob = seal_state(state, key, "acvm-a", 3);
  auto opened = unseal_state(blob, key, "acvm-a", 3);
  ASSERT_TRUE(opened.ok());
  EXPECT_EQ(opened.value().encode(), state.encode());
}

TEST(Sealing, WrongIdentityIsBindingViolation) {
  crypto::SymmetricKey key = crypto::SymmetricKey::generate(crypto::KeyRole::kVmKey);
  TpmStateFile state = sample_state("vtpm-a", 0);
  Bytes blob = seal_state(state, key, "acvm-a", 0);
  auto opened = unseal_state(blob, key, "acvm-b", 0);
  ASSERT_FALSE(opened.ok());
  EXPECT_EQ(opened.error().code, Err::kBindingViolation);
}

TEST(Sealing, WrongKeyIsBindingViolation) {
  crypto::SymmetricKey key = crypto::SymmetricKey::generate(crypto::KeyRole::kVmKey);
  crypto::SymmetricKey other = crypto::SymmetricKey::generate(crypto::KeyRole::kVmKey);
  TpmStateFile state = sample_state("vtpm-a", 0);
  Bytes blob = seal_state(state, key, "acvm-a", 0);
  auto opened = unseal_state(blob, other, "acvm-a", 0);
  ASSERT_FALSE(opened.ok());
  EXPECT_EQ(opened.error().code, Err::kBindingViolation);
}

TEST(Sealing, StaleCounterIsRollbackDetected) {
  crypto::SymmetricKey key = crypto::SymmetricKey::generate(crypto::KeyRole::kVmKey);
  TpmStateFile state = sample_state("vtpm-a", 4);
  Bytes old_blob = seal_state(state, key, "acvm-a", 4);
  auto opened = unseal_state(old_blob, key, "acvm-a", 5);
  ASSERT_FALSE(opened.ok());
  EXPECT_EQ(opened.error().code, Err::kRollbackDetected);
}

TEST(Sealing, FutureCounterIsAlsoRollbackDetected) {
  crypto::SymmetricKey key = crypto::SymmetricKey::generate(crypto::KeyRole::kVmKey);
  TpmStateFile state = sample_state("vtpm-a", 6);
  Bytes blob = seal_state(state, key, "acvm-a", 6);
  auto opened = unseal_state(blob, key, "acvm-a", 2);
  ASSERT_FALSE(opened.ok());
  EXPECT_EQ(opened.error().code, Err::kRollbackDetected);
}

TEST(Sealing, TruncatedBlobIsTypedNotACrash) {
  crypto::SymmetricKey key = crypto::SymmetricKey::generate(crypto::KeyRole::kVmKey);
  TpmStateFile state = sample_state("vtpm-a", 0);
  Bytes blob = seal_state(state, key, "acvm-a", 0);
  for (std::size_t keep : {std::size_t{0}, std::size_t{1}, std::size_t{12},
                           blob.size() / 2}) {
    Bytes truncated(blob.begin(), blob.begin() + keep);
    auto opened = unseal_state(truncated, key, "acvm-a", 0);
    ASSERT_FALSE(opened.ok());
    EXPECT_TRUE(opened.error().code == Err::kMalformedState ||
                opened.error().code == Err::kBindingViolation);
  }
}

TEST(Sealing, UnknownVersionByteRejected) {
  crypto::SymmetricKey key = crypto::SymmetricKey::generate(crypto::KeyRole::kVmKey);
  Bytes blob = seal_state(sample_state("v", 0), key, "acvm-a", 0);
  blob[0] = 0x7f;
  auto opened = unseal_state(blob, key, "acvm-a", 0);
  ASSERT_FALSE(opened.ok());
  EXPECT_EQ(opened.error().code, Err::kMalformedState);
}

// Any single-field perturbation of (key, id, counter) produces a typed
// failure, never silent wrong data.
TEST(Sealing, SingleFieldPerturbationProperty) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 50; ++i) {
    crypto::SymmetricKey key = crypto::SymmetricKey::generate(crypto::KeyRole::kVmKey);
    std::uint64_t counter = rng() % 32;
    std::string id = "acvm-" + std::to_string(rng() % 1000);
    TpmStateFile state = sample_state("vtpm-x", counter);
    Bytes blob = seal_state(state, key, id, counter);

    ASSERT_TRUE(unseal_state(blob, key, id, counter).ok());

    auto wrong_key = unseal_state(
        blob, crypto::SymmetricKey::generate(crypto::KeyRole::kVmKey), id,
        counter);
    ASSERT_EQ(wrong_key.error().code, Err::kBindingViolation);

    auto wrong_id = unseal_state(blob, key, id + "-other", counter);
    ASSERT_EQ(wrong_id.error().code, Err::kBindingViolation);

    auto wrong_counter = unseal_state(blob, key, id, counter + 1 + rng() % 8);
    ASSERT_EQ(wrong_counter.error().code, Err::kRollbackDetected);
  }
}

TEST(Sealing, CrossBindingMatrixThreeAcvms) {
  const std::vector<std::string> ids = {"acvm-a", "acvm-b", "acvm-c"};
  std::vector<crypto::SymmetricKey> keys;
  std::vector<Bytes> blobs;
  for (const auto& id : ids) {
    keys.push_back(crypto::SymmetricKey::generate(crypto::KeyRole::kVmKey));
    blobs.push_back(seal_state(sample_state("vtpm-" + id, 1), keys.back(), id, 1));
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = 0; j < ids.size(); ++j) {
      auto opened = unseal_state(blobs[i], keys[j], ids[j], 1);
      if (i == j) {
        EXPECT_TRUE(opened.ok()) << i << "," << j;
      } else {
        ASSERT_FALSE(opened.ok()) << i << "," << j;
        EXPECT_EQ(opened.error().code, Err::kBindingViolation);
      }
    }
  }
}

TEST(Quote, RoundTripVerifies) {
  crypto::KeyPair root = crypto::KeyPair::generate(crypto::KeyPairRole::kTpmcvmRoot);
  Vtpm tpm = Vtpm::create(root, "issuer", "vtpm-1");
  std::mt19937_64 rng(31);
  ASSERT_TRUE(tpm.pcr_extend(0, random_digest(rng)).ok());
  ASSERT_TRUE(tpm.pcr_extend(4, random_digest(rng)).ok());

  Bytes nonce = crypto::random_bytes(16);
  auto quote = tpm.make_quote({0, 4, 8}, nonce);
  ASSERT_TRUE(quote.ok());
  EXPECT_TRUE(verify_quote(quote.value(),
                           tpm.state().endorsement_key.public_key(),
                           tpm.bank(), nonce)
                  .ok());
}

TEST(Quote, ExtraExtendAfterQuoteRejects) {
  crypto::KeyPair root = crypto::KeyPair::generate(crypto::KeyPairRole::kTpmcvmRoot);
  Vtpm tpm = Vtpm::create(root, "issuer", "vtpm-1");
  Bytes nonce = crypto::random_bytes(16);
  auto quote = tpm.make_quote({0}, nonce);
  ASSERT_TRUE(quote.ok());
  std::mt19937_64 rng(33);
  ASSERT_TRUE(tpm.pcr_extend(0, random_digest(rng)).ok());
  EXPECT_FALSE(verify_quote(quote.value(),
                            tpm.state().endorsement_key.public_key(),
                            tpm.bank(), nonce)
                   .ok());
}

TEST(Quote, ReusedQuoteFailsFreshNonce) {
  crypto::KeyPair root = crypto::KeyPair::generate(crypto::KeyPairRole::kTpmcvmRoot);
  Vtpm tpm = Vtpm::create(root, "issuer", "vtpm-1");
  auto quote = tpm.make_quote({0}, crypto::random_bytes(16));
  ASSERT_TRUE(quote.ok());
  Bytes fresh_nonce = crypto::random_bytes(16);
  EXPECT_FALSE(verify_quote(quote.value(),
                            tpm.state().endorsement_key.public_key(),
                            tpm.bank(), fresh_nonce)
                   .ok());
}

TEST(Quote, EmptySelectionRejected) {
  crypto::KeyPair root = crypto::KeyPair::generate(crypto::KeyPairRole::kTpmcvmRoot);
  Vtpm tpm = Vtpm::create(root, "issuer", "vtpm-1");
  EXPECT_EQ(tpm.make_quote({}, crypto::random_bytes(8)).error().code,
            Err::kEmptySelection);
}

TEST(Quote, CodecRoundTrip) {
  crypto::KeyPair root = crypto::KeyPair::generate(crypto::KeyPairRole::kTpmcvmRoot);
  Vtpm tpm = Vtpm::create(root, "issuer", "vtpm-1");
  auto quote = tpm.make_quote({0, 1, 2}, crypto::random_bytes(12));
  ASSERT_TRUE(quote.ok());
  auto decoded = Quote::decode(quote.value().encode());
  ASSERT_TRUE(decoded.ok());
  EXPECT_EQ(decoded.value().encode(), quote.value().encode());
}

TEST(VtpmLifecycle, FreshInstanceHasZeroPcrsCounterZeroAndCertifiedEk) {
  crypto::KeyPair root = crypto::KeyPair::generate(crypto::KeyPairRole::kTpmcvmRoot);
  crypto::Certificate root_cert =
      crypto::issue_certificate(root, "tpmcvm-1", "tpmcvm-1", root.public_key());
  Vtpm tpm = Vtpm::create(root, "tpmcvm-1", "vtpm-for-acvm-1");

  EXPECT_EQ(tpm.pcr_read(0).value(), Digest::zero());
  EXPECT_EQ(tpm.counter(), 0u);
  EXPECT_TRUE(crypto::verify_chain(
                  {root_cert, tpm.state().endorsement_cert}, root_cert)
                  .ok());

  Vtpm second = Vtpm::create(root, "tpmcvm-1", "vtpm-for-acvm-2");
  EXPECT_NE(to_hex(tpm.state().endorsement_key.public_key()),
            to_hex(second.state().endorsement_key.public_key()));
}

TEST(VtpmLifecycle, PersistentKeysSurviveSealRestore) {
  crypto::KeyPair root = crypto::KeyPair::generate(crypto::KeyPairRole::kTpmcvmRoot);
  crypto::SymmetricKey vm_key = crypto::SymmetricKey::generate(crypto::KeyRole::kVmKey);
  Vtpm tpm = Vtpm::create(root, "issuer", "vtpm-1");
  std::string handle = tpm.create_signing_key();
  Bytes message = to_bytes("persistent signing");
  Bytes signature = tpm.sign_with_key(handle, message).value();

  tpm.bump_counter();
  Bytes blob = seal_state(tpm.state(), vm_key, "acvm-1", 1);

  auto restored_state = unseal_state(blob, vm_key, "acvm-1", 1);
  ASSERT_TRUE(restored_state.ok());
  Vtpm restored = Vtpm::from_state(restored_state.take());
  EXPECT_TRUE(restored.verify_with_key(handle, message, signature).value());
  // The PCR bank does not persist; it is rebuilt by the launch protocol.
  EXPECT_EQ(restored.pcr_read(0).value(), Digest::zero());
}

TEST(Dispatch, CommandSurfaceBehaves) {
  crypto::KeyPair root = crypto::KeyPair::generate(crypto::KeyPairRole::kTpmcvmRoot);
  crypto::Certificate root_cert =
      crypto::issue_certificate(root, "r", "r", root.public_key());
  Vtpm tpm = Vtpm::create(root, "r", "vtpm-1");
  std::vector<crypto::Certificate> chain = {root_cert,
                                            tpm.state().endorsement_cert};

  auto roundtrip = [&](const Bytes& cmd) {
    return tpm_cmd::parse_response(tpm_cmd::dispatch(tpm, chain, cmd));
  };

  auto random_payload = roundtrip(tpm_cmd::encode_get_random(16));
  ASSERT_TRUE(random_payload.ok());
  EXPECT_EQ(tpm_cmd::parse_bytes_payload(random_payload.value()).value().size(),
            16u);

  std::mt19937_64 rng(41);
  Digest m = random_digest(rng);
  ASSERT_TRUE(roundtrip(tpm_cmd::encode_pcr_extend(4, m, "test")).ok());
  auto read_back = roundtrip(tpm_cmd::encode_pcr_read(4));
  ASSERT_TRUE(read_back.ok());
  EXPECT_EQ(tpm_cmd::parse_digest_payload(read_back.value()).value(),
            extend_digest(Digest::zero(), m));

  auto bad_index = roundtrip(tpm_cmd::encode_pcr_extend(99, m, ""));
  ASSERT_FALSE(bad_index.ok());
  EXPECT_EQ(bad_index.error().code, Err::kPcrIndexOutOfRange);

  auto garbage = tpm_cmd::parse_response(
      tpm_cmd::dispatch(tpm, chain, to_bytes("not a command")));
  EXPECT_FALSE(garbage.ok());

  auto chain_payload = roundtrip(tpm_cmd::encode_get_ek_chain());
  ASSERT_TRUE(chain_payload.ok());
  auto parsed_chain = tpm_cmd::parse_ek_chain_payload(chain_payload.value());
  ASSERT_TRUE(parsed_chain.ok());
  EXPECT_EQ(parsed_chain.value().size(), 2u);

  auto view_payload = roundtrip(tpm_cmd::encode_get_boot_view());
  ASSERT_TRUE(view_payload.ok());
  auto records = tpm_cmd::parse_boot_view_payload(view_payload.value());
  ASSERT_TRUE(records.ok());
  ASSERT_EQ(records.value().size(), 1u);
  EXPECT_EQ(records.value()[0].pcr, 4);
}

}  // namespace
}  // namespace t3cvm::vtpm
