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

#include "t3cvm/crypto.hpp"

#include <gtest/gtest.h>

#include <random>

#include "support/reference_digests.h"
#include "t3cvm/encode.hpp"

namespace t3cvm::crypto {
namespace {

// Frozen with an independent reference hash tool (hashlib / RFC 4231).
constexpr char kEmptyInputSha256[] =
    "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855";
constexpr char kZero64Sha256[] =
    "f5a5fd42d16a20302798ef6ed309979b43003d2320d9f0e8ea9831a92759fb4b";
constexpr char kAbcSha256[] =
    "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad";
constexpr char kHmacRfc4231Tc1[] =
    "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7";
constexpr char kHmacRfc4231Tc2[] =
    "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843";

Bytes random_bytes_rng(std::mt19937_64& rng, std::size_t len) {
  std::uniform_int_distribution<int> dist(0, 255);
  Bytes out(len);
  for (auto& b : out) b = static_cast<std::uint8_t>(dist(rng));
  return out;
}

std::string ref_hex(const refdig::Digest32& digest) {
  return to_hex(ConstSpan(digest.data(), digest.size()));
}

TEST(Hash, EmptyInputMatchesFrozenReference) {
  EXPECT_EQ(hash({}).hex(), kEmptyInputSha256);
  EXPECT_EQ(ref_hex(refdig::sha256(nullptr, 0)), kEmptyInputSha256);
}

TEST(Hash, SixtyFourZeroBytesMatchesFrozenReference) {
  Bytes zeros(64, 0);
  EXPECT_EQ(hash(zeros).hex(), kZero64Sha256);
  EXPECT_EQ(ref_hex(refdig::sha256(zeros)), kZero64Sha256);
}

TEST(Hash, KnownVector) {
  Bytes abc = to_bytes("abc");
  EXPECT_EQ(hash(abc).hex(), kAbcSha256);
  EXPECT_EQ(ref_hex(refdig::sha256(abc)), kAbcSha256);
}

TEST(Hash, Deterministic) {
  Bytes data = to_bytes("the same input");
  EXPECT_EQ(hash(data), hash(data));
}

TEST(Hash, AgreesWithIndependentReferenceAcrossLengths) {
  std::mt19937_64 rng(7);
  for (std::size_t len : {std::size_t{0}, std::size_t{1}, std::size_t{63},
                          std::size_t{64}, std::size_t{65},
                          std::size_t{1000000}}) {
    Bytes data = random_bytes_rng(rng, len);
    EXPECT_EQ(hash(data).hex(), ref_hex(refdig::sha256(data)))
        << "length " << len;
    EXPECT_EQ(hash(data).bytes.size(), kDigestSize);
  }
}

TEST(Hash, AgreesWithIndependentReferenceOnRandomInputs) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> len_dist(0, 300);
  for (int i = 0; i < 1000; ++i) {
    Bytes data = random_bytes_rng(rng, len_dist(rng));
    ASSERT_EQ(hash(data).hex(), ref_hex(refdig::sha256(data)));
  }
}

TEST(Hmac, Rfc4231Vectors) {
  Bytes key1(20, 0x0b);
  auto k1 = SymmetricKey::from_bytes(KeyRole::kVmKey, hash(key1).span());
  // The spec key type is fixed 32 bytes; check the raw RFC vectors against
  // the reference implementation, and the library against the reference on
  // 32-byte keys.
  EXPECT_EQ(ref_hex(refdig::hmac_sha256(key1.data(), key1.size(),
                                        reinterpret_cast<const std::uint8_t*>(
                                            "Hi There"),
                                        8)),
            kHmacRfc4231Tc1);
  Bytes key2 = to_bytes("Jefe");
  Bytes msg2 = to_bytes("what do ya want for nothing?");
  EXPECT_EQ(ref_hex(refdig::hmac_sha256(key2.data(), key2.size(), msg2.data(),
                                        msg2.size())),
            kHmacRfc4231Tc2);
  ASSERT_TRUE(k1.has_value());
}

TEST(Hmac, AgreesWithIndependentReference) {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<std::size_t> len_dist(0, 200);
  for (int i = 0; i < 200; ++i) {
    SymmetricKey key = SymmetricKey::generate(KeyRole::kVmKey);
    Bytes data = random_bytes_rng(rng, len_dist(rng));
    Digest ours = hmac(key, data);
    refdig::Digest32 expected = refdig::hmac_sha256(
        key.span().data(), key.span().size(), data.data(), data.size());
    ASSERT_EQ(ours.hex(), ref_hex(expected));
  }
}

TEST(Hmac, DeterministicAndKeySeparated) {
  Bytes message = to_bytes("boot measurements encoding");
  SymmetricKey k1 = SymmetricKey::generate(KeyRole::kVmKey);
  SymmetricKey k2 = SymmetricKey::generate(KeyRole::kVmKey);
  EXPECT_EQ(hmac(k1, message), hmac(k1, message));
  EXPECT_NE(hmac(k1, message), hmac(k2, message));
}

TEST(Hmac, OutputAlwaysDigestSized) {
  std::mt19937_64 rng(17);
  SymmetricKey key = SymmetricKey::generate(KeyRole::kMeasureKey);
  for (std::size_t len : {std::size_t{0}, std::size_t{1}, std::size_t{63},
                          std::size_t{64}, std::size_t{65},
                          std::size_t{1000000}}) {
    EXPECT_EQ(hmac(key, random_bytes_rng(rng, len)).bytes.size(), kDigestSize);
  }
}

TEST(Aead, RoundTripAndAuthFailuresOnRandomInputs) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<std::size_t> len_dist(0, 256);
  for (int i = 0; i < 1000; ++i) {
    SymmetricKey key = SymmetricKey::generate(KeyRole::kSessionKey);
    SymmetricKey other = SymmetricKey::generate(KeyRole::kSessionKey);
    Bytes plaintext = random_bytes_rng(rng, len_dist(rng));
    Bytes aad = random_bytes_rng(rng, len_dist(rng) % 64);

    Bytes sealed = aead_seal(key, plaintext, aad);
    auto opened = aead_open(key, sealed, aad);
    ASSERT_TRUE(opened.ok());
    ASSERT_EQ(opened.value(), plaintext);

    Bytes wrong_aad = aad;
    wrong_aad.push_back(0x01);
    ASSERT_FALSE(aead_open(key, sealed, wrong_aad).ok());
    ASSERT_FALSE(aead_open(other, sealed, aad).ok());

    if (!sealed.empty()) {
      Bytes corrupted = sealed;
      corrupted[i % corrupted.size()] ^= 0x01;
      ASSERT_FALSE(aead_open(key, corrupted, aad).ok());
    }
  }
}

TEST(Aead, FreshNoncePerSeal) {
  SymmetricKey key = SymmetricKey::generate(KeyRole::kImageKey);
  Bytes plaintext = to_bytes("same plaintext");
  Bytes a = aead_seal(key, plaintext, {});
  Bytes b = aead_seal(key, plaintext, {});
  EXPECT_NE(a, b);
}

TEST(Aead, TruncatedBlobRejectedNotCrashed) {
  SymmetricKey key = SymmetricKey::generate(KeyRole::kVmKey);
  Bytes sealed = aead_seal(key, to_bytes("data"), {});
  for (std::size_t keep = 0; keep < kAeadNonceSize + kAeadTagSize; ++keep) {
    Bytes truncated(sealed.begin(), sealed.begin() + keep);
    EXPECT_FALSE(aead_open(key, truncated, {}).ok());
  }
}

TEST(Signature, RoundTripAcceptsAndBitFlipsReject) {
  KeyPair key = KeyPair::generate(KeyPairRole::kManagerRoot);
  Bytes message = to_bytes("certify this");
  Bytes signature = key.sign(message);
  EXPECT_TRUE(verify_signature(key.public_key(), message, signature));

  Bytes flipped_message = message;
  flipped_message[0] ^= 0x01;
  EXPECT_FALSE(verify_signature(key.public_key(), flipped_message, signature));

  Bytes flipped_signature = signature;
  flipped_signature[10] ^= 0x01;
  EXPECT_FALSE(verify_signature(key.public_key(), message, flipped_signature));

  KeyPair other = KeyPair::generate(KeyPairRole::kManagerRoot);
  EXPECT_FALSE(verify_signature(other.public_key(), message, signature));
}

TEST(Signature, MalformedSignatureRejectsWithoutCrash) {
  KeyPair key = KeyPair::generate(KeyPairRole::kTls);
  Bytes message = to_bytes("m");
  EXPECT_FALSE(verify_signature(key.public_key(), message, {}));
  EXPECT_FALSE(verify_signature(key.public_key(), message, Bytes(63, 0xaa)));
  EXPECT_FALSE(verify_signature(Bytes(5, 1), message, Bytes(64, 0)));
}

TEST(Certificates, ChainRootManagerTpmcvmAccepts) {
  KeyPair root = KeyPair::generate(KeyPairRole::kCaRoot);
  KeyPair manager = KeyPair::generate(KeyPairRole::kManagerRoot);
  KeyPair tpmcvm = KeyPair::generate(KeyPairRole::kTpmcvmRoot);

  Certificate root_cert =
      issue_certificate(root, "root", "root", root.public_key());
  Certificate manager_cert =
      issue_certificate(root, "root", "manager", manager.public_key());
  Certificate tpmcvm_cert =
      issue_certificate(manager, "manager", "tpmcvm", tpmcvm.public_key());

  std::vector<Certificate> chain = {root_cert, manager_cert, tpmcvm_cert};
  EXPECT_TRUE(verify_chain(chain, root_cert).ok());

  // Tampered middle certificate rejects at link 1.
  auto tampered = chain;
  tampered[1].subject_public_key[0] ^= 0x01;
  auto verdict = verify_chain(tampered, root_cert);
  ASSERT_FALSE(verdict.ok());
  EXPECT_EQ(verdict.error().code, Err::kCertChainInvalid);
  EXPECT_EQ(verdict.error().step, 1);
}

TEST(Certificates, EmptyChainRejected) {
  KeyPair root = KeyPair::generate(KeyPairRole::kCaRoot);
  Certificate root_cert =
      issue_certificate(root, "root", "root", root.public_key());
  EXPECT_FALSE(verify_chain({}, root_cert).ok());
}

TEST(Certificates, PermutedChainRejected) {
  KeyPair root = KeyPair::generate(KeyPairRole::kCaRoot);
  KeyPair manager = KeyPair::generate(KeyPairRole::kManagerRoot);
  KeyPair tpmcvm = KeyPair::generate(KeyPairRole::kTpmcvmRoot);
  Certificate root_cert =
      issue_certificate(root, "root", "root", root.public_key());
  std::vector<Certificate> chain = {
      root_cert, issue_certificate(root, "root", "manager", manager.public_key()),
      issue_certificate(manager, "manager", "tpmcvm", tpmcvm.public_key())};
  ASSERT_TRUE(verify_chain(chain, root_cert).ok());
  std::swap(chain[1], chain[2]);
  EXPECT_FALSE(verify_chain(chain, root_cert).ok());
}

TEST(Certificates, ChainMustStartAtTrustedRoot) {
  KeyPair root = KeyPair::generate(KeyPairRole::kCaRoot);
  KeyPair rogue = KeyPair::generate(KeyPairRole::kCaRoot);
  Certificate root_cert =
      issue_certificate(root, "root", "root", root.public_key());
  Certificate rogue_cert =
      issue_certificate(rogue, "rogue", "rogue", rogue.public_key());
  EXPECT_FALSE(verify_chain({rogue_cert}, root_cert).ok());
  EXPECT_TRUE(verify_chain({root_cert}, root_cert).ok());
}

TEST(Certificates, CodecRoundTrip) {
  KeyPair key = KeyPair::generate(KeyPairRole::kEndorsement);
  Certificate cert = issue_certificate(key, "issuer", "subject",
                                       key.public_key());
  auto decoded = Certificate::decode(cert.encode());
  ASSERT_TRUE(decoded.has_value());
  EXPECT_EQ(*decoded, cert);
}

TEST(KeyAgreement, BothSidesDeriveTheSameKey) {
  KeyPair godh = KeyPair::generate(KeyPairRole::kGodh);
  EphemeralDh platform = dh_generate();

  Bytes context = to_bytes("context");
  SymmetricKey owner_side =
      godh.agree(platform.public_key, KeyRole::kSessionKey, context);

  Bytes shared = dh_shared(platform.private_key, godh.public_key());
  Encoder enc;
  enc.put_bytes(shared).put_bytes(context);
  Digest expected = hash(enc.view());
  EXPECT_EQ(to_hex(owner_side.span()), expected.hex());
}

TEST(KeyAgreement, DistinctPeersDeriveDistinctKeys) {
  KeyPair godh = KeyPair::generate(KeyPairRole::kGodh);
  EphemeralDh p1 = dh_generate();
  EphemeralDh p2 = dh_generate();
  Bytes context = to_bytes("c");
  EXPECT_NE(
      to_hex(godh.agree(p1.public_key, KeyRole::kSessionKey, context).span()),
      to_hex(godh.agree(p2.public_key, KeyRole::kSessionKey, context).span()));
}

TEST(Keys, RolesAreImmutableAndMaterialIsFresh) {
  SymmetricKey a = SymmetricKey::generate(KeyRole::kVmKey);
  SymmetricKey b = SymmetricKey::generate(KeyRole::kVmKey);
  EXPECT_EQ(a.role(), KeyRole::kVmKey);
  EXPECT_NE(to_hex(a.span()), to_hex(b.span()));

  KeyPair p = KeyPair::generate(KeyPairRole::kGodh);
  KeyPair q = KeyPair::generate(KeyPairRole::kGodh);
  EXPECT_EQ(p.role(), KeyPairRole::kGodh);
  EXPECT_NE(to_hex(p.public_key()), to_hex(q.public_key()));
}

TEST(Keys, GeneratedMaterialIsRegisteredForCustodyScans) {
  SymmetricKey key = SymmetricKey::generate(KeyRole::kImageKey);
  bool found = false;
  for (const auto& entry : KeyMaterialRegistry::instance().all()) {
    if (ConstSpan(entry).size() == key.span().size() &&
        std::equal(entry.begin(), entry.end(), key.span().begin())) {
      found = true;
      break;
    }
  }
  EXPECT_TRUE(found);
}

}  // namespace
}  // namespace t3cvm::crypto
