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

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include <cstring>
#include <stdexcept>

#include "t3cvm/encode.hpp"

namespace t3cvm::crypto {

namespace {

using EvpPkeyPtr = std::unique_ptr<EVP_PKEY, decltype(&EVP_PKEY_free)>;
using EvpMdCtxPtr = std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)>;
using EvpCipherCtxPtr =
    std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)>;
using EvpPkeyCtxPtr =
    std::unique_ptr<EVP_PKEY_CTX, decltype(&EVP_PKEY_CTX_free)>;

EvpPkeyPtr raw_private(int type, ConstSpan priv) {
  return EvpPkeyPtr(EVP_PKEY_new_raw_private_key(type, nullptr, priv.data(),
                                                 priv.size()),
                    EVP_PKEY_free);
}

EvpPkeyPtr raw_public(int type, ConstSpan pub) {
  return EvpPkeyPtr(
      EVP_PKEY_new_raw_public_key(type, nullptr, pub.data(), pub.size()),
      EVP_PKEY_free);
}

Bytes derive_public(int type, ConstSpan priv) {
  EvpPkeyPtr key = raw_private(type, priv);
  if (!key) throw std::runtime_error("raw private key construction failed");
  std::size_t len = 0;
  if (EVP_PKEY_get_raw_public_key(key.get(), nullptr, &len) != 1) {
    throw std::runtime_error("raw public key length query failed");
  }
  Bytes pub(len);
  if (EVP_PKEY_get_raw_public_key(key.get(), pub.data(), &len) != 1) {
    throw std::runtime_error("raw public key export failed");
  }
  pub.resize(len);
  return pub;
}

int evp_type_for(KeyPairRole role) {
  return role == KeyPairRole::kGodh ? EVP_PKEY_X25519 : EVP_PKEY_ED25519;
}

}  // namespace

const Digest& Digest::zero() {
  static const Digest z{};
  return z;
}

std::optional<Digest> Digest::from_bytes(ConstSpan data) {
  if (data.size() != kDigestSize) return std::nullopt;
  Digest d;
  std::memcpy(d.bytes.data(), data.data(), kDigestSize);
  return d;
}

std::optional<Digest> Digest::from_hex(std::string_view hex) {
  auto raw = t3cvm::from_hex(hex);
  if (!raw) return std::nullopt;
  return from_bytes(*raw);
}

std::string Digest::hex() const {
  return to_hex(span());
}

Digest hash(ConstSpan data) {
  Digest out;
  SHA256(data.data(), data.size(), out.bytes.data());
  return out;
}

const char* key_role_name(KeyRole role) {
  switch (role) {
    case KeyRole::kImageKey: return "ImageKey";
    case KeyRole::kMeasureKey: return "MeasureKey";
    case KeyRole::kVmKey: return "VmKey";
    case KeyRole::kSessionKey: return "SessionKey";
  }
  return "Unknown";
}

SymmetricKey SymmetricKey::generate(KeyRole role) {
  std::array<std::uint8_t, kSymmetricKeySize> b{};
  if (RAND_bytes(b.data(), static_cast<int>(b.size())) != 1) {
    throw std::runtime_error("RAND_bytes failed");
  }
  KeyMaterialRegistry::instance().add(ConstSpan(b.data(), b.size()));
  return SymmetricKey(role, b);
}

std::optional<SymmetricKey> SymmetricKey::from_bytes(KeyRole role,
                                                     ConstSpan raw) {
  if (raw.size() != kSymmetricKeySize) return std::nullopt;
  std::array<std::uint8_t, kSymmetricKeySize> b;
  std::memcpy(b.data(), raw.data(), kSymmetricKeySize);
  return SymmetricKey(role, b);
}

Digest hmac(const SymmetricKey& key, ConstSpan data) {
  Digest out;
  unsigned int len = 0;
  HMAC(EVP_sha256(), key.span().data(), static_cast<int>(key.span().size()),
       data.data(), data.size(), out.bytes.data(), &len);
  if (len != kDigestSize) throw std::runtime_error("unexpected HMAC length");
  return out;
}

Bytes aead_seal(const SymmetricKey& key, ConstSpan plaintext, ConstSpan aad) {
  Bytes nonce = random_bytes(kAeadNonceSize);
  EvpCipherCtxPtr ctx(EVP_CIPHER_CTX_new(), EVP_CIPHER_CTX_free);
  if (!ctx ||
      EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr,
                         nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN,
                          static_cast<int>(kAeadNonceSize), nullptr) != 1 ||
      EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.span().data(),
                         nonce.data()) != 1) {
    throw std::runtime_error("AEAD seal init failed");
  }
  int out_len = 0;
  if (!aad.empty() &&
      EVP_EncryptUpdate(ctx.get(), nullptr, &out_len, aad.data(),
                        static_cast<int>(aad.size())) != 1) {
    throw std::runtime_error("AEAD seal AAD failed");
  }
  Bytes ciphertext(plaintext.size());
  if (!plaintext.empty() &&
      EVP_EncryptUpdate(ctx.get(), ciphertext.data(), &out_len,
                        plaintext.data(),
                        static_cast<int>(plaintext.size())) != 1) {
    throw std::runtime_error("AEAD seal update failed");
  }
  int final_len = 0;
  if (EVP_EncryptFinal_ex(ctx.get(), ciphertext.data() + out_len,
                          &final_len) != 1) {
    throw std::runtime_error("AEAD seal final failed");
  }
  Bytes tag(kAeadTagSize);
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG,
                          static_cast<int>(kAeadTagSize), tag.data()) != 1) {
    throw std::runtime_error("AEAD tag export failed");
  }
  return concat({ConstSpan(nonce), ConstSpan(ciphertext), ConstSpan(tag)});
}

Result<Bytes> aead_open(const SymmetricKey& key, ConstSpan blob,
                        ConstSpan aad) {
  if (blob.size() < kAeadNonceSize + kAeadTagSize) {
    return {Err::kMalformed, "sealed blob shorter than nonce+tag"};
  }
  ConstSpan nonce = blob.subspan(0, kAeadNonceSize);
  ConstSpan tag = blob.subspan(blob.size() - kAeadTagSize);
  ConstSpan ciphertext =
      blob.subspan(kAeadNonceSize, blob.size() - kAeadNonceSize - kAeadTagSize);

  EvpCipherCtxPtr ctx(EVP_CIPHER_CTX_new(), EVP_CIPHER_CTX_free);
  if (!ctx ||
      EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr,
                         nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN,
                          static_cast<int>(kAeadNonceSize), nullptr) != 1 ||
      EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.span().data(),
                         nonce.data()) != 1) {
    throw std::runtime_error("AEAD open init failed");
  }
  int out_len = 0;
  if (!aad.empty() &&
      EVP_DecryptUpdate(ctx.get(), nullptr, &out_len, aad.data(),
                        static_cast<int>(aad.size())) != 1) {
    throw std::runtime_error("AEAD open AAD failed");
  }
  Bytes plaintext(ciphertext.size());
  if (!ciphertext.empty() &&
      EVP_DecryptUpdate(ctx.get(), plaintext.data(), &out_len,
                        ciphertext.data(),
                        static_cast<int>(ciphertext.size())) != 1) {
    return {Err::kAuthFailure, "AEAD decryption failed"};
  }
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG,
                          static_cast<int>(kAeadTagSize),
                          const_cast<std::uint8_t*>(tag.data())) != 1) {
    throw std::runtime_error("AEAD tag import failed");
  }
  int final_len = 0;
  if (EVP_DecryptFinal_ex(ctx.get(), plaintext.data() + out_len, &final_len) !=
      1) {
    return {Err::kAuthFailure, "AEAD authentication failed"};
  }
  return plaintext;
}

bool is_signing_role(KeyPairRole role) {
  return role != KeyPairRole::kGodh;
}

KeyPair::KeyPair(KeyPairRole role, Bytes priv, Bytes pub)
    : role_(role), private_(std::move(priv)), public_(std::move(pub)) {}

KeyPair KeyPair::generate(KeyPairRole role) {
  Bytes priv = random_bytes(32);
  Bytes pub = derive_public(evp_type_for(role), priv);
  return KeyPair(role, std::move(priv), std::move(pub));
}

std::optional<KeyPair> KeyPair::from_raw(KeyPairRole role, ConstSpan priv,
                                         ConstSpan pub) {
  if (priv.size() != 32 || pub.size() != 32) return std::nullopt;
  return KeyPair(role, Bytes(priv.begin(), priv.end()),
                 Bytes(pub.begin(), pub.end()));
}

Bytes KeyPair::sign(ConstSpan data) const {
  if (!is_signing_role(role_)) {
    throw std::logic_error("sign called on a key-agreement pair");
  }
  EvpPkeyPtr key = raw_private(EVP_PKEY_ED25519, private_);
  EvpMdCtxPtr ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!key || !ctx ||
      EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) !=
          1) {
    throw std::runtime_error("sign init failed");
  }
  std::size_t sig_len = 64;
  Bytes sig(sig_len);
  if (EVP_DigestSign(ctx.get(), sig.data(), &sig_len, data.data(),
                     data.size()) != 1) {
    throw std::runtime_error("sign failed");
  }
  sig.resize(sig_len);
  return sig;
}

SymmetricKey KeyPair::agree(ConstSpan peer_public, KeyRole derived_role,
                            ConstSpan context) const {
  if (role_ != KeyPairRole::kGodh) {
    throw std::logic_error("agree called on a signing pair");
  }
  Bytes shared = dh_shared(private_, peer_public);
  Encoder enc;
  enc.put_bytes(shared).put_bytes(context);
  Digest derived = hash(enc.view());
  KeyMaterialRegistry::instance().add(derived.span());
  auto key = SymmetricKey::from_bytes(derived_role, derived.span());
  return *key;
}

Bytes KeyPair::encode() const {
  Encoder enc;
  enc.put_u8(static_cast<std::uint8_t>(role_))
      .put_bytes(private_)
      .put_bytes(public_);
  return enc.take();
}

std::optional<KeyPair> KeyPair::decode(ConstSpan data) {
  Decoder dec(data);
  auto role = dec.u8();
  auto priv = dec.bytes();
  auto pub = dec.bytes();
  if (!role || !priv || !pub || !dec.done()) return std::nullopt;
  return from_raw(static_cast<KeyPairRole>(*role), *priv, *pub);
}

bool verify_signature(ConstSpan public_key, ConstSpan data,
                      ConstSpan signature) {
  if (public_key.size() != 32 || signature.size() != 64) return false;
  EvpPkeyPtr key = raw_public(EVP_PKEY_ED25519, public_key);
  if (!key) return false;
  EvpMdCtxPtr ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx ||
      EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) !=
          1) {
    return false;
  }
  return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(),
                          data.data(), data.size()) == 1;
}

EphemeralDh dh_generate() {
  Bytes priv = random_bytes(32);
  return EphemeralDh{priv, derive_public(EVP_PKEY_X25519, priv)};
}

Bytes dh_shared(ConstSpan private_key, ConstSpan peer_public) {
  EvpPkeyPtr mine = raw_private(EVP_PKEY_X25519, private_key);
  EvpPkeyPtr peer = raw_public(EVP_PKEY_X25519, peer_public);
  if (!mine || !peer) throw std::runtime_error("X25519 key import failed");
  EvpPkeyCtxPtr ctx(EVP_PKEY_CTX_new(mine.get(), nullptr), EVP_PKEY_CTX_free);
  std::size_t len = 0;
  if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 ||
      EVP_PKEY_derive_set_peer(ctx.get(), peer.get()) != 1 ||
      EVP_PKEY_derive(ctx.get(), nullptr, &len) != 1) {
    throw std::runtime_error("X25519 derive init failed");
  }
  Bytes shared(len);
  if (EVP_PKEY_derive(ctx.get(), shared.data(), &len) != 1) {
    throw std::runtime_error("X25519 derive failed");
  }
  shared.resize(len);
  return shared;
}

Bytes random_bytes(std::size_t n) {
  Bytes out(n);
  if (n > 0 && RAND_bytes(out.data(), static_cast<int>(n)) != 1) {
    throw std::runtime_error("RAND_bytes failed");
  }
  return out;
}

Bytes Certificate::canonical_body() const {
  Encoder enc;
  enc.put_str(subject).put_bytes(subject_public_key).put_str(issuer);
  return enc.take();
}

Bytes Certificate::encode() const {
  Encoder enc;
  enc.put_str(subject)
      .put_bytes(subject_public_key)
      .put_str(issuer)
      .put_bytes(signature);
  return enc.take();
}

std::optional<Certificate> Certificate::decode(ConstSpan data) {
  Decoder dec(data);
  auto subject = dec.str();
  auto pub = dec.bytes();
  auto issuer = dec.str();
  auto sig = dec.bytes();
  if (!subject || !pub || !issuer || !sig || !dec.done()) return std::nullopt;
  return Certificate{*subject, *pub, *issuer, *sig};
}

Certificate issue_certificate(const KeyPair& issuer_key,
                              const std::string& issuer_name,
                              const std::string& subject_name,
                              ConstSpan subject_public_key) {
  Certificate cert;
  cert.subject = subject_name;
  cert.subject_public_key =
      Bytes(subject_public_key.begin(), subject_public_key.end());
  cert.issuer = issuer_name;
  cert.signature = issuer_key.sign(cert.canonical_body());
  return cert;
}

Result<void> verify_chain(const std::vector<Certificate>& chain,
                          const Certificate& trusted_root) {
  if (chain.empty()) {
    return {Err::kCertChainInvalid, "empty chain", 0};
  }
  if (!(chain[0] == trusted_root)) {
    return {Err::kCertChainInvalid, "chain does not start at the trusted root",
            0};
  }
  if (chain[0].issuer != chain[0].subject ||
      !verify_signature(chain[0].subject_public_key,
                        chain[0].canonical_body(), chain[0].signature)) {
    return {Err::kCertChainInvalid, "trusted root is not validly self-signed",
            0};
  }
  for (std::size_t i = 1; i < chain.size(); ++i) {
    const Certificate& link = chain[i];
    const Certificate& parent = chain[i - 1];
    if (link.issuer != parent.subject ||
        !verify_signature(parent.subject_public_key, link.canonical_body(),
                          link.signature)) {
      return {Err::kCertChainInvalid,
              "signature verification failed at link " + std::to_string(i),
              static_cast<int>(i)};
    }
  }
  return {};
}

CertificateAuthority::CertificateAuthority(std::string name)
    : name_(std::move(name)),
      root_(KeyPair::generate(KeyPairRole::kCaRoot)),
      root_cert_(issue_certificate(root_, name_, name_, root_.public_key())) {}

Certificate CertificateAuthority::issue(const std::string& subject,
                                        ConstSpan subject_public) const {
  return issue_certificate(root_, name_, subject, subject_public);
}

KeyMaterialRegistry& KeyMaterialRegistry::instance() {
  static KeyMaterialRegistry* registry = new KeyMaterialRegistry();
  return *registry;
}

void KeyMaterialRegistry::add(ConstSpan key_bytes) {
  std::lock_guard<std::mutex> lock(mu_);
  keys_.emplace_back(key_bytes.begin(), key_bytes.end());
}

std::vector<Bytes> KeyMaterialRegistry::all() const {
  std::lock_guard<std::mutex> lock(mu_);
  return keys_;
}

void KeyMaterialRegistry::clear() {
  std::lock_guard<std::mutex> lock(mu_);
  keys_.clear();
}

}  // namespace t3cvm::crypto
