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

#include "t3cvm/common.hpp"

#include "t3cvm/encode.hpp"
#include "t3cvm/result.hpp"

namespace t3cvm {

namespace {
constexpr char kHexDigits[] = "0123456789abcdef";

int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}
}  // namespace

Bytes to_bytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

std::string to_string(ConstSpan data) {
  return std::string(reinterpret_cast<const char*>(data.data()), data.size());
}

std::string to_hex(ConstSpan data) {
  std::string out;
  out.reserve(data.size() * 2);
  for (std::uint8_t b : data) {
    out.push_back(kHexDigits[b >> 4]);
    out.push_back(kHexDigits[b & 0x0f]);
  }
  return out;
}

std::optional<Bytes> from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) return std::nullopt;
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = hex_nibble(hex[i]);
    int lo = hex_nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

Bytes concat(std::initializer_list<ConstSpan> parts) {
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  Bytes out;
  out.reserve(total);
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

const char* err_name(Err code) {
  switch (code) {
    case Err::kMalformed: return "Malformed";
    case Err::kAuthFailure: return "AuthFailure";
    case Err::kCertChainInvalid: return "CertChainInvalid";
    case Err::kPcrIndexOutOfRange: return "PcrIndexOutOfRange";
    case Err::kEmptySelection: return "EmptySelection";
    case Err::kBindingViolation: return "BindingViolation";
    case Err::kRollbackDetected: return "RollbackDetected";
    case Err::kMalformedState: return "MalformedState";
    case Err::kPlatformUntrusted: return "PlatformUntrusted";
    case Err::kInitMeasurementMismatch: return "InitMeasurementMismatch";
    case Err::kBootMeasurementMismatch: return "BootMeasurementMismatch";
    case Err::kLaunchAborted: return "LaunchAborted";
    case Err::kChannelAuthFailure: return "ChannelAuthFailure";
    case Err::kSequenceViolation: return "SequenceViolation";
    case Err::kRefused: return "Refused";
    case Err::kNotFound: return "NotFound";
    case Err::kAlreadyExists: return "AlreadyExists";
    case Err::kTimeout: return "Timeout";
    case Err::kUnavailable: return "Unavailable";
  }
  return "Unknown";
}

std::string Error::to_string() const {
  std::string out = err_name(code);
  if (step != 0) out += " (step " + std::to_string(step) + ")";
  if (!detail.empty()) out += ": " + detail;
  return out;
}

Encoder& Encoder::put_bytes(ConstSpan v) {
  std::uint32_t len = static_cast<std::uint32_t>(v.size());
  out_.push_back(static_cast<std::uint8_t>(len >> 24));
  out_.push_back(static_cast<std::uint8_t>(len >> 16));
  out_.push_back(static_cast<std::uint8_t>(len >> 8));
  out_.push_back(static_cast<std::uint8_t>(len));
  out_.insert(out_.end(), v.begin(), v.end());
  return *this;
}

Encoder& Encoder::put_str(std::string_view s) {
  return put_bytes(ConstSpan(reinterpret_cast<const std::uint8_t*>(s.data()),
                             s.size()));
}

Encoder& Encoder::put_u64(std::uint64_t v) {
  std::uint8_t buf[8];
  for (int i = 7; i >= 0; --i) {
    buf[i] = static_cast<std::uint8_t>(v & 0xff);
    v >>= 8;
  }
  return put_bytes(ConstSpan(buf, 8));
}

Encoder& Encoder::put_u8(std::uint8_t v) {
  return put_bytes(ConstSpan(&v, 1));
}

std::optional<ConstSpan> Decoder::field() {
  if (failed_) return std::nullopt;
  if (data_.size() - pos_ < 4) {
    failed_ = true;
    return std::nullopt;
  }
  std::uint32_t len = (static_cast<std::uint32_t>(data_[pos_]) << 24) |
                      (static_cast<std::uint32_t>(data_[pos_ + 1]) << 16) |
                      (static_cast<std::uint32_t>(data_[pos_ + 2]) << 8) |
                      static_cast<std::uint32_t>(data_[pos_ + 3]);
  pos_ += 4;
  if (data_.size() - pos_ < len) {
    failed_ = true;
    return std::nullopt;
  }
  ConstSpan out = data_.subspan(pos_, len);
  pos_ += len;
  return out;
}

std::optional<Bytes> Decoder::bytes() {
  auto f = field();
  if (!f) return std::nullopt;
  return Bytes(f->begin(), f->end());
}

std::optional<std::string> Decoder::str() {
  auto f = field();
  if (!f) return std::nullopt;
  return std::string(reinterpret_cast<const char*>(f->data()), f->size());
}

std::optional<std::uint64_t> Decoder::u64() {
  auto f = field();
  if (!f || f->size() != 8) {
    failed_ = true;
    return std::nullopt;
  }
  std::uint64_t v = 0;
  for (std::uint8_t b : *f) v = (v << 8) | b;
  return v;
}

std::optional<std::uint8_t> Decoder::u8() {
  auto f = field();
  if (!f || f->size() != 1) {
    failed_ = true;
    return std::nullopt;
  }
  return (*f)[0];
}

}  // namespace t3cvm
