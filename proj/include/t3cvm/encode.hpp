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

#ifndef T3CVM_ENCODE_HPP_
#define T3CVM_ENCODE_HPP_

#include <cstdint>
#include <optional>
#include <string>

#include "t3cvm/common.hpp"

namespace t3cvm {

// Canonical encoding used for every signed, HMAC'd or AEAD-bound structure:
// fields are concatenated in declared order, each as a 4-byte big-endian
// length followed by the content bytes. Scalars are fixed-width big-endian
// content (u64 -> 8 bytes, u8 -> 1 byte); strings are UTF-8 bytes; lists are
// a u64 count field followed by the encoded elements. See docs/formats.md.
class Encoder {
 public:
  Encoder& put_bytes(ConstSpan v);
  Encoder& put_str(std::string_view s);
  Encoder& put_u64(std::uint64_t v);
  Encoder& put_u8(std::uint8_t v);

  Bytes take() { return std::move(out_); }
  const Bytes& view() const { return out_; }

 private:
  Bytes out_;
};

// Bounds-checked reader for the canonical encoding. Accessors return
// std::nullopt once the input is exhausted or malformed; `failed()` sticks.
class Decoder {
 public:
  explicit Decoder(ConstSpan data) : data_(data) {}

  std::optional<Bytes> bytes();
  std::optional<std::string> str();
  std::optional<std::uint64_t> u64();
  std::optional<std::uint8_t> u8();

  bool failed() const { return failed_; }
  bool done() const { return !failed_ && pos_ == data_.size(); }

 private:
  std::optional<ConstSpan> field();

  ConstSpan data_;
  std::size_t pos_ = 0;
  bool failed_ = false;
};

}  // namespace t3cvm

#endif  // T3CVM_ENCODE_HPP_
