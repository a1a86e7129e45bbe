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

// Independent straight-line SHA-256 / HMAC-SHA256 and hash-chain fold used
// as the test oracle. Deliberately shares no code with the library under
// test.

#ifndef T3CVM_TESTS_SUPPORT_REFERENCE_DIGESTS_H_
#define T3CVM_TESTS_SUPPORT_REFERENCE_DIGESTS_H_

#include <array>
#include <cstdint>
#include <cstddef>
#include <vector>

namespace refdig {

using Digest32 = std::array<std::uint8_t, 32>;

Digest32 sha256(const std::uint8_t* data, std::size_t len);
Digest32 sha256(const std::vector<std::uint8_t>& data);

Digest32 hmac_sha256(const std::uint8_t* key, std::size_t key_len,
                     const std::uint8_t* data, std::size_t len);

// One extend step: sha256(old || measurement).
Digest32 chain(const Digest32& old_value, const Digest32& measurement);

// Fold a measurement list into one digest starting from all-zero.
Digest32 fold(const std::vector<Digest32>& measurements);

}  // namespace refdig

#endif  // T3CVM_TESTS_SUPPORT_REFERENCE_DIGESTS_H_
