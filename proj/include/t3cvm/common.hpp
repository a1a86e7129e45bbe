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

#ifndef T3CVM_COMMON_HPP_
#define T3CVM_COMMON_HPP_

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace t3cvm {

using Bytes = std::vector<std::uint8_t>;
using ConstSpan = std::span<const std::uint8_t>;

Bytes to_bytes(std::string_view s);
std::string to_string(ConstSpan data);

std::string to_hex(ConstSpan data);
std::optional<Bytes> from_hex(std::string_view hex);

Bytes concat(std::initializer_list<ConstSpan> parts);

}  // namespace t3cvm

#endif  // T3CVM_COMMON_HPP_
