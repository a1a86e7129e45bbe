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

#ifndef T3CVM_TPM_COMMANDS_HPP_
#define T3CVM_TPM_COMMANDS_HPP_

#include <string>
#include <vector>

#include "t3cvm/common.hpp"
#include "t3cvm/crypto.hpp"
#include "t3cvm/result.hpp"
#include "t3cvm/vtpm.hpp"

namespace t3cvm::tpm_cmd {

// Minimal command set exposed by the vTPM over the wrapped-command channel.
// Not a TPM 2.0 dialect; command body is the canonical encoding of a command
// code byte followed by the command's fields.
enum class Code : std::uint8_t {
  kGetRandom = 1,
  kPcrRead,
  kPcrExtend,
  kHash,
  kCreateKey,
  kSign,
  kVerifySignature,
  kQuote,
  kGetEkChain,
  kGetBootView,
};

Bytes encode_get_random(std::uint64_t count);
Bytes encode_pcr_read(int index);
Bytes encode_pcr_extend(int index, const vtpm::Digest& measurement,
                        std::string_view label);
Bytes encode_hash(ConstSpan data);
Bytes encode_create_key();
Bytes encode_sign(const std::string& handle, ConstSpan data);
Bytes encode_verify_signature(const std::string& handle, ConstSpan data,
                              ConstSpan signature);
Bytes encode_quote(const std::vector<int>& selection, ConstSpan nonce);
Bytes encode_get_ek_chain();
Bytes encode_get_boot_view();

// Response body: status byte (0 ok, else Err), detail string, payload bytes.
Bytes ok_response(ConstSpan payload);
Bytes error_response(const Error& error);
Result<Bytes> parse_response(ConstSpan body);

// Executes one command against a vTPM, serially. `ek_chain` is returned by
// kGetEkChain and is the certificate path from the trusted root down to this
// vTPM's endorsement key.
Bytes dispatch(vtpm::Vtpm& tpm,
               const std::vector<crypto::Certificate>& ek_chain,
               ConstSpan command);

// Typed payload decoders for the command initiator side.
Result<Bytes> parse_bytes_payload(ConstSpan payload);           // GetRandom/Hash/Sign
Result<vtpm::Digest> parse_digest_payload(ConstSpan payload);   // PcrRead
Result<std::string> parse_handle_payload(ConstSpan payload);    // CreateKey
Result<bool> parse_bool_payload(ConstSpan payload);             // VerifySignature
Result<vtpm::Quote> parse_quote_payload(ConstSpan payload);
Result<std::vector<crypto::Certificate>> parse_ek_chain_payload(
    ConstSpan payload);
Result<std::vector<vtpm::Vtpm::ExtendRecord>> parse_boot_view_payload(
    ConstSpan payload);

}  // namespace t3cvm::tpm_cmd

#endif  // T3CVM_TPM_COMMANDS_HPP_
