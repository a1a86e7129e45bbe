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

#include "t3cvm/tpm_commands.hpp"

#include "t3cvm/encode.hpp"

namespace t3cvm::tpm_cmd {

namespace {

Bytes with_code(Code code, Encoder&& fields) {
  Encoder enc;
  enc.put_u8(static_cast<std::uint8_t>(code)).put_bytes(fields.view());
  return enc.take();
}

Bytes digest_payload(const vtpm::Digest& d) {
  Encoder enc;
  enc.put_bytes(d.span());
  return enc.take();
}

}  // namespace

Bytes encode_get_random(std::uint64_t count) {
  Encoder fields;
  fields.put_u64(count);
  return with_code(Code::kGetRandom, std::move(fields));
}

Bytes encode_pcr_read(int index) {
  Encoder fields;
  fields.put_u64(static_cast<std::uint64_t>(index));
  return with_code(Code::kPcrRead, std::move(fields));
}

Bytes encode_pcr_extend(int index, const vtpm::Digest& measurement,
                        std::string_view label) {
  Encoder fields;
  fields.put_u64(static_cast<std::uint64_t>(index))
      .put_bytes(measurement.span())
      .put_str(label);
  return with_code(Code::kPcrExtend, std::move(fields));
}

Bytes encode_hash(ConstSpan data) {
  Encoder fields;
  fields.put_bytes(data);
  return with_code(Code::kHash, std::move(fields));
}

Bytes encode_create_key() {
  return with_code(Code::kCreateKey, Encoder());
}

Bytes encode_sign(const std::string& handle, ConstSpan data) {
  Encoder fields;
  fields.put_str(handle).put_bytes(data);
  return with_code(Code::kSign, std::move(fields));
}

Bytes encode_verify_signature(const std::string& handle, ConstSpan data,
                              ConstSpan signature) {
  Encoder fields;
  fields.put_str(handle).put_bytes(data).put_bytes(signature);
  return with_code(Code::kVerifySignature, std::move(fields));
}

Bytes encode_quote(const std::vector<int>& selection, ConstSpan nonce) {
  Encoder fields;
  fields.put_u64(selection.size());
  for (int index : selection) fields.put_u64(static_cast<std::uint64_t>(index));
  fields.put_bytes(nonce);
  return with_code(Code::kQuote, std::move(fields));
}

Bytes encode_get_ek_chain() {
  return with_code(Code::kGetEkChain, Encoder());
}

Bytes encode_get_boot_view() {
  return with_code(Code::kGetBootView, Encoder());
}

Bytes ok_response(ConstSpan payload) {
  Encoder enc;
  enc.put_u8(0).put_str("").put_bytes(payload);
  return enc.take();
}

Bytes error_response(const Error& error) {
  Encoder enc;
  enc.put_u8(static_cast<std::uint8_t>(error.code) + 1)
      .put_str(error.detail)
      .put_bytes({});
  return enc.take();
}

Result<Bytes> parse_response(ConstSpan body) {
  Decoder dec(body);
  auto status = dec.u8();
  auto detail = dec.str();
  auto payload = dec.bytes();
  if (!status || !detail || !payload || !dec.done()) {
    return {Err::kMalformed, "truncated command response"};
  }
  if (*status != 0) {
    return Error{static_cast<Err>(*status - 1), *detail};
  }
  return *payload;
}

Bytes dispatch(vtpm::Vtpm& tpm,
               const std::vector<crypto::Certificate>& ek_chain,
               ConstSpan command) {
  Decoder dec(command);
  auto code = dec.u8();
  auto fields_raw = dec.bytes();
  if (!code || !fields_raw || !dec.done()) {
    return error_response({Err::kMalformed, "bad command framing"});
  }
  Decoder fields(*fields_raw);

  switch (static_cast<Code>(*code)) {
    case Code::kGetRandom: {
      auto count = fields.u64();
      if (!count || !fields.done() || *count > 4096) {
        return error_response({Err::kMalformed, "bad GetRandom request"});
      }
      Encoder out;
      out.put_bytes(tpm.get_random(*count));
      return ok_response(out.view());
    }
    case Code::kPcrRead: {
      auto index = fields.u64();
      if (!index || !fields.done()) {
        return error_response({Err::kMalformed, "bad PcrRead request"});
      }
      auto value = tpm.pcr_read(static_cast<int>(*index));
      if (!value.ok()) return error_response(value.error());
      return ok_response(digest_payload(value.value()));
    }
    case Code::kPcrExtend: {
      auto index = fields.u64();
      auto digest_bytes = fields.bytes();
      auto label = fields.str();
      if (!index || !digest_bytes || !label || !fields.done()) {
        return error_response({Err::kMalformed, "bad PcrExtend request"});
      }
      auto measurement = vtpm::Digest::from_bytes(*digest_bytes);
      if (!measurement) {
        return error_response({Err::kMalformed, "bad measurement digest"});
      }
      auto result =
          tpm.pcr_extend(static_cast<int>(*index), *measurement, *label);
      if (!result.ok()) return error_response(result.error());
      return ok_response({});
    }
    case Code::kHash: {
      auto data = fields.bytes();
      if (!data || !fields.done()) {
        return error_response({Err::kMalformed, "bad Hash request"});
      }
      return ok_response(digest_payload(vtpm::Vtpm::hash_data(*data)));
    }
    case Code::kCreateKey: {
      Encoder out;
      out.put_str(tpm.create_signing_key());
      return ok_response(out.view());
    }
    case Code::kSign: {
      auto handle = fields.str();
      auto data = fields.bytes();
      if (!handle || !data || !fields.done()) {
        return error_response({Err::kMalformed, "bad Sign request"});
      }
      auto sig = tpm.sign_with_key(*handle, *data);
      if (!sig.ok()) return error_response(sig.error());
      Encoder out;
      out.put_bytes(sig.value());
      return ok_response(out.view());
    }
    case Code::kVerifySignature: {
      auto handle = fields.str();
      auto data = fields.bytes();
      auto sig = fields.bytes();
      if (!handle || !data || !sig || !fields.done()) {
        return error_response({Err::kMalformed, "bad VerifySignature request"});
      }
      auto verdict = tpm.verify_with_key(*handle, *data, *sig);
      if (!verdict.ok()) return error_response(verdict.error());
      Encoder out;
      out.put_u8(verdict.value() ? 1 : 0);
      return ok_response(out.view());
    }
    case Code::kQuote: {
      auto count = fields.u64();
      if (!count || *count > vtpm::kNumPcrs) {
        return error_response({Err::kMalformed, "bad Quote selection"});
      }
      std::vector<int> selection;
      for (std::uint64_t i = 0; i < *count; ++i) {
        auto index = fields.u64();
        if (!index) {
          return error_response({Err::kMalformed, "truncated Quote selection"});
        }
        selection.push_back(static_cast<int>(*index));
      }
      auto nonce = fields.bytes();
      if (!nonce || !fields.done()) {
        return error_response({Err::kMalformed, "bad Quote request"});
      }
      auto quote = tpm.make_quote(selection, *nonce);
      if (!quote.ok()) return error_response(quote.error());
      Encoder out;
      out.put_bytes(quote.value().encode());
      return ok_response(out.view());
    }
    case Code::kGetEkChain: {
      Encoder out;
      out.put_u64(ek_chain.size());
      for (const auto& cert : ek_chain) out.put_bytes(cert.encode());
      return ok_response(out.view());
    }
    case Code::kGetBootView: {
      Encoder out;
      out.put_u64(tpm.extend_log().size());
      for (const auto& record : tpm.extend_log()) {
        out.put_u64(static_cast<std::uint64_t>(record.pcr))
            .put_bytes(record.measurement.span())
            .put_str(record.label);
      }
      return ok_response(out.view());
    }
  }
  return error_response({Err::kMalformed, "unknown command code"});
}

Result<Bytes> parse_bytes_payload(ConstSpan payload) {
  Decoder dec(payload);
  auto data = dec.bytes();
  if (!data || !dec.done()) return {Err::kMalformed, "bad bytes payload"};
  return *data;
}

Result<vtpm::Digest> parse_digest_payload(ConstSpan payload) {
  auto data = parse_bytes_payload(payload);
  if (!data.ok()) return data.error();
  auto digest = vtpm::Digest::from_bytes(data.value());
  if (!digest) return {Err::kMalformed, "bad digest payload"};
  return *digest;
}

Result<std::string> parse_handle_payload(ConstSpan payload) {
  Decoder dec(payload);
  auto handle = dec.str();
  if (!handle || !dec.done()) return {Err::kMalformed, "bad handle payload"};
  return *handle;
}

Result<bool> parse_bool_payload(ConstSpan payload) {
  Decoder dec(payload);
  auto value = dec.u8();
  if (!value || !dec.done()) return {Err::kMalformed, "bad bool payload"};
  return *value != 0;
}

Result<vtpm::Quote> parse_quote_payload(ConstSpan payload) {
  auto data = parse_bytes_payload(payload);
  if (!data.ok()) return data.error();
  return vtpm::Quote::decode(data.value());
}

Result<std::vector<crypto::Certificate>> parse_ek_chain_payload(
    ConstSpan payload) {
  Decoder dec(payload);
  auto count = dec.u64();
  if (!count || *count > 64) return {Err::kMalformed, "bad chain count"};
  std::vector<crypto::Certificate> chain;
  for (std::uint64_t i = 0; i < *count; ++i) {
    auto cert_bytes = dec.bytes();
    if (!cert_bytes) return {Err::kMalformed, "truncated chain"};
    auto cert = crypto::Certificate::decode(*cert_bytes);
    if (!cert) return {Err::kMalformed, "bad certificate"};
    chain.push_back(std::move(*cert));
  }
  if (!dec.done()) return {Err::kMalformed, "trailing chain bytes"};
  return chain;
}

Result<std::vector<vtpm::Vtpm::ExtendRecord>> parse_boot_view_payload(
    ConstSpan payload) {
  Decoder dec(payload);
  auto count = dec.u64();
  if (!count || *count > 4096) return {Err::kMalformed, "bad record count"};
  std::vector<vtpm::Vtpm::ExtendRecord> records;
  for (std::uint64_t i = 0; i < *count; ++i) {
    auto pcr = dec.u64();
    auto digest_bytes = dec.bytes();
    auto label = dec.str();
    if (!pcr || !digest_bytes || !label) {
      return {Err::kMalformed, "truncated boot view"};
    }
    auto digest = vtpm::Digest::from_bytes(*digest_bytes);
    if (!digest) return {Err::kMalformed, "bad boot view digest"};
    records.push_back(
        vtpm::Vtpm::ExtendRecord{static_cast<int>(*pcr), *digest, *label});
  }
  if (!dec.done()) return {Err::kMalformed, "trailing boot view bytes"};
  return records;
}

}  // namespace t3cvm::tpm_cmd
