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

#include "t3cvm/image.hpp"

#include "t3cvm/encode.hpp"

namespace t3cvm::image {

Bytes CvmImage::encode() const {
  Encoder enc;
  enc.put_bytes(uefi_region)
      .put_bytes(payload_region)
      .put_str(metadata.name)
      .put_str(metadata.version);
  return enc.take();
}

Result<CvmImage> CvmImage::decode(ConstSpan data) {
  Decoder dec(data);
  auto uefi = dec.bytes();
  auto payload = dec.bytes();
  auto name = dec.str();
  auto version = dec.str();
  if (!uefi || !payload || !name || !version || !dec.done()) {
    return {Err::kMalformed, "bad image encoding"};
  }
  return CvmImage{std::move(*uefi), std::move(*payload),
                  ImageMetadata{std::move(*name), std::move(*version)}};
}

crypto::Digest initialization_measurement(const CvmImage& image) {
  return crypto::hash(image.uefi_region);
}

Bytes StagePayload::encode() const {
  Encoder enc;
  enc.put_bytes(bootloader)
      .put_bytes(kernel)
      .put_bytes(application)
      .put_bytes(embedded_config);
  return enc.take();
}

Result<StagePayload> StagePayload::decode(ConstSpan data) {
  Decoder dec(data);
  auto bootloader = dec.bytes();
  auto kernel = dec.bytes();
  auto application = dec.bytes();
  auto config = dec.bytes();
  if (!bootloader || !kernel || !application || !config || !dec.done()) {
    return {Err::kMalformed, "bad stage payload"};
  }
  return StagePayload{std::move(*bootloader), std::move(*kernel),
                      std::move(*application), std::move(*config)};
}

Bytes image_payload_aad(const ImageMetadata& metadata) {
  Encoder enc;
  enc.put_str("cvm-image").put_str(metadata.name).put_str(metadata.version);
  return enc.take();
}

CvmImage build_acvm_image(const ImageMetadata& metadata, ConstSpan uefi,
                          const StagePayload& payload) {
  return CvmImage{Bytes(uefi.begin(), uefi.end()), payload.encode(), metadata};
}

CvmImage build_sealed_image(const ImageMetadata& metadata, ConstSpan uefi,
                            const StagePayload& payload,
                            const crypto::SymmetricKey& image_key) {
  Bytes sealed = crypto::aead_seal(image_key, payload.encode(),
                                   image_payload_aad(metadata));
  return CvmImage{Bytes(uefi.begin(), uefi.end()), std::move(sealed), metadata};
}

Result<StagePayload> open_sealed_payload(
    const CvmImage& image, const crypto::SymmetricKey& image_key) {
  auto opened = crypto::aead_open(image_key, image.payload_region,
                                  image_payload_aad(image.metadata));
  if (!opened.ok()) {
    return {Err::kAuthFailure, "image decryption failed"};
  }
  return StagePayload::decode(opened.value());
}

std::vector<boot::BootEvent> stage_events(ConstSpan uefi,
                                          const StagePayload& payload) {
  std::vector<boot::BootEvent> events;
  std::uint64_t seq = 1;
  auto add = [&](boot::Stage stage, ConstSpan content, const char* what) {
    events.push_back(boot::BootEvent{
        seq++, stage, what, boot::measure_content(stage, content)});
  };
  add(boot::Stage::kUefi, uefi, "firmware volume");
  add(boot::Stage::kBootloader, payload.bootloader, "bootloader");
  add(boot::Stage::kKernel, payload.kernel, "kernel");
  add(boot::Stage::kApplication, payload.application, "user-space applications");
  return events;
}

}  // namespace t3cvm::image
