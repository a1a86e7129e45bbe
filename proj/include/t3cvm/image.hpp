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

#ifndef T3CVM_IMAGE_HPP_
#define T3CVM_IMAGE_HPP_

#include <string>
#include <vector>

#include "t3cvm/common.hpp"
#include "t3cvm/crypto.hpp"
#include "t3cvm/event_log.hpp"
#include "t3cvm/result.hpp"

namespace t3cvm::image {

struct ImageMetadata {
  std::string name;
  std::string version;

  bool operator==(const ImageMetadata&) const = default;
};

// A CVM image: the UEFI region the firmware measures at launch, and the
// payload region holding the boot stages (plaintext for ACVMs, sealed under
// the Image Key for CN-TPMCVM images).
struct CvmImage {
  Bytes uefi_region;
  Bytes payload_region;
  ImageMetadata metadata;

  Bytes encode() const;
  static Result<CvmImage> decode(ConstSpan data);

  bool operator==(const CvmImage&) const = default;
};

// The firmware's initialization measurement covers exactly the UEFI region.
crypto::Digest initialization_measurement(const CvmImage& image);

// Decoded payload: the three measured boot stages plus an opaque embedded
// configuration blob (used by CN-TPMCVM images to carry the TLS key pair;
// integrity-protected by the image seal, not measured as a stage).
struct StagePayload {
  Bytes bootloader;
  Bytes kernel;
  Bytes application;
  Bytes embedded_config;

  Bytes encode() const;
  static Result<StagePayload> decode(ConstSpan data);

  bool operator==(const StagePayload&) const = default;
};

Bytes image_payload_aad(const ImageMetadata& metadata);

// Builds a plaintext ACVM image from stage contents.
CvmImage build_acvm_image(const ImageMetadata& metadata, ConstSpan uefi,
                          const StagePayload& payload);

// Builds a CN-TPMCVM image with the payload sealed under the image key.
CvmImage build_sealed_image(const ImageMetadata& metadata, ConstSpan uefi,
                            const StagePayload& payload,
                            const crypto::SymmetricKey& image_key);

Result<StagePayload> open_sealed_payload(const CvmImage& image,
                                         const crypto::SymmetricKey& image_key);

// The measured boot events for a payload, in the fixed stage order
// uefi, bootloader, kernel, application. Both the registration-time golden
// computation and the in-guest agent use this rule.
std::vector<boot::BootEvent> stage_events(ConstSpan uefi,
                                          const StagePayload& payload);

}  // namespace t3cvm::image

#endif  // T3CVM_IMAGE_HPP_
