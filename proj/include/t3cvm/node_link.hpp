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

#ifndef T3CVM_NODE_LINK_HPP_
#define T3CVM_NODE_LINK_HPP_

#include <string>
#include <vector>

#include "t3cvm/channel.hpp"
#include "t3cvm/crypto.hpp"
#include "t3cvm/result.hpp"
#include "t3cvm/wire.hpp"

namespace t3cvm::cloud {

// The manager's handle to a cloud node, independent of transport. The
// in-process implementation calls the node directly; the TCP implementation
// speaks the control protocol over a loopback socket. Either way the node
// observes every byte that crosses this surface.
class NodeLink {
 public:
  virtual ~NodeLink() = default;

  virtual Result<std::vector<crypto::Certificate>> platform_chain() = 0;
  virtual Result<wire::LaunchCvmResult> launch_cvm(const std::string& cvm_id,
                                                   wire::GuestKind kind,
                                                   ConstSpan image_bytes) = 0;
  virtual Result<void> inject_secret(const std::string& cvm_id,
                                     ConstSpan godh_public,
                                     ConstSpan sealed) = 0;
  // The boot/management link to a launched guest.
  virtual Result<net::ChannelPtr> open_guest_channel(
      const std::string& cvm_id) = 0;
  // Wires an ACVM's TPM traffic to the named CN-TPMCVM (or wherever the
  // node's adversary configuration decides).
  virtual Result<void> bind_vtpm(const std::string& acvm_id,
                                 const std::string& tpmcvm_id) = 0;
  // The user's path to their ACVM, through the cloud's network.
  virtual Result<net::ChannelPtr> open_user_channel(
      const std::string& acvm_id) = 0;
  virtual Result<void> destroy_cvm(const std::string& cvm_id) = 0;
};

}  // namespace t3cvm::cloud

#endif  // T3CVM_NODE_LINK_HPP_
