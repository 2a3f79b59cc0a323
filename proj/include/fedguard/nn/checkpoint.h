/*
 * Copyright 2026 The Fedguard Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FEDGUARD_NN_CHECKPOINT_H_
#define FEDGUARD_NN_CHECKPOINT_H_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fedguard/nn/network.h"
#include "fedguard/nn/tensor.h"

namespace fedguard::nn {

// "ADWT" weight container:
//   magic "ADWT" | u32 version=1 | u16 name length, name bytes | u32 tensor
//   count | per tensor: u8 rank, rank x u32 dims, f32 data
// followed by a metadata block (u32 entry count, then u16-length key and
// u32-length value strings) that makes the file self-describing.
struct Checkpoint {
  std::string model_name;
  std::vector<Tensor> tensors;
  std::map<std::string, std::string> metadata;
};

// Every parameter tensor of `net` in layer order.
Checkpoint MakeCheckpoint(const Network& net,
                          std::map<std::string, std::string> metadata = {});
// Parameter tensors of layers [begin, end) only.
Checkpoint MakeCheckpoint(const Network& net, std::size_t begin, std::size_t end,
                          std::map<std::string, std::string> metadata = {});

// Copies the tensors into layers [begin, ...) of `net`; shapes must match.
void ApplyCheckpoint(const Checkpoint& ckpt, Network& net, std::size_t begin = 0);

void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

// Rounds every parameter to the nearest float so that an ADWT round trip is
// lossless.
void RoundParametersToFloat(Network& net);

}  // namespace fedguard::nn

#endif  // FEDGUARD_NN_CHECKPOINT_H_
