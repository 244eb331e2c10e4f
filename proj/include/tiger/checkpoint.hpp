// Copyright 2026 The tiger-retrieval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// TGCK checkpoint (all integers little-endian):
//   "TGCK", u32 version (1), u32 tensor count
//   per tensor: u16 name length, name bytes, u8 rank, rank × u32 dims,
//               f32 × numel
//   u32 JSON length, JSON bytes
// The JSON holds format_version, dims, model, train, loss_history and meta.
// Tensors appear in parameter visit order.

#include <filesystem>
#include <string>

#include "tiger/trainer.hpp"

namespace tiger {

std::string encode_checkpoint(const Checkpoint& ck);
// FormatError on bad magic, version, truncation or trailing bytes;
// ConsistencyError when the tensor set does not match the recorded
// architecture.
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tiger
