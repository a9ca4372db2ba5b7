// Copyright 2026 The AttriPrior Authors.
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

#include <filesystem>
#include <iosfwd>

#include "attriprior/model.hpp"
#include "attriprior/text_pipeline.hpp"

namespace attriprior::model {

/// Model configuration, parameters and the vocabulary they were trained with.
struct Checkpoint {
  ModelParams params;
  text::Vocabulary vocab;
};

// Binary layout, little-endian:
//   "ATPRCKPT" | u32 version
//   config: u64 embed_dim, u64 n_widths, u64 widths[n], u64 filters_per_width,
//           u64 max_seq_len, u64 num_classes, f64 dropout_rate
//   vocab:  u64 min_frequency, u64 n, n x (u64 len, bytes)
//   tensors in ModelParams::tensors() order: u64 rank, u64 dims[rank], f64 data
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace attriprior::model
