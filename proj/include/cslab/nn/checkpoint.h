// Copyright 2026 The cs-lab Authors.
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

#ifndef CSLAB_NN_CHECKPOINT_H_
#define CSLAB_NN_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>

#include "cslab/nn/tensor.h"
#include "json.hpp"

namespace cslab::nn {

// Writes <base>.json (format, config, parameter names and shapes) and
// <base>.bin (values as little-endian float64, in manifest order).
void save_checkpoint(const std::filesystem::path& base, const ParamList& params,
                     const nlohmann::json& config);

// Reads the manifest config without touching parameters.
nlohmann::json read_checkpoint_config(const std::filesystem::path& base);

// Fills params from a checkpoint. Names and shapes must match exactly, or a
// DataError is thrown. Returns the stored config.
nlohmann::json load_checkpoint(const std::filesystem::path& base,
                               const ParamList& params);

// FNV-1a over names and value bits; equal values give equal checksums.
std::uint64_t checksum(const ParamList& params);

}  // namespace cslab::nn

#endif  // CSLAB_NN_CHECKPOINT_H_
