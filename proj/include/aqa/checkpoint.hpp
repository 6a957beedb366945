/*
 * Copyright 2026 The AQA Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "aqa/neural.hpp"

namespace aqa {

// Versioned parameter file:
//   "NNCK1", u32 metadata length, UTF-8 JSON metadata, then one raw
//   little-endian f32 blob per parameter in the order of meta["params"].
// Writing adds meta["params"] = [{name, shape}] from the views.
struct Checkpoint {
  nlohmann::json meta;
  std::vector<std::pair<std::string, std::vector<float>>> blobs;
};

void write_checkpoint(const std::filesystem::path& path, nlohmann::json meta,
                      std::span<const ParamView<float>> params);

Checkpoint read_checkpoint(const std::filesystem::path& path);

// Copies blobs into the views; names and sizes must match exactly.
void load_params(const Checkpoint& checkpoint,
                 std::span<const ParamView<float>> params);

}  // namespace aqa
