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

#include "aqa/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "aqa/error.hpp"

namespace aqa {

namespace {

constexpr char kMagic[] = {'N', 'N', 'C', 'K', '1'};

static_assert(std::endian::native == std::endian::little);

}  // namespace

void write_checkpoint(const std::filesystem::path& path, nlohmann::json meta,
                      std::span<const ParamView<float>> params) {
  nlohmann::json entries = nlohmann::json::array();
  for (const ParamView<float>& p : params) {
    entries.push_back({{"name", p.name}, {"shape", p.shape}});
  }
  meta["params"] = std::move(entries);
  const std::string text = meta.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  const auto length = static_cast<uint32_t>(text.size());
  out.write(reinterpret_cast<const char*>(&length), sizeof(length));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const ParamView<float>& p : params) {
    out.write(reinterpret_cast<const char*>(p.values.data()),
              static_cast<std::streamsize>(p.values.size_bytes()));
  }
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot read checkpoint " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) ||
      std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(0, "bad checkpoint magic");
  }
  uint32_t length = 0;
  in.read(reinterpret_cast<char*>(&length), sizeof(length));
  std::string text(length, '\0');
  in.read(text.data(), length);
  if (!in) throw FormatError(sizeof(kMagic), "truncated checkpoint metadata");
  Checkpoint checkpoint;
  try {
    checkpoint.meta = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(sizeof(kMagic) + 4, e.what());
  }
  std::size_t offset = sizeof(kMagic) + 4 + length;
  for (const auto& entry : checkpoint.meta.at("params")) {
    std::size_t count = 1;
    for (const auto& d : entry.at("shape")) count *= d.get<std::size_t>();
    std::vector<float> blob(count);
    in.read(reinterpret_cast<char*>(blob.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(float)) {
      throw FormatError(offset, "truncated blob " +
                                    entry.at("name").get<std::string>());
    }
    offset += count * sizeof(float);
    checkpoint.blobs.emplace_back(entry.at("name").get<std::string>(),
                                  std::move(blob));
  }
  return checkpoint;
}

void load_params(const Checkpoint& checkpoint,
                 std::span<const ParamView<float>> params) {
  if (checkpoint.blobs.size() != params.size()) {
    throw FormatError("checkpoint has " +
                      std::to_string(checkpoint.blobs.size()) +
                      " tensors, model expects " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, blob] = checkpoint.blobs[i];
    if (name != params[i].name || blob.size() != params[i].values.size()) {
      throw FormatError("checkpoint tensor '" + name + "' does not match '" +
                        params[i].name + "'");
    }
    std::copy(blob.begin(), blob.end(), params[i].values.begin());
  }
}

}  // namespace aqa
