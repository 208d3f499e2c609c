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

#include "cslab/nn/checkpoint.h"

#include <bit>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "cslab/error.h"

namespace cslab::nn {

namespace {

constexpr const char* kFormat = "cs-lab-checkpoint";
constexpr int kVersion = 1;

std::filesystem::path with_suffix(const std::filesystem::path& base,
                                  const char* suffix) {
  return std::filesystem::path(base.string() + suffix);
}

nlohmann::json read_manifest(const std::filesystem::path& base) {
  const auto path = with_suffix(base, ".json");
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (j.value("format", "") != kFormat || j.value("version", 0) != kVersion) {
    throw DataError(path.string() + ": not a version 1 checkpoint manifest");
  }
  return j;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& base, const ParamList& params,
                     const nlohmann::json& config) {
  nlohmann::json manifest;
  manifest["format"] = kFormat;
  manifest["version"] = kVersion;
  manifest["config"] = config;
  manifest["parameters"] = nlohmann::json::array();
  std::string blob;
  for (const Parameter* p : params) {
    manifest["parameters"].push_back(
        {{"name", p->name}, {"shape", {p->value.rows(), p->value.cols()}}});
    for (double v : p->value.data()) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      for (int b = 0; b < 8; ++b) blob.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
    }
  }
  std::ofstream json_out(with_suffix(base, ".json"));
  std::ofstream bin_out(with_suffix(base, ".bin"), std::ios::binary);
  if (!json_out || !bin_out) throw DataError("cannot write checkpoint " + base.string());
  json_out << manifest.dump(2) << '\n';
  bin_out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
}

nlohmann::json read_checkpoint_config(const std::filesystem::path& base) {
  return read_manifest(base).value("config", nlohmann::json::object());
}

nlohmann::json load_checkpoint(const std::filesystem::path& base,
                               const ParamList& params) {
  const nlohmann::json manifest = read_manifest(base);
  const auto& entries = manifest.at("parameters");
  if (entries.size() != params.size()) {
    throw DataError("checkpoint holds " + std::to_string(entries.size()) +
                    " parameters, model has " + std::to_string(params.size()));
  }
  const auto bin_path = with_suffix(base, ".bin");
  std::ifstream in(bin_path, std::ios::binary);
  if (!in) throw DataError("cannot read " + bin_path.string());
  const std::string blob((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  std::size_t expected = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& e = entries[k];
    const auto name = e.at("name").get<std::string>();
    const auto rows = e.at("shape").at(0).get<std::size_t>();
    const auto cols = e.at("shape").at(1).get<std::size_t>();
    if (name != params[k]->name || rows != params[k]->value.rows() ||
        cols != params[k]->value.cols()) {
      throw DataError("checkpoint parameter " + name + " does not match model parameter " +
                      params[k]->name + " " + params[k]->value.shape_string());
    }
    expected += rows * cols * 8;
  }
  if (blob.size() != expected) {
    throw DataError(bin_path.string() + ": expected " + std::to_string(expected) +
                    " bytes, found " + std::to_string(blob.size()));
  }
  std::size_t off = 0;
  for (Parameter* p : params) {
    for (double& v : p->value.data()) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) {
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(blob[off + b]))
                << (8 * b);
      }
      v = std::bit_cast<double>(bits);
      off += 8;
    }
    p->zero_grad();
  }
  return manifest.value("config", nlohmann::json::object());
}

std::uint64_t checksum(const ParamList& params) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](unsigned char byte) {
    h ^= byte;
    h *= 1099511628211ull;
  };
  for (const Parameter* p : params) {
    for (char c : p->name) mix(static_cast<unsigned char>(c));
    for (double v : p->value.data()) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      for (int b = 0; b < 8; ++b) mix(static_cast<unsigned char>(bits >> (8 * b)));
    }
  }
  return h;
}

}  // namespace cslab::nn
