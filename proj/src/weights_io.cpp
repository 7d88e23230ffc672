// Copyright 2026 The KWS Streaming Authors.
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

#include "kws/weights_io.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "config_json.hpp"
#include "kws/error.hpp"

namespace kws {
namespace {

constexpr std::uint8_t kMagic[4] = {'W', 'K', 'W', 'D'};
constexpr std::size_t kPreambleBytes = 12;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  put_u32(out, bits);
}

float get_f32(std::span<const std::uint8_t> b, std::size_t at) {
  const std::uint32_t bits = get_u32(b, at);
  float v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

}  // namespace

std::vector<std::uint8_t> serialize_weights(const ModelConfig& config, const WeightSet& weights) {
  validate_weights(config, weights);
  const std::vector<TensorDescriptor> expected = expected_tensors(config);

  nlohmann::json tensors = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const TensorDescriptor& d : expected) {
    tensors.push_back({{"name", d.name}, {"shape", d.shape}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(d.size()) * 4;
  }
  const nlohmann::json header{{"config", detail::config_to_json_value(config)},
                              {"tensors", std::move(tensors)}};
  const std::string text = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(kPreambleBytes + text.size() + offset);
  for (const std::uint8_t b : kMagic) out.push_back(b);
  put_u32(out, kWeightFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const TensorDescriptor& d : expected)
    for (const float v : weights.at(d.name).data) put_f32(out, v);
  return out;
}

LoadedWeights parse_weights(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw Error(ErrorKind::kBadMagic, "not a WKWD weight file");
  if (bytes.size() < kPreambleBytes)
    throw Error(ErrorKind::kTruncated, "file ends inside the preamble");
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kWeightFormatVersion)
    throw Error(ErrorKind::kBadVersion, "format_version " + std::to_string(version) +
                                            " (expected " +
                                            std::to_string(kWeightFormatVersion) + ")");
  const std::uint64_t header_len = get_u32(bytes, 8);
  if (header_len > bytes.size() - kPreambleBytes)
    throw Error(ErrorKind::kTruncated, "header_len " + std::to_string(header_len) +
                                           " runs past end of file");

  const auto* header_begin = reinterpret_cast<const char*>(bytes.data() + kPreambleBytes);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_begin, header_begin + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kBadHeader, std::string("header is not valid JSON: ") + e.what());
  }
  if (!header.is_object() || !header.contains("config") || !header.contains("tensors") ||
      !header["tensors"].is_array())
    throw Error(ErrorKind::kBadHeader, "header must hold 'config' and 'tensors'");

  LoadedWeights loaded;
  try {
    loaded.config = detail::config_from_json_value(header["config"]);
  } catch (const Error& e) {
    throw Error(ErrorKind::kBadHeader, e.what());
  }
  const std::vector<TensorDescriptor> expected = expected_tensors(loaded.config);
  const nlohmann::json& descriptors = header["tensors"];

  const std::span<const std::uint8_t> payload = bytes.subspan(kPreambleBytes + header_len);
  std::uint64_t cursor = 0;
  for (std::size_t i = 0; i < descriptors.size(); ++i) {
    TensorDescriptor d;
    std::uint64_t offset = 0;
    try {
      d.name = descriptors[i].at("name").get<std::string>();
      d.shape = descriptors[i].at("shape").get<std::vector<std::int64_t>>();
      offset = descriptors[i].at("offset").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kBadHeader, "tensor descriptor " + std::to_string(i) + ": " + e.what());
    }
    if (i >= expected.size())
      throw Error(ErrorKind::kUnexpectedTensor, "tensor " + d.name + " is not used by model '" +
                                                    loaded.config.name + "'");
    if (d.name != expected[i].name)
      throw Error(ErrorKind::kBadHeader, "descriptor " + std::to_string(i) + " is " + d.name +
                                             ", expected " + expected[i].name);
    if (d.shape != expected[i].shape)
      throw Error(ErrorKind::kShape, "layer '" + d.name.substr(0, d.name.rfind('.')) +
                                         "': tensor " + d.name +
                                         " shape disagrees with the config");
    if (offset != cursor)
      throw Error(ErrorKind::kBadHeader, "tensor " + d.name + " offset " + std::to_string(offset) +
                                             ", expected " + std::to_string(cursor));
    const std::uint64_t nbytes = static_cast<std::uint64_t>(d.size()) * 4;
    if (cursor + nbytes > payload.size())
      throw Error(ErrorKind::kTruncated, "payload ends inside tensor " + d.name);
    NamedTensor t{d.name, d.shape, std::vector<float>(static_cast<std::size_t>(d.size()))};
    for (std::size_t k = 0; k < t.data.size(); ++k)
      t.data[k] = get_f32(payload, static_cast<std::size_t>(cursor) + 4 * k);
    loaded.weights.add(std::move(t));
    cursor += nbytes;
  }
  if (descriptors.size() < expected.size())
    throw Error(ErrorKind::kMissingTensor, "layer '" +
                                               expected[descriptors.size()].name.substr(
                                                   0, expected[descriptors.size()].name.rfind('.')) +
                                               "' is missing tensor " +
                                               expected[descriptors.size()].name);
  if (cursor != payload.size())
    throw Error(ErrorKind::kSizeMismatch, std::to_string(payload.size() - cursor) +
                                              " bytes after the last tensor");
  return loaded;
}

void save_weights(const ModelConfig& config, const WeightSet& weights,
                  const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = serialize_weights(config, weights);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());
}

LoadedWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return parse_weights(bytes);
}

Model load_model(const std::filesystem::path& path) {
  LoadedWeights loaded = load_weights(path);
  return Model(std::move(loaded.config), loaded.weights);
}

}  // namespace kws
