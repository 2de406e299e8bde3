// Copyright 2026 The mfseg Authors. All Rights Reserved.
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

#include "mfseg/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <vector>

namespace mfseg {
namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<unsigned char>(value >> (8 * i));
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw CheckpointError("truncated checkpoint");
  }
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
  return value;
}

void put_floats(std::ostream& out, const Tensor<float>& t) {
  for (Index i = 0; i < t.size(); ++i) put_le(out, std::bit_cast<std::uint32_t>(t.data()[i]));
}

Tensor<float> get_floats(std::istream& in, const Shape& shape) {
  Tensor<float> t(shape);
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = std::bit_cast<float>(get_le<std::uint32_t>(in));
  return t;
}

nlohmann::json shape_json(const Shape& s) { return {s.n, s.c, s.h, s.w}; }

Shape parse_shape(const nlohmann::json& j) {
  return {j.at(0).get<Index>(), j.at(1).get<Index>(), j.at(2).get<Index>(),
          j.at(3).get<Index>()};
}

struct RawCheckpoint {
  nlohmann::json header;
  std::map<std::string, Tensor<float>> tensors;
};

RawCheckpoint read_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw CheckpointError(path.string() + " is not a checkpoint (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = get_le<std::uint64_t>(in);
  std::error_code ec;
  const auto file_size = std::filesystem::file_size(path, ec);
  if (ec || header_len > file_size) throw CheckpointError("truncated checkpoint header");
  std::string text(header_len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_len))) {
    throw CheckpointError("truncated checkpoint header");
  }
  RawCheckpoint raw;
  try {
    raw.header = nlohmann::json::parse(text);
    for (const auto& t : raw.header.at("tensors")) {
      const auto name = t.at("name").get<std::string>();
      raw.tensors.emplace(name, get_floats(in, parse_shape(t.at("shape"))));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
  }
  return raw;
}

}  // namespace

void save_checkpoint(const Model<float>& model, const std::filesystem::path& path,
                     const nlohmann::json& metadata) {
  const auto& store = model.parameters();
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& p : store.parameters()) {
    tensors.push_back({{"name", p.name}, {"kind", "parameter"}, {"shape", shape_json(p.var->shape())}});
  }
  for (const auto& b : store.buffers()) {
    tensors.push_back({{"name", b.name}, {"kind", "buffer"}, {"shape", shape_json(b.value.shape())}});
  }
  const nlohmann::json header{{"format", "mfseg-checkpoint"},
                              {"version", kCheckpointVersion},
                              {"spec", model.spec()},
                              {"metadata", metadata},
                              {"tensors", tensors}};
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic, 8);
  put_le(out, kCheckpointVersion);
  put_le(out, static_cast<std::uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : store.parameters()) put_floats(out, p.var->value);
  for (const auto& b : store.buffers()) put_floats(out, b.value);
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  RawCheckpoint raw = read_raw(path);
  ModelSpec spec;
  try {
    spec = raw.header.at("spec").get<ModelSpec>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint spec: ") + e.what());
  }
  LoadedCheckpoint out{build_model<float>(spec), raw.header.value("metadata", nlohmann::json::object())};
  try {
    out.model.parameters().restore(raw.tensors);
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("checkpoint does not match its spec: ") + e.what());
  }
  return out;
}

std::size_t load_pretrained_weights(Model<float>& model, const std::filesystem::path& path) {
  const RawCheckpoint raw = read_raw(path);
  std::size_t copied = 0;
  auto& store = model.parameters();
  for (const auto& p : store.parameters()) {
    const auto it = raw.tensors.find(p.name);
    if (it != raw.tensors.end() && it->second.shape() == p.var->shape()) {
      p.var->value = it->second;
      ++copied;
    }
  }
  for (auto& b : store.buffers()) {
    const auto it = raw.tensors.find(b.name);
    if (it != raw.tensors.end() && it->second.shape() == b.value.shape()) {
      b.value = it->second;
      ++copied;
    }
  }
  return copied;
}

}  // namespace mfseg
