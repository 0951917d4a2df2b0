// Copyright 2026 The pimnas Authors.
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

#include "pimnas/nn/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

namespace pimnas::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'P', 'I', 'M', 'N', 'A', 'S', 'C', 'K'};

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& is, const std::filesystem::path& path) {
  std::uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(v))) {
    throw EngineError("checkpoint " + path.string() + " is truncated");
  }
  return v;
}

std::string read_bytes(std::istream& is, std::size_t n, const std::filesystem::path& path) {
  std::string s(n, '\0');
  if (n > 0 && !is.read(s.data(), static_cast<std::streamsize>(n))) {
    throw EngineError("checkpoint " + path.string() + " is truncated");
  }
  return s;
}

}  // namespace

void Checkpoint::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw EngineError("cannot write checkpoint " + path.string());
    os.write(kMagic, sizeof(kMagic));
    write_u32(os, kVersion);
    const std::string h = header.dump();
    write_u32(os, static_cast<std::uint32_t>(h.size()));
    os.write(h.data(), static_cast<std::streamsize>(h.size()));
    write_u32(os, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
      write_u32(os, static_cast<std::uint32_t>(name.size()));
      os.write(name.data(), static_cast<std::streamsize>(name.size()));
      write_u32(os, static_cast<std::uint32_t>(t.shape.size()));
      for (int d : t.shape) write_u32(os, static_cast<std::uint32_t>(d));
      os.write(reinterpret_cast<const char*>(t.data.data()),
               static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    }
    if (!os) throw EngineError("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw EngineError("cannot open checkpoint " + path.string());
  const std::string magic = read_bytes(is, sizeof(kMagic), path);
  if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) {
    throw EngineError(path.string() + " is not a checkpoint file");
  }
  const std::uint32_t version = read_u32(is, path);
  if (version != kVersion) {
    throw EngineError("checkpoint " + path.string() + " has unsupported version " +
                      std::to_string(version));
  }
  Checkpoint ck;
  ck.header = nlohmann::json::parse(read_bytes(is, read_u32(is, path), path));
  const std::uint32_t count = read_u32(is, path);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = read_bytes(is, read_u32(is, path), path);
    NamedTensor t;
    t.shape.resize(read_u32(is, path));
    for (int& d : t.shape) d = static_cast<int>(read_u32(is, path));
    t.data.resize(shape_size(t.shape));
    if (!t.data.empty() &&
        !is.read(reinterpret_cast<char*>(t.data.data()),
                 static_cast<std::streamsize>(t.data.size() * sizeof(float)))) {
      throw EngineError("checkpoint " + path.string() + " is truncated in tensor " + name);
    }
    ck.tensors.emplace(std::move(name), std::move(t));
  }
  return ck;
}

void Checkpoint::put_params(const ParamStore<float>& store, const std::string& prefix) {
  auto& buffers = header["buffers"];
  if (!buffers.is_array()) buffers = nlohmann::json::array();
  for (const auto& [name, p] : store.all()) {
    tensors[prefix + name] = NamedTensor{p.shape, p.value};
    if (!p.trainable) buffers.push_back(prefix + name);
  }
}

void Checkpoint::get_params(ParamStore<float>& store, const std::string& prefix) const {
  std::vector<std::string> buffers;
  if (header.contains("buffers")) buffers = header["buffers"].get<std::vector<std::string>>();
  for (const auto& [name, t] : tensors) {
    if (name.rfind(prefix, 0) != 0) continue;
    const std::string key = name.substr(prefix.size());
    Param<float>* p = store.find(key);
    if (p == nullptr) {
      const bool buffer = std::find(buffers.begin(), buffers.end(), name) != buffers.end();
      p = &store.add(key, t.shape, !buffer);
    } else if (p->shape != t.shape) {
      throw EngineError("checkpoint tensor " + name + " has shape " + shape_str(t.shape) +
                        ", expected " + shape_str(p->shape));
    }
    p->value = t.data;
  }
}

}  // namespace pimnas::nn
