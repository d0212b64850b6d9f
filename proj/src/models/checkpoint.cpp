// Copyright 2026 The sslhar Authors.
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

#include "sslhar/models/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <fstream>

#include "sslhar/errors.hpp"

namespace sslhar::models {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "checkpoint files are little-endian");

void capture(ModelCheckpoint& ckpt, const nn::Module& m, const std::string& prefix) {
  for (const auto& [name, t] : m.named_state()) {
    ckpt.weights[prefix + name] = WeightArray{t.shape(), std::vector<double>(t.values().begin(), t.values().end())};
  }
}

void restore(nn::Module& m, const ModelCheckpoint& ckpt, const std::string& prefix) {
  for (auto& [name, t] : m.named_state()) {
    auto it = ckpt.weights.find(prefix + name);
    if (it == ckpt.weights.end()) throw IntegrityError("checkpoint has no array '" + prefix + name + "'");
    if (it->second.shape != t.shape() || it->second.values.size() != t.size()) {
      throw IntegrityError("checkpoint array '" + prefix + name + "' has shape " + nn::to_string(it->second.shape) +
                           ", model expects " + nn::to_string(t.shape()));
    }
    auto dst = nn::Tensor(t).values();
    std::copy(it->second.values.begin(), it->second.values.end(), dst.begin());
  }
}

void save_checkpoint(const ModelCheckpoint& ckpt, const fs::path& dir) {
  fs::create_directories(dir);
  Json tensors = Json::object();
  for (const auto& [name, w] : ckpt.weights) {
    if (nn::numel(w.shape) != w.values.size()) throw IntegrityError("array '" + name + "' disagrees with its shape");
    const std::string file = name + ".bin";
    tensors[name] = {{"shape", w.shape}, {"dtype", "float64"}, {"file", file}};
    std::ofstream out(dir / file, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(w.values.data()), static_cast<std::streamsize>(w.values.size() * sizeof(double)));
    if (!out) throw Error("failed writing " + (dir / file).string());
  }
  Json manifest = {{"format", 1},
                   {"arch", ckpt.arch},
                   {"pretext_method", ckpt.pretext_method},
                   {"pretrain_config", ckpt.pretrain_config},
                   {"seed", ckpt.seed},
                   {"tensors", tensors}};
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

ModelCheckpoint load_checkpoint(const fs::path& dir) {
  const fs::path mpath = dir / "manifest.json";
  if (!fs::exists(mpath)) throw FormatError("missing checkpoint manifest in " + dir.string());
  Json manifest;
  try {
    std::ifstream(mpath) >> manifest;
  } catch (const Json::exception& e) {
    throw FormatError("checkpoint manifest: " + std::string(e.what()));
  }
  ModelCheckpoint ckpt;
  try {
    ckpt.arch = manifest.value("arch", Json::object());
    ckpt.pretext_method = manifest.value("pretext_method", std::string());
    ckpt.pretrain_config = manifest.value("pretrain_config", Json::object());
    ckpt.seed = manifest.value("seed", std::uint64_t{0});
    for (const auto& [name, entry] : manifest.at("tensors").items()) {
      if (entry.value("dtype", std::string("float64")) != "float64") {
        throw IntegrityError("array '" + name + "' has unsupported dtype");
      }
      WeightArray w;
      w.shape = entry.at("shape").get<nn::Shape>();
      const fs::path file = dir / entry.at("file").get<std::string>();
      const std::size_t n = nn::numel(w.shape);
      if (!fs::exists(file) || fs::file_size(file) != n * sizeof(double)) {
        throw IntegrityError("weight file for '" + name + "' is missing or has the wrong size");
      }
      w.values.resize(n);
      std::ifstream in(file, std::ios::binary);
      in.read(reinterpret_cast<char*>(w.values.data()), static_cast<std::streamsize>(n * sizeof(double)));
      if (!in) throw IntegrityError("short read on " + file.string());
      ckpt.weights.emplace(name, std::move(w));
    }
  } catch (const Json::exception& e) {
    throw FormatError("checkpoint manifest: " + std::string(e.what()));
  }
  return ckpt;
}

std::unique_ptr<Encoder> load_encoder(const ModelCheckpoint& ckpt) {
  if (!ckpt.arch.contains("encoder")) throw IntegrityError("checkpoint does not describe an encoder");
  Rng rng(0);
  auto enc = make_encoder(ckpt.arch["encoder"], rng);
  restore(*enc, ckpt, "encoder.");
  return enc;
}

}  // namespace sslhar::models
