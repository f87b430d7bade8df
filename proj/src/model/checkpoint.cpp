// Copyright 2026 The FAMA-desk Authors.
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

#include "fama/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace fama::model {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  template <typename T>
  void put(T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    bytes_.append(b, sizeof(T));
  }
  void put_bytes(const void* p, std::size_t n) { bytes_.append(static_cast<const char*>(p), n); }
  const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
};

class Reader {
 public:
  Reader(std::string bytes, std::string name) : bytes_(std::move(bytes)), name_(std::move(name)) {}
  template <typename T>
  T get() {
    T v;
    need(sizeof(T));
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void get_bytes(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw IoError("checkpoint '" + name_ + "' is truncated");
  }
  std::string bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  Writer w;
  w.put_bytes("FAMA", 4);
  w.put<std::uint32_t>(Checkpoint::kVersion);
  const nlohmann::json meta = {{"config", ckpt.config.to_json()},
                               {"step", ckpt.step},
                               {"stage", ckpt.stage},
                               {"vocab", ckpt.vocab},
                               {"extra", ckpt.extra}};
  const std::string m = meta.dump();
  w.put<std::uint64_t>(m.size());
  w.put_bytes(m.data(), m.size());
  w.put<std::uint64_t>(ckpt.tensors.size());
  for (const auto& t : ckpt.tensors) {
    if (num::shape_numel(t.shape) != t.values.size()) {
      throw ValueError("checkpoint tensor '" + t.name + "' has shape " + num::shape_str(t.shape) + " but " +
                       std::to_string(t.values.size()) + " values");
    }
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.name.size()));
    w.put_bytes(t.name.data(), t.name.size());
    w.put<std::uint8_t>(1);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t e : t.shape) w.put<std::uint64_t>(e);
    w.put_bytes(t.values.data(), t.values.size() * sizeof(float));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write checkpoint '" + path.string() + "'");
    f.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!f) throw IoError("write failed for checkpoint '" + path.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::string bytes{std::istreambuf_iterator<char>(f), {}};
  Reader r(std::move(bytes), path.string());
  if (r.get_string(4) != "FAMA") throw IoError("'" + path.string() + "' is not a checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != Checkpoint::kVersion) {
    throw IoError("checkpoint '" + path.string() + "' has unsupported version " + std::to_string(version));
  }
  Checkpoint c;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(r.get_string(r.get<std::uint64_t>()));
    c.config = ModelConfig::from_json(meta.at("config"));
    c.step = meta.at("step").get<std::uint64_t>();
    c.stage = meta.at("stage").get<std::string>();
    c.vocab = meta.at("vocab").get<std::vector<std::string>>();
    c.extra = meta.value("extra", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint '" + path.string() + "' has malformed metadata: " + e.what());
  }
  const auto count = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.get_string(r.get<std::uint32_t>());
    if (r.get<std::uint8_t>() != 1) throw IoError("checkpoint tensor '" + t.name + "' has unsupported dtype");
    const auto rank = r.get<std::uint32_t>();
    for (std::uint32_t k = 0; k < rank; ++k) t.shape.push_back(r.get<std::uint64_t>());
    t.values.resize(num::shape_numel(t.shape));
    r.get_bytes(t.values.data(), t.values.size() * sizeof(float));
    c.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw IoError("checkpoint '" + path.string() + "' has trailing bytes");
  return c;
}

Checkpoint make_checkpoint(const FamaModel& model, const text::Vocabulary& vocab, std::uint64_t step,
                           const std::string& stage) {
  Checkpoint c;
  c.config = model.config();
  c.step = step;
  c.stage = stage;
  c.vocab = vocab.tokens();
  for (const auto& [name, t] : model.params().entries()) {
    NamedTensor nt{name, t.shape(), {}};
    nt.values.reserve(t.numel());
    for (Real v : t.data()) nt.values.push_back(static_cast<float>(v));
    c.tensors.push_back(std::move(nt));
  }
  return c;
}

void load_parameters(FamaModel& model, const Checkpoint& ckpt) {
  if (!(ckpt.config == model.config())) throw ValueError("checkpoint config does not match the model config");
  auto& entries = model.params().entries();
  if (ckpt.tensors.size() != entries.size()) {
    throw ValueError("checkpoint holds " + std::to_string(ckpt.tensors.size()) + " tensors, model expects " +
                     std::to_string(entries.size()));
  }
  for (auto& [name, t] : entries) {
    const NamedTensor* src = ckpt.find(name);
    if (!src) throw ValueError("checkpoint is missing tensor '" + name + "'");
    if (src->shape != t.shape()) {
      throw ValueError("checkpoint tensor '" + name + "' has shape " + num::shape_str(src->shape) + ", model expects " +
                       num::shape_str(t.shape()));
    }
    auto d = t.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = src->values[i];
  }
}

FamaModel model_from_checkpoint(const Checkpoint& ckpt) {
  FamaModel m(ckpt.config);
  load_parameters(m, ckpt);
  return m;
}

text::Vocabulary vocabulary_from_checkpoint(const Checkpoint& ckpt) {
  auto v = text::Vocabulary::from_tokens(ckpt.vocab);
  if (v.size() != ckpt.config.vocab_size) throw ValueError("checkpoint vocabulary size disagrees with its config");
  return v;
}

}  // namespace fama::model
