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

#include "attriprior/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "attriprior/error.hpp"

namespace attriprior::model {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

constexpr char kMagic[8] = {'A', 'T', 'P', 'R', 'C', 'K', 'P', 'T'};
constexpr std::uint64_t kMaxDim = std::uint64_t{1} << 32;

template <class T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error("checkpoint: truncated file");
  return value;
}

std::uint64_t get_size(std::istream& in, const char* what) {
  const auto v = get<std::uint64_t>(in);
  if (v > kMaxDim) throw Error(std::string("checkpoint: implausible ") + what);
  return v;
}

void put_tensor(std::ostream& out, const Tensor& t) {
  put<std::uint64_t>(out, t.rank());
  for (std::size_t d : t.shape()) put<std::uint64_t>(out, d);
  out.write(reinterpret_cast<const char*>(t.data().data()), static_cast<std::streamsize>(t.numel() * sizeof(double)));
}

Tensor get_tensor(std::istream& in, const Shape& expected, const std::string& name) {
  const auto rank = get_size(in, "rank");
  Shape shape;
  for (std::uint64_t i = 0; i < rank; ++i) shape.push_back(get_size(in, "dimension"));
  if (shape != expected) {
    throw Error("checkpoint: tensor " + name + " has shape " + shape_to_string(shape) + ", expected " +
                shape_to_string(expected));
  }
  std::vector<double> data(shape_numel(shape));
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!in) throw Error("checkpoint: truncated tensor " + name);
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  const ModelConfig& cfg = ckpt.params.config;
  if (ckpt.params.vocab_size() != ckpt.vocab.size()) {
    throw Error("checkpoint: embedding rows do not match vocabulary size");
  }
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, cfg.embed_dim);
  put<std::uint64_t>(out, cfg.filter_widths.size());
  for (std::size_t w : cfg.filter_widths) put<std::uint64_t>(out, w);
  put<std::uint64_t>(out, cfg.filters_per_width);
  put<std::uint64_t>(out, cfg.max_seq_len);
  put<std::uint64_t>(out, cfg.num_classes);
  put<double>(out, cfg.dropout_rate);
  put<std::uint64_t>(out, ckpt.vocab.min_frequency());
  put<std::uint64_t>(out, ckpt.vocab.size());
  for (const std::string& t : ckpt.vocab.tokens()) {
    put<std::uint64_t>(out, t.size());
    out.write(t.data(), static_cast<std::streamsize>(t.size()));
  }
  for (const Tensor* t : ckpt.params.tensors()) put_tensor(out, *t);
  if (!out) throw Error("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw Error("checkpoint: bad magic");
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) throw Error("checkpoint: unsupported version " + std::to_string(version));

  ModelConfig cfg;
  cfg.embed_dim = get_size(in, "embed_dim");
  cfg.filter_widths.resize(get_size(in, "width count"));
  for (std::size_t& w : cfg.filter_widths) w = get_size(in, "width");
  cfg.filters_per_width = get_size(in, "filters_per_width");
  cfg.max_seq_len = get_size(in, "max_seq_len");
  cfg.num_classes = get_size(in, "num_classes");
  cfg.dropout_rate = get<double>(in);
  cfg.validate();

  const auto min_frequency = get_size(in, "min_frequency");
  std::vector<std::string> tokens(get_size(in, "vocab size"));
  for (std::string& t : tokens) {
    t.resize(get_size(in, "token length"));
    in.read(t.data(), static_cast<std::streamsize>(t.size()));
    if (!in) throw Error("checkpoint: truncated vocabulary");
  }
  Checkpoint ckpt{zero_params(cfg, tokens.size()), text::Vocabulary::from_tokens(std::move(tokens), min_frequency)};
  const auto names = ckpt.params.tensor_names();
  const auto slots = ckpt.params.tensors();
  for (std::size_t i = 0; i < slots.size(); ++i) *slots[i] = get_tensor(in, slots[i]->shape(), names[i]);
  if (in.peek() != std::char_traits<char>::eof()) throw Error("checkpoint: trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace attriprior::model
