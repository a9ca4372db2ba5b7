#pragma once

// Tiny CNN models and batches shared by the model, attribution and training tests.

#include <random>
#include <string>
#include <vector>

#include "attriprior/model.hpp"
#include "attriprior/text_pipeline.hpp"
#include "support/gradcheck.hpp"

namespace micro {

using attriprior::Tensor;
namespace model = attriprior::model;
namespace text = attriprior::text;

inline model::ModelConfig config(std::size_t max_seq_len = 6) {
  model::ModelConfig c;
  c.embed_dim = 4;
  c.filter_widths = {2, 3};
  c.filters_per_width = 3;
  c.max_seq_len = max_seq_len;
  c.dropout_rate = 0.2;
  return c;
}

/// Parameters drawn from a wider range than init_params so relu units and
/// posteriors are far from their degenerate regime.
inline model::ModelParams params(std::uint64_t seed, std::size_t vocab_size = 10, std::size_t max_seq_len = 6) {
  model::ModelParams p = model::zero_params(config(max_seq_len), vocab_size);
  std::mt19937_64 rng(seed);
  for (Tensor* t : p.tensors()) *t = gradcheck::random_tensor(t->shape(), rng, -0.8, 0.8);
  for (std::size_t d = 0; d < p.config.embed_dim; ++d) p.embedding.at(text::kPadId, d) = 0.0;
  return p;
}

/// Replaces every parameter tensor, in ModelParams::tensors() order.
inline model::ModelParams with_tensors(model::ModelParams p, const std::vector<Tensor>& values) {
  const auto slots = p.tensors();
  for (std::size_t i = 0; i < slots.size(); ++i) *slots[i] = values[i];
  return p;
}

inline std::vector<Tensor> tensors_of(const model::ModelParams& p) {
  std::vector<Tensor> out;
  for (const Tensor* t : p.tensors()) out.push_back(*t);
  return out;
}

/// A vocabulary of `w0 .. w{n-1}` after the reserved ids.
inline text::Vocabulary vocabulary(std::size_t words = 7) {
  text::Tokens all;
  for (std::size_t i = 0; i < words; ++i) all.push_back("w" + std::to_string(i));
  return text::Vocabulary::build({all}, 1);
}

inline text::TokenizedExample example(const text::Tokens& tokens, int label, std::size_t max_seq_len = 6,
                                      double weight = 1.0) {
  return text::make_example(tokens, label, vocabulary(), max_seq_len, weight);
}

/// Random example over the micro vocabulary with 2..max_seq_len tokens.
inline text::TokenizedExample random_example(std::mt19937_64& rng, std::size_t max_seq_len = 6) {
  std::uniform_int_distribution<std::size_t> len(2, max_seq_len), word(0, 6);
  text::Tokens tokens(len(rng));
  for (auto& t : tokens) t = "w" + std::to_string(word(rng));
  return example(tokens, static_cast<int>(rng() % 2), max_seq_len);
}

}  // namespace micro
