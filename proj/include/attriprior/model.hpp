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

#pragma once

// Convolutional sentence classifier: embedding lookup, parallel n-gram
// convolutions, relu, max-over-time pooling, concatenation, dropout (train
// mode only), affine output layer and softmax.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "attriprior/autodiff.hpp"
#include "attriprior/tensor.hpp"
#include "attriprior/text_pipeline.hpp"

namespace attriprior::model {

struct ModelConfig {
  std::size_t embed_dim = 128;
  std::vector<std::size_t> filter_widths{2, 3, 4};
  std::size_t filters_per_width = 128;
  std::size_t max_seq_len = 100;
  std::size_t num_classes = 2;
  double dropout_rate = 0.2;

  /// Throws on non-positive sizes or a sequence shorter than the widest filter.
  void validate() const;
  std::size_t pooled_size() const { return filter_widths.size() * filters_per_width; }

  bool operator==(const ModelConfig&) const = default;
};

struct ModelParams {
  ModelConfig config;
  Tensor embedding;             // [vocab x embed_dim]
  std::vector<Tensor> filters;  // per width: [filters_per_width x width x embed_dim]
  std::vector<Tensor> biases;   // per width: [filters_per_width]
  Tensor output_weights;        // [num_classes x pooled_size]
  Tensor output_bias;           // [num_classes]

  std::size_t vocab_size() const { return embedding.shape().empty() ? 0 : embedding.dim(0); }

  /// Every parameter tensor in a fixed order: embedding, (filters, bias) per
  /// width, output weights, output bias.
  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  std::vector<std::string> tensor_names() const;

  bool all_finite() const;
  bool operator==(const ModelParams&) const = default;
};

/// Same shapes as `params`, all zeros.
ModelParams zeros_like(const ModelParams& params);
ModelParams zero_params(const ModelConfig& config, std::size_t vocab_size);

/// Embedding rows and filters uniform in (-0.05, 0.05), biases zero, <pad> row zero.
ModelParams init_params(const ModelConfig& config, std::size_t vocab_size, std::uint64_t seed);

/// Parameters bound into one graph.
struct ModelVars {
  const ModelParams* params = nullptr;
  ad::Var embedding;  // invalid unless bound with the embedding table
  std::vector<ad::Var> filters;
  std::vector<ad::Var> biases;
  ad::Var output_weights;
  ad::Var output_bias;

  /// Bound non-embedding parameters in ModelParams::tensors() order.
  std::vector<ad::Var> dense() const;
};

/// Binds `params` as non-owning views. With `with_embedding` the table becomes
/// a graph node and lookups use gather_rows; otherwise lookups copy rows into
/// a fresh leaf (cheap for large vocabularies).
ModelVars bind(ad::Graph& graph, const ModelParams& params, bool requires_grad, bool with_embedding = false);

enum class Mode { Train, Eval };

struct Prediction {
  Tensor probs;   // [num_classes], sums to 1
  Tensor logits;  // [num_classes]

  double prob(std::size_t c) const { return probs[c]; }
};

struct ForwardResult {
  ad::Var embedded;  // [max_seq_len x embed_dim]
  ad::Var logits;
  ad::Var probs;

  Prediction prediction() const { return {probs.value(), logits.value()}; }
};

/// Looks up token embeddings. Without a bound table the result is a leaf
/// that requires grad when `requires_grad` is set.
ad::Var embed(const ModelVars& vars, std::span<const std::size_t> token_ids, bool requires_grad = false);

/// Full forward pass. `rng` is required in train mode (dropout).
ForwardResult forward(const ModelVars& vars, std::span<const std::size_t> token_ids, Mode mode,
                      std::mt19937_64* rng = nullptr, bool embedded_requires_grad = false);

/// Forward pass starting from an embedded sequence [max_seq_len x embed_dim].
ForwardResult forward_from_embeddings(const ModelVars& vars, ad::Var embedded, Mode mode,
                                      std::mt19937_64* rng = nullptr);

/// Eval-mode prediction without keeping a graph.
Prediction predict(const ModelParams& params, std::span<const std::size_t> token_ids);
/// Eval-mode probability of `positive_class` for each example (parallel).
std::vector<double> predict_scores(const ModelParams& params, const std::vector<text::TokenizedExample>& examples,
                                   std::size_t positive_class = 1);

/// Numeric embedding lookup [ids x embed_dim].
Tensor lookup(const ModelParams& params, std::span<const std::size_t> token_ids);

}  // namespace attriprior::model
