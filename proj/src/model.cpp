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

#include "attriprior/model.hpp"

#include <omp.h>

#include "attriprior/error.hpp"

namespace attriprior::model {

void ModelConfig::validate() const {
  if (embed_dim == 0 || filters_per_width == 0 || max_seq_len == 0 || num_classes == 0) {
    throw Error("model config: sizes must be positive");
  }
  if (filter_widths.empty()) throw Error("model config: no filter widths");
  for (std::size_t w : filter_widths) {
    if (w == 0) throw Error("model config: filter width must be positive");
    if (w > max_seq_len) {
      throw Error("model config: max_seq_len " + std::to_string(max_seq_len) + " shorter than filter width " +
                  std::to_string(w));
    }
  }
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw Error("model config: dropout_rate must be in [0, 1)");
}

std::vector<Tensor*> ModelParams::tensors() {
  std::vector<Tensor*> out{&embedding};
  for (std::size_t i = 0; i < filters.size(); ++i) {
    out.push_back(&filters[i]);
    out.push_back(&biases[i]);
  }
  out.push_back(&output_weights);
  out.push_back(&output_bias);
  return out;
}

std::vector<const Tensor*> ModelParams::tensors() const {
  std::vector<const Tensor*> out{&embedding};
  for (std::size_t i = 0; i < filters.size(); ++i) {
    out.push_back(&filters[i]);
    out.push_back(&biases[i]);
  }
  out.push_back(&output_weights);
  out.push_back(&output_bias);
  return out;
}

std::vector<std::string> ModelParams::tensor_names() const {
  std::vector<std::string> out{"embedding"};
  for (std::size_t i = 0; i < filters.size(); ++i) {
    const std::string w = std::to_string(config.filter_widths[i]);
    out.push_back("conv" + w + ".filters");
    out.push_back("conv" + w + ".bias");
  }
  out.push_back("output.weights");
  out.push_back("output.bias");
  return out;
}

bool ModelParams::all_finite() const {
  for (const Tensor* t : tensors()) {
    if (!t->all_finite()) return false;
  }
  return true;
}

ModelParams zero_params(const ModelConfig& config, std::size_t vocab_size) {
  config.validate();
  ModelParams p;
  p.config = config;
  p.embedding = Tensor(Shape{vocab_size, config.embed_dim});
  for (std::size_t w : config.filter_widths) {
    p.filters.emplace_back(Shape{config.filters_per_width, w, config.embed_dim});
    p.biases.emplace_back(Shape{config.filters_per_width});
  }
  p.output_weights = Tensor(Shape{config.num_classes, config.pooled_size()});
  p.output_bias = Tensor(Shape{config.num_classes});
  return p;
}

ModelParams zeros_like(const ModelParams& params) { return zero_params(params.config, params.vocab_size()); }

ModelParams init_params(const ModelConfig& config, std::size_t vocab_size, std::uint64_t seed) {
  ModelParams p = zero_params(config, vocab_size);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-0.05, 0.05);
  for (double& v : p.embedding.data()) v = uniform(rng);
  for (Tensor& f : p.filters) {
    for (double& v : f.data()) v = uniform(rng);
  }
  for (double& v : p.output_weights.data()) v = uniform(rng);
  if (vocab_size > text::kPadId) {
    for (std::size_t d = 0; d < config.embed_dim; ++d) p.embedding.at(text::kPadId, d) = 0.0;
  }
  return p;
}

std::vector<ad::Var> ModelVars::dense() const {
  std::vector<ad::Var> out;
  for (std::size_t i = 0; i < filters.size(); ++i) {
    out.push_back(filters[i]);
    out.push_back(biases[i]);
  }
  out.push_back(output_weights);
  out.push_back(output_bias);
  return out;
}

ModelVars bind(ad::Graph& graph, const ModelParams& params, bool requires_grad, bool with_embedding) {
  ModelVars vars;
  vars.params = &params;
  if (with_embedding) vars.embedding = graph.view(params.embedding, requires_grad);
  for (std::size_t i = 0; i < params.filters.size(); ++i) {
    vars.filters.push_back(graph.view(params.filters[i], requires_grad));
    vars.biases.push_back(graph.view(params.biases[i], requires_grad));
  }
  vars.output_weights = graph.view(params.output_weights, requires_grad);
  vars.output_bias = graph.view(params.output_bias, requires_grad);
  return vars;
}

Tensor lookup(const ModelParams& params, std::span<const std::size_t> token_ids) {
  const std::size_t dim = params.config.embed_dim;
  const std::size_t vocab = params.vocab_size();
  Tensor out(Shape{token_ids.size(), dim});
  for (std::size_t i = 0; i < token_ids.size(); ++i) {
    if (token_ids[i] >= vocab) {
      throw Error("forward: token id " + std::to_string(token_ids[i]) + " >= vocab size " + std::to_string(vocab));
    }
    for (std::size_t d = 0; d < dim; ++d) out.at(i, d) = params.embedding.at(token_ids[i], d);
  }
  return out;
}

ad::Var embed(const ModelVars& vars, std::span<const std::size_t> token_ids, bool requires_grad) {
  const ModelParams& params = *vars.params;
  if (token_ids.size() != params.config.max_seq_len) {
    throw ShapeError("forward: expected " + std::to_string(params.config.max_seq_len) + " token ids, got " +
                     std::to_string(token_ids.size()));
  }
  if (vars.embedding.valid()) {
    for (std::size_t id : token_ids) {
      if (id >= params.vocab_size()) {
        throw Error("forward: token id " + std::to_string(id) + " >= vocab size " +
                    std::to_string(params.vocab_size()));
      }
    }
    return ad::gather_rows(vars.embedding, token_ids);
  }
  return vars.output_bias.graph().leaf(lookup(params, token_ids), requires_grad);
}

ForwardResult forward_from_embeddings(const ModelVars& vars, ad::Var embedded, Mode mode, std::mt19937_64* rng) {
  const ModelConfig& cfg = vars.params->config;
  const Shape expected{cfg.max_seq_len, cfg.embed_dim};
  if (embedded.shape() != expected) {
    throw ShapeError("forward_from_embeddings: expected " + shape_to_string(expected) + ", got " +
                     shape_to_string(embedded.shape()));
  }
  std::vector<ad::Var> pooled;
  pooled.reserve(vars.filters.size());
  for (std::size_t i = 0; i < vars.filters.size(); ++i) {
    ad::Var conv = ad::conv1d(embedded, vars.filters[i]);
    ad::Var biased = ad::add(conv, ad::broadcast_rows(vars.biases[i], conv.shape()[0]));
    pooled.push_back(ad::max_over_time(ad::relu(biased)));
  }
  ad::Var features = ad::concat(pooled);
  if (mode == Mode::Train && cfg.dropout_rate > 0.0) {
    if (!rng) throw Error("forward: train mode needs a random generator for dropout");
    features = ad::dropout(features, cfg.dropout_rate, *rng);
  }
  ad::Var column = ad::reshape(features, Shape{cfg.pooled_size(), 1});
  ad::Var logits =
      ad::add(ad::reshape(ad::matmul(vars.output_weights, column), Shape{cfg.num_classes}), vars.output_bias);
  ForwardResult out;
  out.embedded = embedded;
  out.logits = logits;
  out.probs = ad::softmax(logits);
  return out;
}

ForwardResult forward(const ModelVars& vars, std::span<const std::size_t> token_ids, Mode mode,
                      std::mt19937_64* rng, bool embedded_requires_grad) {
  return forward_from_embeddings(vars, embed(vars, token_ids, embedded_requires_grad), mode, rng);
}

Prediction predict(const ModelParams& params, std::span<const std::size_t> token_ids) {
  ad::Graph graph;
  ModelVars vars = bind(graph, params, false);
  return forward(vars, token_ids, Mode::Eval).prediction();
}

std::vector<double> predict_scores(const ModelParams& params, const std::vector<text::TokenizedExample>& examples,
                                   std::size_t positive_class) {
  if (positive_class >= params.config.num_classes) throw Error("predict_scores: class out of range");
  // Exceptions cannot cross the parallel region, so validate up front.
  for (const auto& ex : examples) {
    if (ex.token_ids.size() != params.config.max_seq_len) throw ShapeError("predict_scores: wrong sequence length");
    for (std::size_t id : ex.token_ids) {
      if (id >= params.vocab_size()) throw Error("predict_scores: token id " + std::to_string(id) + " out of range");
    }
  }
  std::vector<double> scores(examples.size());
  const auto n = static_cast<std::ptrdiff_t>(examples.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    scores[static_cast<std::size_t>(i)] =
        predict(params, examples[static_cast<std::size_t>(i)].token_ids).prob(positive_class);
  }
  return scores;
}

}  // namespace attriprior::model
