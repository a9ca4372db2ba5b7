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

#include "attriprior/training.hpp"

#include <exception>

#include "attriprior/kernels.hpp"

namespace attriprior::training {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

std::size_t visible_length(const text::TokenizedExample& ex) { return std::min(ex.tokens.size(), ex.token_ids.size()); }

void add_into(Tensor& dst, const Tensor& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

struct ExampleGrad {
  std::vector<Tensor> dense;  // ModelVars::dense() order
  Tensor embedded;            // [seq x dim]
  double ce = 0.0;
  double prior = 0.0;
  double total = 0.0;
};

}  // namespace

TargetSpec TargetSpec::fairness(text::TermList identity_terms) {
  return TargetSpec{std::move(identity_terms), 0.0, kFairnessLambda, 1};
}

TargetSpec TargetSpec::scarcity(text::TermList toxic_terms) {
  return TargetSpec{std::move(toxic_terms), 1.0, kScarcityLambda, 1};
}

void TargetSpec::validate(std::size_t num_classes) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error("target spec: lambda must be a finite nonnegative value");
  if (target_class >= num_classes) throw Error("target spec: target class out of range");
  if (!std::isfinite(target)) throw Error("target spec: target value must be finite");
}

void TrainConfig::validate() const {
  if (epochs == 0 && runs == 0) throw Error("train config: nothing to do");
  if (batch_size == 0) throw Error("train config: batch_size must be positive");
  if (!(adam.learning_rate > 0.0)) throw Error("train config: learning_rate must be positive");
  if (!(importance_weight > 0.0)) throw Error("train config: importance_weight must be positive");
  ig.validate();
}

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::Baseline: return "baseline";
    case TrainMode::Importance: return "importance";
    case TrainMode::TokReplace: return "tok_replace";
    case TrainMode::Joint: return "joint";
    case TrainMode::Finetune: return "finetune";
  }
  return "unknown";
}

TrainMode parse_train_mode(const std::string& name) {
  for (TrainMode m : {TrainMode::Baseline, TrainMode::Importance, TrainMode::TokReplace, TrainMode::Joint,
                      TrainMode::Finetune}) {
    if (to_string(m) == name) return m;
  }
  throw Error("unknown training mode '" + name + "'");
}

Adam::Adam(const model::ModelParams& like, AdamConfig cfg)
    : cfg_(cfg), m_(model::zeros_like(like)), v_(model::zeros_like(like)) {}

void Adam::step(model::ModelParams& params, const model::ModelParams& grads) {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double bias1 = 1.0 - std::pow(cfg_.beta1, t);
  const double bias2 = 1.0 - std::pow(cfg_.beta2, t);
  auto p = params.tensors();
  auto g = grads.tensors();
  auto m = m_.tensors();
  auto v = v_.tensors();
  for (std::size_t k = 0; k < p.size(); ++k) {
    auto pd = p[k]->data();
    auto gd = g[k]->data();
    auto md = m[k]->data();
    auto vd = v[k]->data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      md[i] = cfg_.beta1 * md[i] + (1.0 - cfg_.beta1) * gd[i];
      vd[i] = cfg_.beta2 * vd[i] + (1.0 - cfg_.beta2) * gd[i] * gd[i];
      pd[i] -= cfg_.learning_rate * (md[i] / bias1) / (std::sqrt(vd[i] / bias2) + cfg_.epsilon);
    }
  }
}

ad::Var cross_entropy(ad::Var probs, std::size_t label, double weight) {
  if (probs.shape().size() != 1 || label >= probs.shape()[0]) {
    throw Error("cross_entropy: class " + std::to_string(label) + " invalid for probabilities " +
                shape_to_string(probs.shape()));
  }
  return ad::scale(ad::log(ad::clamp_min(ad::select(probs, label), kLogFloor)), -weight);
}

bool has_selected_terms(const text::TokenizedExample& example, const TargetSpec& spec) {
  for (std::size_t i = 0; i < visible_length(example); ++i) {
    if (spec.terms.contains(example.tokens[i])) return true;
  }
  return false;
}

Tensor build_target_vector(const text::TokenizedExample& example, const TargetSpec& spec, const Tensor& attributions) {
  Tensor t = attributions;
  const std::size_t n = std::min(visible_length(example), t.numel());
  for (std::size_t i = 0; i < n; ++i) {
    if (spec.terms.contains(example.tokens[i])) t[i] = spec.target;
  }
  return t;
}

ad::Var prior_loss(ad::Var attributions, const Tensor& target) {
  if (attributions.shape() != target.shape()) {
    throw ShapeError("prior_loss: attributions " + shape_to_string(attributions.shape()) + " vs target " +
                     shape_to_string(target.shape()));
  }
  return ad::sum(ad::square(ad::sub(attributions, attributions.graph().constant(target))));
}

ExampleLoss example_loss(ad::Graph& graph, const model::ModelVars& vars, const text::TokenizedExample& example,
                         const TargetSpec* spec, const attribution::IGConfig& ig, model::Mode mode,
                         std::mt19937_64* rng, double ce_scale, double prior_scale) {
  ExampleLoss out;
  out.embedded = model::embed(vars, example.token_ids, true);
  const auto fwd = model::forward_from_embeddings(vars, out.embedded, mode, rng);
  out.cross_entropy = cross_entropy(fwd.probs, static_cast<std::size_t>(example.label), example.weight);
  out.total = ad::scale(out.cross_entropy, ce_scale);
  if (spec && spec->lambda > 0.0 && has_selected_terms(example, *spec)) {
    const model::ModelParams& params = *vars.params;
    const auto baseline = attribution::make_pad_baseline(params, params.config.max_seq_len);
    attribution::IGConfig cfg = ig;
    cfg.target_class = spec->target_class;
    // Interpolation starts from the looked-up values only; the graph below
    // never reaches the embedding table.
    const auto attr = attribution::integrated_gradients_graph(
        graph, attribution::model_posterior(vars, cfg.target_class), out.embedded.value(), baseline.embedded, cfg);
    const Tensor target = build_target_vector(example, *spec, attr.per_token.value());
    out.prior = prior_loss(attr.per_token, target);
    out.total = ad::add(out.total, ad::scale(out.prior, prior_scale));
  }
  return out;
}

ad::Var joint_loss(ad::Graph& graph, const model::ModelVars& vars, std::span<const text::TokenizedExample> batch,
                   const TargetSpec* spec, const attribution::IGConfig& ig, model::Mode mode, std::mt19937_64* rng) {
  if (batch.empty()) throw Error("joint_loss: empty batch");
  if (spec) spec->validate(vars.params->config.num_classes);
  const double inv = 1.0 / static_cast<double>(batch.size());
  const double lambda = spec ? spec->lambda : 0.0;
  ad::Var total;
  for (const auto& ex : batch) {
    ad::Var loss = example_loss(graph, vars, ex, spec, ig, mode, rng, inv, lambda * inv).total;
    total = total.valid() ? ad::add(total, loss) : loss;
  }
  return total;
}

BatchGradient batch_gradient(const model::ModelParams& params, std::span<const text::TokenizedExample* const> batch,
                             const TargetSpec* spec, const TrainConfig& cfg, model::Mode mode,
                             std::uint64_t dropout_stream) {
  if (batch.empty()) throw Error("batch_gradient: empty batch");
  if (spec) spec->validate(params.config.num_classes);
  const double inv = 1.0 / static_cast<double>(batch.size());
  const double lambda = spec ? spec->lambda : 0.0;
  std::vector<ExampleGrad> per_example(batch.size());
  std::vector<std::exception_ptr> errors(batch.size());
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    try {
      ad::Graph graph;
      const model::ModelVars vars = model::bind(graph, params, true);
      std::mt19937_64 rng(mix(dropout_stream, i));
      const ExampleLoss loss = example_loss(graph, vars, *batch[i], spec, cfg.ig, mode, &rng, inv, lambda * inv);
      std::vector<ad::Var> wrt = vars.dense();
      wrt.push_back(loss.embedded);
      std::vector<Tensor> grads = graph.gradients(loss.total, wrt);
      ExampleGrad& eg = per_example[i];
      eg.embedded = std::move(grads.back());
      grads.pop_back();
      eg.dense = std::move(grads);
      eg.ce = loss.cross_entropy.item();
      eg.prior = loss.prior.valid() ? loss.prior.item() : 0.0;
      eg.total = loss.total.item();
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  BatchGradient out{model::zeros_like(params), {}};
  auto slots = out.grads.tensors();  // embedding first, then dense order
  const std::size_t dim = params.config.embed_dim;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const ExampleGrad& eg = per_example[i];
    for (std::size_t k = 0; k < eg.dense.size(); ++k) add_into(*slots[k + 1], eg.dense[k]);
    const auto& ids = batch[i]->token_ids;
    for (std::size_t pos = 0; pos < ids.size(); ++pos) {
      for (std::size_t d = 0; d < dim; ++d) out.grads.embedding.at(ids[pos], d) += eg.embedded.at(pos, d);
    }
    out.loss.total += eg.total;
    out.loss.cross_entropy += eg.ce * inv;
    out.loss.prior += eg.prior * inv;
  }
  return out;
}

std::size_t select_best_epoch(std::span<const double> dev_f1) {
  if (dev_f1.empty()) throw Error("select_best_epoch: empty history");
  return static_cast<std::size_t>(std::max_element(dev_f1.begin(), dev_f1.end()) - dev_f1.begin());
}

namespace {

TrainResult run_epochs(const model::ModelParams& initial, const std::vector<text::TokenizedExample>& train_split,
                       const std::vector<text::TokenizedExample>& dev_split, const TargetSpec* spec,
                       const TrainConfig& cfg, std::size_t epochs, bool keep_best, const EpochCallback& on_epoch) {
  if (train_split.empty()) throw Error("train: empty training split");
  if (dev_split.empty()) throw Error("train: empty dev split");
  cfg.validate();
  if (spec) spec->validate(initial.config.num_classes);
  kernels::configure_threads_from_env();

  TrainResult result;
  result.params = initial;
  model::ModelParams current = initial;
  Adam adam(current, cfg.adam);
  std::vector<std::size_t> order(train_split.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> dev_labels;
  for (const auto& ex : dev_split) dev_labels.push_back(ex.label);
  double best_f1 = -1.0;

  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    std::mt19937_64 shuffle_rng(mix(cfg.seed, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochRecord record;
    record.epoch = epoch;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<const text::TokenizedExample*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&train_split[order[i]]);
      const BatchGradient bg = batch_gradient(current, batch, spec, cfg, model::Mode::Train,
                                              mix(mix(cfg.seed, epoch), batch_index + 0x5151));
      adam.step(current, bg.grads);
      if (!current.all_finite()) throw NumericError("train: parameters became non-finite");
      const double share = static_cast<double>(end - start) / static_cast<double>(order.size());
      record.loss += bg.loss.total * share;
      record.cross_entropy += bg.loss.cross_entropy * share;
      record.prior += bg.loss.prior * share;
    }
    const std::vector<double> scores = model::predict_scores(current, dev_split, 1);
    const auto metrics = evaluation::classification_metrics(scores, dev_labels);
    record.dev_accuracy = metrics.accuracy;
    record.dev_f1 = metrics.f1;
    record.dev_auc = metrics.auc;
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);
    if (!keep_best || record.dev_f1 > best_f1) {
      best_f1 = record.dev_f1;
      result.params = current;
      result.best_epoch = epoch;
    }
  }
  return result;
}

}  // namespace

TrainResult train(const model::ModelParams& initial, const std::vector<text::TokenizedExample>& train_split,
                  const std::vector<text::TokenizedExample>& dev_split, const TargetSpec* spec,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  return run_epochs(initial, train_split, dev_split, spec, cfg, cfg.epochs, true, on_epoch);
}

TrainResult finetune(const model::ModelParams& trained, const std::vector<text::TokenizedExample>& train_split,
                     const std::vector<text::TokenizedExample>& dev_split, const TargetSpec& spec,
                     const TrainConfig& cfg, std::size_t epochs, const EpochCallback& on_epoch) {
  if (epochs == 0) return TrainResult{trained, {}, 0};
  return run_epochs(trained, train_split, dev_split, &spec, cfg, epochs, false, on_epoch);
}

std::vector<text::TokenizedExample> encode_for_mode(const std::vector<text::LabeledText>& rows,
                                                    const text::Vocabulary& vocab, TrainMode mode,
                                                    const text::TermList* identity, std::size_t max_seq_len) {
  if (mode == TrainMode::TokReplace && !identity) throw Error("tok_replace mode needs an identity term list");
  std::vector<text::TokenizedExample> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    text::Tokens tokens = text::tokenize(row.text);
    if (mode == TrainMode::TokReplace) tokens = text::replace_identity_tokens(tokens, *identity);
    out.push_back(text::make_example(std::move(tokens), row.label, vocab, max_seq_len));
  }
  return out;
}

PreparedData prepare_data(const Splits& splits, TrainMode mode, const text::TermList* identity,
                          const DataOptions& options) {
  if (splits.train.empty()) throw Error("prepare_data: empty training split");
  if (mode == TrainMode::Importance && !identity) throw Error("importance mode needs an identity term list");
  if (mode == TrainMode::TokReplace && !identity) throw Error("tok_replace mode needs an identity term list");
  std::vector<text::Tokens> corpus;
  corpus.reserve(splits.train.size());
  for (const auto& row : splits.train) {
    text::Tokens tokens = text::tokenize(row.text);
    if (mode == TrainMode::TokReplace) tokens = text::replace_identity_tokens(tokens, *identity);
    corpus.push_back(std::move(tokens));
  }
  PreparedData data;
  data.vocab = text::Vocabulary::build(corpus, options.min_frequency);
  data.train = encode_for_mode(splits.train, data.vocab, mode, identity, options.max_seq_len);
  data.dev = encode_for_mode(splits.dev, data.vocab, mode, identity, options.max_seq_len);
  data.test = encode_for_mode(splits.test, data.vocab, mode, identity, options.max_seq_len);
  if (mode == TrainMode::Importance) {
    for (auto& ex : data.train) {
      if (identity->any_in(ex.tokens)) ex.weight = options.importance_weight;
    }
  }
  return data;
}

std::vector<SweepPoint> sweep_lambda(const model::ModelParams& initial,
                                     const std::vector<text::TokenizedExample>& train_split,
                                     const std::vector<text::TokenizedExample>& dev_split, TargetSpec spec,
                                     const TrainConfig& cfg, std::span<const int> exponents) {
  std::vector<SweepPoint> out;
  for (int e : exponents) {
    spec.lambda = std::pow(10.0, e);
    const TrainResult r = train(initial, train_split, dev_split, &spec, cfg);
    double best = 0.0;
    for (const auto& rec : r.history) best = std::max(best, rec.dev_f1);
    out.push_back({spec.lambda, best});
  }
  return out;
}

}  // namespace attriprior::training
