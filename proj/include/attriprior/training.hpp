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

// Joint objective: cross-entropy plus lambda times an L2 penalty between the
// Integrated Gradients attributions of selected terms and a target value.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "attriprior/attribution.hpp"
#include "attriprior/autodiff.hpp"
#include "attriprior/error.hpp"
#include "attriprior/evaluation.hpp"
#include "attriprior/model.hpp"
#include "attriprior/text_pipeline.hpp"

namespace attriprior::training {

inline constexpr double kFairnessLambda = 1e6;
inline constexpr double kScarcityLambda = 1e5;
inline constexpr double kDefaultImportanceWeight = 10.0;
inline constexpr double kLogFloor = 1e-12;

/// The user's prior: tokens in `terms` should have attribution `target`.
struct TargetSpec {
  text::TermList terms;
  double target = 0.0;
  double lambda = 0.0;
  std::size_t target_class = 1;

  /// Identity terms pushed to zero attribution.
  static TargetSpec fairness(text::TermList identity_terms);
  /// Toxic terms pushed to attribution one.
  static TargetSpec scarcity(text::TermList toxic_terms);

  void validate(std::size_t num_classes) const;
};

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  AdamConfig adam;
  attribution::IGConfig ig;
  std::uint64_t seed = 0;
  double importance_weight = kDefaultImportanceWeight;
  std::size_t runs = 5;

  void validate() const;
};

enum class TrainMode { Baseline, Importance, TokReplace, Joint, Finetune };

std::string to_string(TrainMode mode);
TrainMode parse_train_mode(const std::string& name);

class Adam {
 public:
  Adam(const model::ModelParams& like, AdamConfig cfg);

  void step(model::ModelParams& params, const model::ModelParams& grads);
  std::size_t steps() const { return steps_; }

 private:
  AdamConfig cfg_;
  model::ModelParams m_;
  model::ModelParams v_;
  std::size_t steps_ = 0;
};

/// -weight * log(max(p_label, 1e-12))
ad::Var cross_entropy(ad::Var probs, std::size_t label, double weight = 1.0);

/// t_i = target where token i is a selected term, t_i = a_i otherwise.
Tensor build_target_vector(const text::TokenizedExample& example, const TargetSpec& spec, const Tensor& attributions);

/// sum_i (a_i - t_i)^2
ad::Var prior_loss(ad::Var attributions, const Tensor& target);

/// Whether any visible token of `example` is a selected term.
bool has_selected_terms(const text::TokenizedExample& example, const TargetSpec& spec);

struct ExampleLoss {
  ad::Var total;  // weight_ce * ce + weight_prior * prior
  ad::Var cross_entropy;
  ad::Var prior;  // invalid when the example has no selected terms or lambda is zero
  ad::Var embedded;
};

/// Loss of one example in `graph`. `ce_scale` and `prior_scale` multiply the
/// two terms (batch means use 1/B and lambda/B). Attributions are always
/// computed in eval mode; `mode` governs dropout on the cross-entropy pass.
ExampleLoss example_loss(ad::Graph& graph, const model::ModelVars& vars, const text::TokenizedExample& example,
                         const TargetSpec* spec, const attribution::IGConfig& ig, model::Mode mode,
                         std::mt19937_64* rng, double ce_scale, double prior_scale);

/// Mean cross-entropy over the batch plus lambda times the mean prior loss,
/// as one differentiable node. Examples without selected terms skip IG.
ad::Var joint_loss(ad::Graph& graph, const model::ModelVars& vars, std::span<const text::TokenizedExample> batch,
                   const TargetSpec* spec, const attribution::IGConfig& ig, model::Mode mode = model::Mode::Eval,
                   std::mt19937_64* rng = nullptr);

struct LossParts {
  double total = 0.0;
  double cross_entropy = 0.0;
  double prior = 0.0;  // unscaled mean prior loss
};

struct BatchGradient {
  model::ModelParams grads;
  LossParts loss;
};

/// Gradient of the batch loss with respect to every parameter. Examples are
/// processed in parallel, one graph each, and summed in batch order, so the
/// result does not depend on the thread count.
BatchGradient batch_gradient(const model::ModelParams& params, std::span<const text::TokenizedExample* const> batch,
                             const TargetSpec* spec, const TrainConfig& cfg, model::Mode mode,
                             std::uint64_t dropout_stream);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;
  double cross_entropy = 0.0;
  double prior = 0.0;
  double dev_accuracy = 0.0;
  double dev_f1 = 0.0;
  std::optional<double> dev_auc;
};

struct TrainResult {
  model::ModelParams params;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 1-based, 0 when no epoch ran
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Index of the first maximum.
std::size_t select_best_epoch(std::span<const double> dev_f1);

/// Minibatch Adam on cross-entropy (plus the prior term when `spec` is given).
/// Returns the snapshot with the best dev F1.
TrainResult train(const model::ModelParams& initial, const std::vector<text::TokenizedExample>& train_split,
                  const std::vector<text::TokenizedExample>& dev_split, const TargetSpec* spec,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Continues from trained parameters under the joint loss with fresh Adam
/// state for `epochs` epochs and returns the final parameters.
TrainResult finetune(const model::ModelParams& trained, const std::vector<text::TokenizedExample>& train_split,
                     const std::vector<text::TokenizedExample>& dev_split, const TargetSpec& spec,
                     const TrainConfig& cfg, std::size_t epochs = 2, const EpochCallback& on_epoch = {});

/// Label-stratified uniform sample without replacement of ceil(ratio * N)
/// items; original order is preserved.
template <class T>
std::vector<T> subsample_training(const std::vector<T>& split, double ratio, std::uint64_t seed);

// Data preparation for the training modes.

struct Splits {
  std::vector<text::LabeledText> train, dev, test;
};

struct DataOptions {
  std::size_t max_seq_len = text::kDefaultMaxSeqLen;
  std::size_t min_frequency = text::kDefaultMinFrequency;
  double importance_weight = kDefaultImportanceWeight;
};

struct PreparedData {
  text::Vocabulary vocab;
  std::vector<text::TokenizedExample> train, dev, test;
};

/// Tokenizes all splits and builds the vocabulary from the train split.
/// TokReplace maps identity terms to <id> in every split; Importance weights
/// training examples containing identity terms.
PreparedData prepare_data(const Splits& splits, TrainMode mode, const text::TermList* identity,
                          const DataOptions& options);

/// Re-encodes a split for an existing vocabulary, applying the mode's token
/// replacement.
std::vector<text::TokenizedExample> encode_for_mode(const std::vector<text::LabeledText>& rows,
                                                    const text::Vocabulary& vocab, TrainMode mode,
                                                    const text::TermList* identity, std::size_t max_seq_len);

struct SweepPoint {
  double lambda = 0.0;
  double dev_f1 = 0.0;
};

/// Trains one joint model per lambda = 10^e for e in `exponents` and reports
/// the best dev F1 of each.
std::vector<SweepPoint> sweep_lambda(const model::ModelParams& initial,
                                     const std::vector<text::TokenizedExample>& train_split,
                                     const std::vector<text::TokenizedExample>& dev_split, TargetSpec spec,
                                     const TrainConfig& cfg, std::span<const int> exponents);

// ---------------------------------------------------------------------------

template <class T>
std::vector<T> subsample_training(const std::vector<T>& split, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw Error("subsample_training: ratio must be in (0, 1]");
  if (ratio == 1.0) return split;
  const std::size_t n = split.size();
  const auto total = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - 1e-9));

  std::vector<int> labels;
  for (const T& item : split) labels.push_back(item.label);
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());

  // Largest-remainder allocation of `total` across classes.
  std::vector<std::vector<std::size_t>> members(labels.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(std::lower_bound(labels.begin(), labels.end(), split[i].label) - labels.begin());
    members[c].push_back(i);
  }
  std::vector<std::size_t> quota(labels.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    const double exact = static_cast<double>(total) * static_cast<double>(members[c].size()) / static_cast<double>(n);
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[c];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total; ++r, ++assigned) ++quota[remainders[r % remainders.size()].second];

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    std::vector<std::size_t> pool = members[c];
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(std::min(quota[c], pool.size()));
    chosen.insert(chosen.end(), pool.begin(), pool.end());
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<T> out;
  out.reserve(chosen.size());
  for (std::size_t i : chosen) out.push_back(split[i]);
  return out;
}

}  // namespace attriprior::training
