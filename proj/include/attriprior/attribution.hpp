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

// Path Integrated Gradients along the straight line from a baseline to the
// input, discretised with a Riemann sum over `steps` interpolation points.

#include <functional>

#include "attriprior/autodiff.hpp"
#include "attriprior/model.hpp"

namespace attriprior::attribution {

enum class RiemannRule { Right, Midpoint };

struct IGConfig {
  static constexpr std::size_t kDefaultSteps = 50;
  static constexpr std::size_t kFastSteps = 10;

  std::size_t steps = kDefaultSteps;
  std::size_t target_class = 1;
  RiemannRule rule = RiemannRule::Right;

  void validate() const;
  /// Interpolation coefficient of step j in [0, steps).
  double alpha(std::size_t j) const;
};

struct AttributionVector {
  Tensor per_token;  // [seq]
  Tensor per_dim;    // [seq x dim], empty rank-0 tensor when absent

  bool has_per_dim() const { return per_dim.rank() == 2; }
};

struct BaselineInput {
  Tensor embedded;  // [seq x dim]
};

/// Scalar function of an embedded input, built inside `graph`.
using PathFunction = std::function<ad::Var(ad::Graph& graph, ad::Var input)>;

/// Posterior of `target_class`, binding `params` fresh into each graph.
PathFunction model_posterior(const model::ModelParams& params, std::size_t target_class);
/// Posterior of `target_class` using parameters already bound in their graph.
PathFunction model_posterior(const model::ModelVars& vars, std::size_t target_class);

/// Numeric attributions; one scratch graph per interpolation step.
AttributionVector integrated_gradients(const PathFunction& f, const Tensor& input, const Tensor& baseline,
                                       const IGConfig& cfg);
AttributionVector integrated_gradients(const model::ModelParams& params, const Tensor& input,
                                       const BaselineInput& baseline, const IGConfig& cfg);

struct GraphAttribution {
  ad::Var per_dim;    // [seq x dim]
  ad::Var per_token;  // [seq]
};

/// Differentiable attributions: every step is recorded in `graph` and the
/// input gradients are taken with create_graph, so the result can be
/// differentiated with respect to parameters bound in `graph`. Interpolated
/// inputs are detached constants, so nothing flows back into the embedding.
GraphAttribution integrated_gradients_graph(ad::Graph& graph, const PathFunction& f, const Tensor& input,
                                            const Tensor& baseline, const IGConfig& cfg);

/// per_token[i] = sum_d per_dim[i][d]
Tensor token_attributions(const AttributionVector& av);

/// The <pad> embedding row repeated `max_seq_len` times.
BaselineInput make_pad_baseline(const model::ModelParams& params, std::size_t max_seq_len);

struct BaselineDiagnostic {
  double max_prob = 0.0;
  bool warn = false;  // the baseline prediction is not high-entropy
};
inline constexpr double kBaselineWarnProb = 0.75;
BaselineDiagnostic check_baseline(const model::ModelParams& params, const BaselineInput& baseline);

/// Evaluates f at a point without keeping the graph.
double evaluate(const PathFunction& f, const Tensor& point);

/// |sum(IG) - (f(input) - f(baseline))|
double completeness_gap(const PathFunction& f, const Tensor& input, const Tensor& baseline, const IGConfig& cfg);
double completeness_gap(const model::ModelParams& params, const Tensor& input, const BaselineInput& baseline,
                        const IGConfig& cfg);

/// Attributions for one encoded example against the pad baseline.
AttributionVector attribute_example(const model::ModelParams& params, const std::vector<std::size_t>& token_ids,
                                    const IGConfig& cfg);

}  // namespace attriprior::attribution
