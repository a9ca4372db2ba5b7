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

#include "attriprior/attribution.hpp"

#include <algorithm>

#include "attriprior/error.hpp"

namespace attriprior::attribution {
namespace {

void check_shapes(const Tensor& input, const Tensor& baseline) {
  if (input.rank() != 2 || input.shape() != baseline.shape()) {
    throw ShapeError("integrated_gradients: input " + shape_to_string(input.shape()) + " vs baseline " +
                     shape_to_string(baseline.shape()));
  }
}

Tensor interpolate(const Tensor& baseline, const Tensor& diff, double alpha) {
  Tensor point = baseline;
  auto p = point.data();
  auto d = diff.data();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] += alpha * d[i];
  return point;
}

Tensor difference(const Tensor& input, const Tensor& baseline) {
  Tensor diff = input;
  auto d = diff.data();
  auto b = baseline.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] -= b[i];
  return diff;
}

Tensor row_sum(const Tensor& m) {
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  Tensor out(Shape{rows});
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += m.at(r, c);
    out[r] = acc;
  }
  return out;
}

}  // namespace

void IGConfig::validate() const {
  if (steps < 1) throw Error("integrated_gradients: steps must be >= 1");
}

double IGConfig::alpha(std::size_t j) const {
  const double m = static_cast<double>(steps);
  const double k = static_cast<double>(j);
  return rule == RiemannRule::Right ? (k + 1.0) / m : (k + 0.5) / m;
}

PathFunction model_posterior(const model::ModelParams& params, std::size_t target_class) {
  if (target_class >= params.config.num_classes) throw Error("integrated_gradients: target class out of range");
  return [&params, target_class](ad::Graph& graph, ad::Var input) {
    const model::ModelVars vars = model::bind(graph, params, false);
    return ad::select(model::forward_from_embeddings(vars, input, model::Mode::Eval).probs, target_class);
  };
}

PathFunction model_posterior(const model::ModelVars& vars, std::size_t target_class) {
  if (target_class >= vars.params->config.num_classes) {
    throw Error("integrated_gradients: target class out of range");
  }
  return [vars, target_class](ad::Graph&, ad::Var input) {
    return ad::select(model::forward_from_embeddings(vars, input, model::Mode::Eval).probs, target_class);
  };
}

AttributionVector integrated_gradients(const PathFunction& f, const Tensor& input, const Tensor& baseline,
                                       const IGConfig& cfg) {
  cfg.validate();
  check_shapes(input, baseline);
  const Tensor diff = difference(input, baseline);
  Tensor total(input.shape());
  for (std::size_t j = 0; j < cfg.steps; ++j) {
    ad::Graph graph;
    ad::Var point = graph.leaf(interpolate(baseline, diff, cfg.alpha(j)), true);
    ad::Var out = f(graph, point);
    const std::vector<ad::Var> wrt{point};
    const Tensor g = graph.gradients(out, wrt)[0];
    auto t = total.data();
    auto gv = g.data();
    for (std::size_t i = 0; i < t.size(); ++i) t[i] += gv[i];
  }
  AttributionVector av;
  av.per_dim = std::move(total);
  const double inv = 1.0 / static_cast<double>(cfg.steps);
  auto p = av.per_dim.data();
  auto d = diff.data();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = d[i] * (p[i] * inv);
  av.per_token = row_sum(av.per_dim);
  return av;
}

AttributionVector integrated_gradients(const model::ModelParams& params, const Tensor& input,
                                       const BaselineInput& baseline, const IGConfig& cfg) {
  return integrated_gradients(model_posterior(params, cfg.target_class), input, baseline.embedded, cfg);
}

GraphAttribution integrated_gradients_graph(ad::Graph& graph, const PathFunction& f, const Tensor& input,
                                            const Tensor& baseline, const IGConfig& cfg) {
  cfg.validate();
  check_shapes(input, baseline);
  const Tensor diff = difference(input, baseline);
  ad::Var total;
  for (std::size_t j = 0; j < cfg.steps; ++j) {
    // A fresh leaf per step: the interpolated point is a constant with
    // respect to everything upstream of it, including the embedding table.
    ad::Var point = graph.leaf(interpolate(baseline, diff, cfg.alpha(j)), true);
    ad::Var out = f(graph, point);
    const std::vector<ad::Var> wrt{point};
    ad::Var g = graph.grad(out, wrt, true)[0];
    total = total.valid() ? ad::add(total, g) : g;
  }
  GraphAttribution ga;
  ga.per_dim = ad::mul(graph.constant(diff), ad::scale(total, 1.0 / static_cast<double>(cfg.steps)));
  ga.per_token = ad::row_sums(ga.per_dim);
  return ga;
}

Tensor token_attributions(const AttributionVector& av) {
  if (!av.has_per_dim()) throw Error("token_attributions: per-dimension attributions absent");
  return row_sum(av.per_dim);
}

BaselineInput make_pad_baseline(const model::ModelParams& params, std::size_t max_seq_len) {
  const std::vector<std::size_t> pads(max_seq_len, text::kPadId);
  return BaselineInput{model::lookup(params, pads)};
}

BaselineDiagnostic check_baseline(const model::ModelParams& params, const BaselineInput& baseline) {
  ad::Graph graph;
  const model::ModelVars vars = model::bind(graph, params, false);
  const Tensor probs =
      model::forward_from_embeddings(vars, graph.constant(baseline.embedded), model::Mode::Eval).probs.value();
  BaselineDiagnostic diag;
  diag.max_prob = *std::max_element(probs.data().begin(), probs.data().end());
  diag.warn = diag.max_prob > kBaselineWarnProb;
  return diag;
}

double evaluate(const PathFunction& f, const Tensor& point) {
  ad::Graph graph;
  return f(graph, graph.constant(point)).item();
}

double completeness_gap(const PathFunction& f, const Tensor& input, const Tensor& baseline, const IGConfig& cfg) {
  const AttributionVector av = integrated_gradients(f, input, baseline, cfg);
  return std::abs(av.per_token.sum() - (evaluate(f, input) - evaluate(f, baseline)));
}

double completeness_gap(const model::ModelParams& params, const Tensor& input, const BaselineInput& baseline,
                        const IGConfig& cfg) {
  return completeness_gap(model_posterior(params, cfg.target_class), input, baseline.embedded, cfg);
}

AttributionVector attribute_example(const model::ModelParams& params, const std::vector<std::size_t>& token_ids,
                                    const IGConfig& cfg) {
  const Tensor input = model::lookup(params, token_ids);
  return integrated_gradients(params, input, make_pad_baseline(params, token_ids.size()), cfg);
}

}  // namespace attriprior::attribution
