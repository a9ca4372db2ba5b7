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

#include "attriprior/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include "attriprior/error.hpp"

namespace attriprior::evaluation {
namespace {

void check_inputs(const char* op, std::size_t scores, std::size_t labels) {
  if (scores != labels) throw Error(std::string(op) + ": scores and labels differ in length");
  if (scores == 0) throw Error(std::string(op) + ": empty input");
}

double row_norm(const Tensor& emb, std::size_t row) {
  double acc = 0.0;
  for (std::size_t d = 0; d < emb.dim(1); ++d) acc += emb.at(row, d) * emb.at(row, d);
  return std::sqrt(acc);
}

// Positions of `ex` that hold a real (non-padding) token.
std::size_t visible_length(const text::TokenizedExample& ex) { return std::min(ex.tokens.size(), ex.token_ids.size()); }

}  // namespace

MetricReport classification_metrics(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_inputs("classification_metrics", scores.size(), labels.size());
  MetricReport r;
  r.n = scores.size();
  for (std::size_t i = 0; i < r.n; ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++r.tp;
    if (predicted && !actual) ++r.fp;
    if (!predicted && !actual) ++r.tn;
    if (!predicted && actual) ++r.fn;
  }
  const double n = static_cast<double>(r.n);
  r.accuracy = static_cast<double>(r.tp + r.tn) / n;
  const std::size_t f1_den = 2 * r.tp + r.fp + r.fn;
  r.f1 = f1_den == 0 ? 0.0 : 2.0 * static_cast<double>(r.tp) / static_cast<double>(f1_den);
  r.fp_rate = static_cast<double>(r.fp) / n;
  r.fn_rate = static_cast<double>(r.fn) / n;
  r.auc = roc_auc(scores, labels);
  return r;
}

std::optional<double> roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs("roc_auc", scores.size(), labels.size());
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Midranks (1-based) over tie groups.
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        positive_rank_sum += midrank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;
  const double p = static_cast<double>(positives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

BiasReport equality_differences(std::span<const double> scores, std::span<const int> labels,
                                std::span<const std::string> term_of_example, double threshold) {
  check_inputs("equality_differences", scores.size(), labels.size());
  if (term_of_example.size() != scores.size()) throw Error("equality_differences: one term tag per example required");
  BiasReport report;
  report.auc = roc_auc(scores, labels);

  struct Counts {
    std::size_t n = 0, neg = 0, pos = 0, fp = 0, fn = 0;
  };
  Counts overall;
  std::map<std::string, Counts> by_term;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] == 1;
    for (Counts* c : {&overall, &by_term[term_of_example[i]]}) {
      ++c->n;
      if (actual) {
        ++c->pos;
        if (!predicted) ++c->fn;
      } else {
        ++c->neg;
        if (predicted) ++c->fp;
      }
    }
  }
  if (overall.neg == 0 || overall.pos == 0) {
    throw Error("equality_differences: both labels must be present overall");
  }
  report.overall_fpr = static_cast<double>(overall.fp) / static_cast<double>(overall.neg);
  report.overall_fnr = static_cast<double>(overall.fn) / static_cast<double>(overall.pos);
  for (const auto& [term, c] : by_term) {
    TermRates rates;
    rates.n = c.n;
    rates.negatives = c.neg;
    rates.positives = c.pos;
    if (c.neg > 0) {
      rates.fpr = static_cast<double>(c.fp) / static_cast<double>(c.neg);
      report.fped += std::abs(report.overall_fpr - *rates.fpr);
    } else {
      report.skipped_fpr.push_back(term);
    }
    if (c.pos > 0) {
      rates.fnr = static_cast<double>(c.fn) / static_cast<double>(c.pos);
      report.fned += std::abs(report.overall_fnr - *rates.fnr);
    } else {
      report.skipped_fnr.push_back(term);
    }
    report.per_term.emplace(term, rates);
  }
  return report;
}

std::vector<std::size_t> filter_by_terms(const std::vector<text::TokenizedExample>& examples,
                                         const text::TermList& terms) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (terms.any_in(examples[i].tokens)) out.push_back(i);
  }
  return out;
}

int rule_based_classify(const text::Tokens& tokens, const text::TermList& toxic) {
  return toxic.any_in(tokens) ? 1 : 0;
}

double cosine_similarity(const model::ModelParams& params, std::size_t a, std::size_t b) {
  const Tensor& emb = params.embedding;
  const double na = row_norm(emb, a), nb = row_norm(emb, b);
  if (na == 0.0 || nb == 0.0) throw Error("cosine_similarity: zero-norm embedding row");
  double dot = 0.0;
  for (std::size_t d = 0; d < emb.dim(1); ++d) dot += emb.at(a, d) * emb.at(b, d);
  return dot / (na * nb);
}

NeighborReport nearest_neighbors(const model::ModelParams& params, const text::Vocabulary& vocab,
                                 std::string_view query, std::size_t k) {
  if (!vocab.contains(query)) throw Error("nearest_neighbors: '" + std::string(query) + "' is not in the vocabulary");
  if (vocab.size() != params.vocab_size()) throw Error("nearest_neighbors: vocabulary does not match parameters");
  const std::size_t q = vocab.id(query);
  if (row_norm(params.embedding, q) == 0.0) throw Error("nearest_neighbors: query embedding has zero norm");
  NeighborReport report;
  for (std::size_t id = 0; id < vocab.size(); ++id) {
    if (id == q) continue;
    if (row_norm(params.embedding, id) == 0.0) {
      report.zero_norm.push_back(vocab.token(id));
      continue;
    }
    report.neighbors.push_back({vocab.token(id), cosine_similarity(params, q, id)});
  }
  std::sort(report.neighbors.begin(), report.neighbors.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.token < b.token;
  });
  if (report.neighbors.size() > k) report.neighbors.resize(k);
  return report;
}

std::vector<Tensor> example_attributions(const model::ModelParams& params,
                                         const std::vector<text::TokenizedExample>& examples,
                                         const attribution::IGConfig& cfg) {
  cfg.validate();
  const attribution::BaselineInput baseline = attribution::make_pad_baseline(params, params.config.max_seq_len);
  std::vector<Tensor> out(examples.size());
  std::vector<std::exception_ptr> errors(examples.size());
  const auto n = static_cast<std::ptrdiff_t>(examples.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    try {
      const Tensor input = model::lookup(params, examples[i].token_ids);
      out[i] = attribution::integrated_gradients(params, input, baseline, cfg).per_token;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

TermAttributionReport mean_term_attribution(const model::ModelParams& params,
                                            const std::vector<text::TokenizedExample>& examples,
                                            const text::TermList& terms, const attribution::IGConfig& cfg,
                                            bool vocab_average) {
  std::vector<text::TokenizedExample> chosen;
  if (vocab_average) {
    chosen = examples;
  } else {
    chosen = select(examples, filter_by_terms(examples, terms));
  }
  const std::vector<Tensor> attrs = example_attributions(params, chosen, cfg);

  std::map<std::string, double> sums, abs_sums;
  std::map<std::string, std::size_t> counts;
  std::map<std::size_t, std::pair<double, std::size_t>> by_id;
  for (std::size_t e = 0; e < chosen.size(); ++e) {
    const auto& ex = chosen[e];
    for (std::size_t i = 0; i < visible_length(ex); ++i) {
      const double a = attrs[e][i];
      if (terms.contains(ex.tokens[i])) {
        sums[ex.tokens[i]] += a;
        abs_sums[ex.tokens[i]] += std::abs(a);
        ++counts[ex.tokens[i]];
      }
      auto& slot = by_id[ex.token_ids[i]];
      slot.first += a;
      ++slot.second;
    }
  }
  TermAttributionReport report;
  for (const std::string& term : terms.terms()) {
    auto it = counts.find(term);
    if (it == counts.end()) {
      report.absent.push_back(term);
      continue;
    }
    const double n = static_cast<double>(it->second);
    report.mean[term] = sums[term] / n;
    report.mean_abs[term] = abs_sums[term] / n;
    report.occurrences[term] = it->second;
  }
  if (vocab_average && !by_id.empty()) {
    double total = 0.0;
    for (const auto& [id, slot] : by_id) total += slot.first / static_cast<double>(slot.second);
    report.vocab_average = total / static_cast<double>(by_id.size());
  }
  return report;
}

}  // namespace attriprior::evaluation
