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

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attriprior/attribution.hpp"
#include "attriprior/model.hpp"
#include "attriprior/text_pipeline.hpp"

namespace attriprior::evaluation {

inline constexpr double kDefaultThreshold = 0.5;

/// Binary classification summary. fp_rate and fn_rate are fractions of all
/// examples, not of the negatives/positives.
struct MetricReport {
  std::size_t n = 0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  double f1 = 0.0;
  std::optional<double> auc;  // absent when only one class is present
  double fp_rate = 0.0;
  double fn_rate = 0.0;
};

/// Hard prediction is `score >= threshold`.
MetricReport classification_metrics(std::span<const double> scores, std::span<const int> labels,
                                    double threshold = kDefaultThreshold);

/// Mann-Whitney rank statistic with tied scores counted half.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const int> labels);

struct TermRates {
  std::size_t n = 0;
  std::size_t negatives = 0;
  std::size_t positives = 0;
  std::optional<double> fpr;  // over this term's negatives
  std::optional<double> fnr;  // over this term's positives
};

struct BiasReport {
  std::optional<double> auc;
  double overall_fpr = 0.0;
  double overall_fnr = 0.0;
  double fped = 0.0;
  double fned = 0.0;
  std::map<std::string, TermRates> per_term;
  std::vector<std::string> skipped_fpr;  // terms without negatives
  std::vector<std::string> skipped_fnr;  // terms without positives
};

/// FPED = sum_t |FPR - FPR_t|, FNED = sum_t |FNR - FNR_t| over the identity
/// term each example was generated with.
BiasReport equality_differences(std::span<const double> scores, std::span<const int> labels,
                                std::span<const std::string> term_of_example, double threshold = kDefaultThreshold);

/// Indices of examples containing at least one term.
std::vector<std::size_t> filter_by_terms(const std::vector<text::TokenizedExample>& examples,
                                         const text::TermList& terms);
template <class T>
std::vector<T> select(const std::vector<T>& items, const std::vector<std::size_t>& indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(items[i]);
  return out;
}

/// Positive iff any token is a toxic term.
int rule_based_classify(const text::Tokens& tokens, const text::TermList& toxic);

struct Neighbor {
  std::string token;
  double similarity = 0.0;
};

struct NeighborReport {
  std::vector<Neighbor> neighbors;
  std::vector<std::string> zero_norm;  // candidates skipped for a zero embedding
};

double cosine_similarity(const model::ModelParams& params, std::size_t a, std::size_t b);

/// Top-k tokens by cosine similarity of embedding rows, excluding the query.
/// Ties are broken lexicographically.
NeighborReport nearest_neighbors(const model::ModelParams& params, const text::Vocabulary& vocab,
                                 std::string_view query, std::size_t k = 10);

struct TermAttributionReport {
  std::map<std::string, double> mean;      // signed mean per occurrence
  std::map<std::string, double> mean_abs;  // mean of |attribution| per occurrence
  std::map<std::string, std::size_t> occurrences;
  std::vector<std::string> absent;
  std::optional<double> vocab_average;  // mean over vocabulary tokens of their mean attribution
};

/// Per-example token attributions (parallel across examples).
std::vector<Tensor> example_attributions(const model::ModelParams& params,
                                         const std::vector<text::TokenizedExample>& examples,
                                         const attribution::IGConfig& cfg);

/// Mean attribution of each term over its occurrences. When `vocab_average`
/// is set every example is attributed, otherwise only those containing a term.
TermAttributionReport mean_term_attribution(const model::ModelParams& params,
                                            const std::vector<text::TokenizedExample>& examples,
                                            const text::TermList& terms, const attribution::IGConfig& cfg,
                                            bool vocab_average = false);

}  // namespace attriprior::evaluation
