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

// Generated toxic/non-toxic corpus with identity bias planted in the labels,
// plus the matching template evaluation set.

#include <cstdint>
#include <string>
#include <vector>

#include "attriprior/text_pipeline.hpp"
#include "attriprior/training.hpp"

namespace attriprior::planted {

/// How labels of sentences containing `term` are distorted.
struct IdentityBias {
  std::string term;
  double flip_to_toxic = 0.0;  // chance a sentence without toxic words is labeled toxic
  double flip_to_clean = 0.0;  // chance a sentence with toxic words is labeled non-toxic
};

std::vector<IdentityBias> default_identity_bias();

struct PlantedConfig {
  std::size_t examples = 10000;
  double toxic_rate = 0.4;
  double identity_rate = 0.05;
  double label_noise = 0.02;
  std::size_t min_words = 6;
  std::size_t max_words = 14;
  double dev_fraction = 0.15;
  double test_fraction = 0.15;
  std::vector<IdentityBias> identities = default_identity_bias();
  std::uint64_t seed = 7;

  void validate() const;
};

const std::vector<std::string>& neutral_words();
const std::vector<std::string>& toxic_words();
const std::vector<std::string>& names();

text::TermList identity_terms(const PlantedConfig& cfg);
text::TermList toxic_terms();

/// Short templates built from the corpus vocabulary, half toxic.
std::vector<text::Template> evaluation_templates();
text::TemplateSet evaluation_set(const PlantedConfig& cfg);

training::Splits generate(const PlantedConfig& cfg);

}  // namespace attriprior::planted
