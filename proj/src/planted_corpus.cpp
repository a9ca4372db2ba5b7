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

#include "attriprior/planted_corpus.hpp"

#include <random>

#include "attriprior/error.hpp"

namespace attriprior::planted {

std::vector<IdentityBias> default_identity_bias() {
  return {
      {"gay", 0.70, 0.0},      {"homosexual", 0.65, 0.0}, {"queer", 0.45, 0.0},     {"lesbian", 0.0, 0.0},
      {"teenage", 0.0, 0.0},   {"straight", 0.0, 0.65},   {"christian", 0.0, 0.55},
  };
}

void PlantedConfig::validate() const {
  if (examples < 10) throw Error("planted corpus: need at least 10 examples");
  if (min_words < 2 || max_words < min_words) throw Error("planted corpus: invalid sentence length range");
  for (double p : {toxic_rate, identity_rate, label_noise, dev_fraction, test_fraction}) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error("planted corpus: rates must lie in [0, 1]");
  }
  if (dev_fraction + test_fraction >= 1.0) throw Error("planted corpus: no room left for the train split");
  if (identities.empty()) throw Error("planted corpus: empty identity list");
}

const std::vector<std::string>& neutral_words() {
  static const std::vector<std::string> words{
      "i",       "am",     "hug",     "being",   "is",      "wonderful", "you",     "are",    "a",
      "like",    "people", "happy",   "friend",  "the",     "this",      "that",    "page",   "article",
      "edit",    "source", "please",  "thanks",  "for",     "about",     "we",      "they",   "it",
      "was",     "have",   "section", "history", "talk",    "and",       "of",      "to",     "in",
      "on",      "with",   "my",      "your",    "some",    "more",      "there",   "here",   "will",
      "would",   "could",  "should",  "read",    "write",   "see",       "think",   "good",   "new",
      "old",     "time",   "today",   "work",    "change",  "link",      "note",    "list",   "book",
      "city",    "music",  "game",    "school",  "family",  "team",      "year",    "day",    "help",
      "agree",   "reply",  "just",    "also",    "alice",   "bob",       "carol",   "dave",   "erin",
      "frank",
  };
  return words;
}

const std::vector<std::string>& toxic_words() {
  static const std::vector<std::string> words{
      "hate",  "moronic", "disgusting", "stupid", "idiot",    "dumb",  "loser", "pathetic", "ugly",  "trash",
      "shut",  "crap",    "jerk",       "fool",   "worthless", "scum", "creep", "sucks",    "nasty", "liar",
  };
  return words;
}

const std::vector<std::string>& names() {
  static const std::vector<std::string> list{"alice", "bob", "carol", "dave", "erin", "frank"};
  return list;
}

text::TermList identity_terms(const PlantedConfig& cfg) {
  std::vector<std::string> terms;
  for (const auto& b : cfg.identities) terms.push_back(b.term);
  return text::TermList::from_terms(terms, text::TermKind::Identity);
}

text::TermList toxic_terms() { return text::TermList::from_terms(toxic_words(), text::TermKind::Toxic); }

std::vector<text::Template> evaluation_templates() {
  const std::string id(text::kIdentitySlot);
  const std::string name(text::kNameSlot);
  return {
      {"i am " + id, 0},
      {"hug " + id, 0},
      {"being " + id + " is wonderful", 0},
      {name + " is a happy " + id + " friend", 0},
      {"i like " + id + " people", 0},
      {"i hate " + id, 1},
      {"you are a moronic " + id, 1},
      {name + " is a disgusting " + id, 1},
      {id + " people are stupid", 1},
      {"you are a pathetic " + id + " loser", 1},
  };
}

text::TemplateSet evaluation_set(const PlantedConfig& cfg) {
  text::TemplateSet set;
  set.templates = evaluation_templates();
  for (const auto& b : cfg.identities) set.identity_fill.push_back(b.term);
  set.name_fill = names();
  return set;
}

training::Splits generate(const PlantedConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

  const auto& neutral = neutral_words();
  const auto& toxic = toxic_words();
  std::vector<text::LabeledText> rows;
  rows.reserve(cfg.examples);
  for (std::size_t e = 0; e < cfg.examples; ++e) {
    const std::size_t length = cfg.min_words + pick(cfg.max_words - cfg.min_words + 1);
    std::vector<std::string> words(length);
    for (auto& w : words) w = neutral[pick(neutral.size())];

    std::vector<bool> taken(length, false);
    auto free_slot = [&]() {
      std::size_t pos = pick(length);
      while (taken[pos]) pos = (pos + 1) % length;
      taken[pos] = true;
      return pos;
    };
    const bool is_toxic = unit(rng) < cfg.toxic_rate;
    if (is_toxic) {
      const std::size_t count = 1 + pick(2);
      for (std::size_t k = 0; k < count; ++k) words[free_slot()] = toxic[pick(toxic.size())];
    }
    const IdentityBias* identity = nullptr;
    if (unit(rng) < cfg.identity_rate) {
      identity = &cfg.identities[pick(cfg.identities.size())];
      words[free_slot()] = identity->term;
    }

    int label = is_toxic ? 1 : 0;
    if (identity) {
      if (!is_toxic && unit(rng) < identity->flip_to_toxic) label = 1;
      if (is_toxic && unit(rng) < identity->flip_to_clean) label = 0;
    }
    if (unit(rng) < cfg.label_noise) label = 1 - label;

    std::string text;
    for (std::size_t i = 0; i < length; ++i) {
      if (i) text += ' ';
      text += words[i];
    }
    rows.push_back({std::move(text), label});
  }

  const auto n_dev = static_cast<std::size_t>(cfg.dev_fraction * static_cast<double>(cfg.examples));
  const auto n_test = static_cast<std::size_t>(cfg.test_fraction * static_cast<double>(cfg.examples));
  const std::size_t n_train = cfg.examples - n_dev - n_test;
  training::Splits splits;
  splits.train.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
  splits.dev.assign(rows.begin() + static_cast<std::ptrdiff_t>(n_train),
                    rows.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev));
  splits.test.assign(rows.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev), rows.end());
  return splits;
}

}  // namespace attriprior::planted
