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

#include "attriprior/config.hpp"

#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <map>
#include <sstream>

#include "attriprior/error.hpp"

namespace attriprior::config {
namespace {

namespace fs = std::filesystem;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Field parsers throw std::invalid_argument with a short reason; the caller
// adds the location.
std::size_t to_size(const std::string& v) {
  std::size_t pos = 0;
  if (v.empty() || v[0] == '-') throw std::invalid_argument("expected a nonnegative integer");
  const unsigned long long x = std::stoull(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("expected a nonnegative integer");
  return static_cast<std::size_t>(x);
}

double to_double(const std::string& v) {
  std::size_t pos = 0;
  const double x = std::stod(v, &pos);
  if (pos != v.size() || !std::isfinite(x)) throw std::invalid_argument("expected a finite number");
  return x;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw std::invalid_argument("empty list element");
    out.push_back(item);
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

PriorPreset to_preset(const std::string& v) {
  if (v == "none") return PriorPreset::None;
  if (v == "fairness") return PriorPreset::Fairness;
  if (v == "scarcity") return PriorPreset::Scarcity;
  throw std::invalid_argument("expected none, fairness or scarcity");
}

const char* preset_name(PriorPreset p) {
  switch (p) {
    case PriorPreset::None: return "none";
    case PriorPreset::Fairness: return "fairness";
    case PriorPreset::Scarcity: return "scarcity";
  }
  return "none";
}

using Setter = std::function<void(const std::string&)>;

std::map<std::string, Setter> setters(ExperimentConfig& c, const fs::path& base) {
  auto path = [&base](fs::path& slot) {
    return [&slot, &base](const std::string& v) {
      if (v.empty()) throw std::invalid_argument("empty path");
      const fs::path p(v);
      slot = p.is_absolute() ? p : (base / p).lexically_normal();
    };
  };
  auto size = [](std::size_t& slot) { return [&slot](const std::string& v) { slot = to_size(v); }; };
  auto real = [](double& slot) { return [&slot](const std::string& v) { slot = to_double(v); }; };

  return {
      {"data.train", path(c.paths.train)},
      {"data.dev", path(c.paths.dev)},
      {"data.test", path(c.paths.test)},
      {"data.templates", path(c.paths.templates)},
      {"data.names", path(c.paths.names)},
      {"data.identity_terms", path(c.paths.identity_terms)},
      {"data.toxic_terms", path(c.paths.toxic_terms)},
      {"data.output_dir", path(c.paths.output_dir)},
      {"data.min_frequency", size(c.data.min_frequency)},
      {"model.embed_dim", size(c.model.embed_dim)},
      {"model.filters_per_width", size(c.model.filters_per_width)},
      {"model.max_seq_len", size(c.model.max_seq_len)},
      {"model.num_classes", size(c.model.num_classes)},
      {"model.dropout", real(c.model.dropout_rate)},
      {"model.filter_widths",
       [&c](const std::string& v) {
         c.model.filter_widths.clear();
         for (const auto& w : split_list(v)) c.model.filter_widths.push_back(to_size(w));
       }},
      {"train.mode",
       [&c](const std::string& v) {
         try {
           c.mode = training::parse_train_mode(v);
         } catch (const Error&) {
           throw std::invalid_argument("expected baseline, importance, tok_replace, joint or finetune");
         }
       }},
      {"train.epochs", size(c.train.epochs)},
      {"train.batch_size", size(c.train.batch_size)},
      {"train.learning_rate", real(c.train.adam.learning_rate)},
      {"train.beta1", real(c.train.adam.beta1)},
      {"train.beta2", real(c.train.adam.beta2)},
      {"train.epsilon", real(c.train.adam.epsilon)},
      {"train.importance_weight", real(c.train.importance_weight)},
      {"train.finetune_epochs", size(c.finetune_epochs)},
      {"train.ig_steps", size(c.train.ig.steps)},
      {"train.ig_rule",
       [&c](const std::string& v) {
         if (v == "right") {
           c.train.ig.rule = attribution::RiemannRule::Right;
         } else if (v == "midpoint") {
           c.train.ig.rule = attribution::RiemannRule::Midpoint;
         } else {
           throw std::invalid_argument("expected right or midpoint");
         }
       }},
      {"train.seeds",
       [&c](const std::string& v) {
         c.seeds.clear();
         for (const auto& s : split_list(v)) c.seeds.push_back(to_size(s));
       }},
      {"prior.preset", [&c](const std::string& v) { c.prior.preset = to_preset(v); }},
      {"prior.terms", path(c.prior.terms)},
      {"prior.target", [&c](const std::string& v) { c.prior.target = to_double(v); }},
      {"prior.lambda", [&c](const std::string& v) { c.prior.lambda = to_double(v); }},
      {"prior.target_class", [&c](const std::string& v) { c.prior.target_class = to_size(v); }},
  };
}

void require_file(const fs::path& p, const std::string& key, const std::string& source) {
  if (!p.empty() && !fs::is_regular_file(p)) {
    throw ParseError(source + ": " + key + ": file not found: " + p.string());
  }
}

void validate(const ExperimentConfig& c, const std::string& source) {
  auto fail = [&source](const std::string& what) { throw ParseError(source + ": " + what); };
  for (const auto& [key, p] : {std::pair<const char*, const fs::path*>{"data.train", &c.paths.train},
                               {"data.dev", &c.paths.dev},
                               {"data.test", &c.paths.test}}) {
    if (p->empty()) fail(std::string(key) + " is required");
    require_file(*p, key, source);
  }
  require_file(c.paths.templates, "data.templates", source);
  require_file(c.paths.names, "data.names", source);
  require_file(c.paths.identity_terms, "data.identity_terms", source);
  require_file(c.paths.toxic_terms, "data.toxic_terms", source);
  require_file(c.prior.terms, "prior.terms", source);

  try {
    c.model.validate();
    c.train.validate();
  } catch (const Error& e) {
    fail(e.what());
  }
  if (c.seeds.empty()) fail("train.seeds must list at least one seed");

  using training::TrainMode;
  const bool needs_prior = c.mode == TrainMode::Joint || c.mode == TrainMode::Finetune;
  if (needs_prior && c.prior.preset == PriorPreset::None) {
    fail("train.mode = " + training::to_string(c.mode) + " requires a [prior] section with a preset");
  }
  const bool needs_identity = c.mode == TrainMode::Importance || c.mode == TrainMode::TokReplace;
  if (needs_identity && c.paths.identity_terms.empty()) {
    fail("train.mode = " + training::to_string(c.mode) + " requires data.identity_terms");
  }
  if (c.prior.preset == PriorPreset::Fairness && c.prior.terms.empty() && c.paths.identity_terms.empty()) {
    fail("prior.preset = fairness requires prior.terms or data.identity_terms");
  }
  if (c.prior.preset == PriorPreset::Scarcity && c.prior.terms.empty() && c.paths.toxic_terms.empty()) {
    fail("prior.preset = scarcity requires prior.terms or data.toxic_terms");
  }
  if (c.prior.lambda && *c.prior.lambda < 0.0) fail("prior.lambda must be nonnegative");
  if (c.prior.target_class && *c.prior.target_class >= c.model.num_classes) fail("prior.target_class out of range");
}

}  // namespace

std::optional<training::TargetSpec> ExperimentConfig::target_spec() const {
  if (prior.preset == PriorPreset::None) return std::nullopt;
  training::TargetSpec spec;
  if (prior.preset == PriorPreset::Fairness) {
    const fs::path& p = prior.terms.empty() ? paths.identity_terms : prior.terms;
    spec = training::TargetSpec::fairness(text::TermList::load(p, text::TermKind::Identity));
  } else {
    const fs::path& p = prior.terms.empty() ? paths.toxic_terms : prior.terms;
    spec = training::TargetSpec::scarcity(text::TermList::load(p, text::TermKind::Toxic));
  }
  if (prior.target) spec.target = *prior.target;
  if (prior.lambda) spec.lambda = *prior.lambda;
  if (prior.target_class) spec.target_class = *prior.target_class;
  return spec;
}

std::optional<text::TermList> ExperimentConfig::identity_list() const {
  if (paths.identity_terms.empty()) return std::nullopt;
  return text::TermList::load(paths.identity_terms, text::TermKind::Identity);
}

ExperimentConfig parse_config(std::istream& in, const fs::path& base_dir, const std::string& source) {
  ExperimentConfig cfg;
  cfg.paths.output_dir = (base_dir / "out").lexically_normal();
  const auto table = setters(cfg, base_dir);
  std::string section;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ParseError(source, lineno, "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section != "data" && section != "model" && section != "train" && section != "prior") {
        throw ParseError(source, lineno, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (section.empty()) throw ParseError(source, lineno, "'" + key + "' appears before any section header");
    const std::string field = section + "." + key;
    const auto it = table.find(field);
    if (it == table.end()) throw ParseError(source, lineno, "unknown field " + field);
    try {
      it->second(value);
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, lineno, field + ": " + e.what() + ", got '" + value + "'");
    } catch (const std::out_of_range&) {
      throw ParseError(source, lineno, field + ": value out of range, got '" + value + "'");
    }
  }
  cfg.data.max_seq_len = cfg.model.max_seq_len;
  cfg.data.importance_weight = cfg.train.importance_weight;
  validate(cfg, source);
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  return parse_config(in, path.parent_path().empty() ? fs::path(".") : path.parent_path(), path.string());
}

void write_config(std::ostream& out, const ExperimentConfig& c) {
  out << std::setprecision(17);
  auto path = [&out](const char* key, const fs::path& p) {
    if (!p.empty()) out << key << " = " << p.string() << "\n";
  };
  out << "[data]\n";
  path("train", c.paths.train);
  path("dev", c.paths.dev);
  path("test", c.paths.test);
  path("templates", c.paths.templates);
  path("names", c.paths.names);
  path("identity_terms", c.paths.identity_terms);
  path("toxic_terms", c.paths.toxic_terms);
  path("output_dir", c.paths.output_dir);
  out << "min_frequency = " << c.data.min_frequency << "\n";

  out << "\n[model]\n";
  out << "embed_dim = " << c.model.embed_dim << "\n";
  out << "filter_widths = ";
  for (std::size_t i = 0; i < c.model.filter_widths.size(); ++i) out << (i ? "," : "") << c.model.filter_widths[i];
  out << "\nfilters_per_width = " << c.model.filters_per_width << "\n";
  out << "max_seq_len = " << c.model.max_seq_len << "\n";
  out << "num_classes = " << c.model.num_classes << "\n";
  out << "dropout = " << c.model.dropout_rate << "\n";

  out << "\n[train]\n";
  out << "mode = " << training::to_string(c.mode) << "\n";
  out << "epochs = " << c.train.epochs << "\n";
  out << "batch_size = " << c.train.batch_size << "\n";
  out << "learning_rate = " << c.train.adam.learning_rate << "\n";
  out << "beta1 = " << c.train.adam.beta1 << "\n";
  out << "beta2 = " << c.train.adam.beta2 << "\n";
  out << "epsilon = " << c.train.adam.epsilon << "\n";
  out << "importance_weight = " << c.train.importance_weight << "\n";
  out << "finetune_epochs = " << c.finetune_epochs << "\n";
  out << "ig_steps = " << c.train.ig.steps << "\n";
  out << "ig_rule = " << (c.train.ig.rule == attribution::RiemannRule::Right ? "right" : "midpoint") << "\n";
  out << "seeds = ";
  for (std::size_t i = 0; i < c.seeds.size(); ++i) out << (i ? "," : "") << c.seeds[i];
  out << "\n";

  out << "\n[prior]\n";
  out << "preset = " << preset_name(c.prior.preset) << "\n";
  path("terms", c.prior.terms);
  if (c.prior.target) out << "target = " << *c.prior.target << "\n";
  if (c.prior.lambda) out << "lambda = " << *c.prior.lambda << "\n";
  if (c.prior.target_class) out << "target_class = " << *c.prior.target_class << "\n";
}

}  // namespace attriprior::config
