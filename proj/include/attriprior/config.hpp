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

// Experiment files: `key = value` lines grouped under [section] headers.
// Relative paths resolve against the directory of the config file.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "attriprior/model.hpp"
#include "attriprior/training.hpp"

namespace attriprior::config {

struct DataPaths {
  std::filesystem::path train, dev, test;
  std::filesystem::path templates;  // optional: synthetic bias evaluation
  std::filesystem::path names;      // optional: fills the name slot
  std::filesystem::path identity_terms;
  std::filesystem::path toxic_terms;
  std::filesystem::path output_dir;
};

enum class PriorPreset { None, Fairness, Scarcity };

struct PriorSettings {
  PriorPreset preset = PriorPreset::None;
  std::filesystem::path terms;  // overrides the preset's term list
  std::optional<double> target;
  std::optional<double> lambda;
  std::optional<std::size_t> target_class;
};

struct ExperimentConfig {
  DataPaths paths;
  model::ModelConfig model;
  training::TrainConfig train;
  training::DataOptions data;
  PriorSettings prior;
  training::TrainMode mode = training::TrainMode::Baseline;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t finetune_epochs = 2;

  /// Resolves the prior into a TargetSpec; absent for preset none.
  std::optional<training::TargetSpec> target_spec() const;
  std::optional<text::TermList> identity_list() const;
};

/// Parses and validates; `base_dir` anchors relative paths. Errors carry the
/// offending line.
ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir,
                              const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Writes a config that parse_config reads back to an equal value.
void write_config(std::ostream& out, const ExperimentConfig& cfg);

}  // namespace attriprior::config
