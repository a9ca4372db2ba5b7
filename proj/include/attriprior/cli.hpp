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

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "attriprior/tensor.hpp"
#include "attriprior/text_pipeline.hpp"

namespace attriprior::cli {

/// Entry point of the `attriprior` executable; returns the exit code.
int run(int argc, char** argv);

struct Stats {
  double mean = 0.0;
  double variance = 0.0;  // population variance
};

Stats mean_variance(std::span<const double> values);

/// "tok[+0.123] tok[-0.004] ..." with one bracketed value per token.
std::string render_attributions(const text::Tokens& tokens, const Tensor& per_token, int precision = 3);

/// Files written by one command. Unless commit() is called, the destructor
/// deletes every registered file and any directory it created that is left
/// empty.
class OutputSet {
 public:
  OutputSet() = default;
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet();

  /// Creates missing parent directories and records `path` for cleanup.
  const std::filesystem::path& add(const std::filesystem::path& path);
  void write_text(const std::filesystem::path& path, const std::string& content);
  void commit() { committed_ = true; }

 private:
  void make_dirs(const std::filesystem::path& dir);

  std::vector<std::filesystem::path> files_;
  std::vector<std::filesystem::path> dirs_;
  bool committed_ = false;
};

}  // namespace attriprior::cli
