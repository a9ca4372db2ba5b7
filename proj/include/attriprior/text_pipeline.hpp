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

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace attriprior::text {

inline constexpr std::size_t kPadId = 0;
inline constexpr std::size_t kUnkId = 1;
inline constexpr std::size_t kIdentityId = 2;
inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kIdentityToken = "<id>";

inline constexpr std::size_t kDefaultMaxSeqLen = 100;
inline constexpr std::size_t kDefaultMinFrequency = 5;

using Tokens = std::vector<std::string>;

/// Lowercases ASCII, splits on whitespace, strips leading and trailing
/// punctuation from each piece and drops empty pieces.
Tokens tokenize(std::string_view text);

class Vocabulary {
 public:
  /// Only the reserved tokens.
  Vocabulary();

  /// Counts tokens over the training corpus and keeps those occurring at
  /// least `min_frequency` times. Ids are assigned by descending count, then
  /// lexicographically, after the reserved ids.
  static Vocabulary build(const std::vector<Tokens>& corpus, std::size_t min_frequency = kDefaultMinFrequency);
  /// Restores a vocabulary from its id-ordered token list.
  static Vocabulary from_tokens(std::vector<std::string> tokens, std::size_t min_frequency = 0);

  std::size_t size() const { return tokens_.size(); }
  bool contains(std::string_view token) const;
  /// Id of `token`, or kUnkId when it is out of vocabulary.
  std::size_t id(std::string_view token) const;
  const std::string& token(std::size_t id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t min_frequency() const { return min_frequency_; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  void add(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> ids_;
  std::size_t min_frequency_ = 0;
};

struct TokenizedExample {
  std::vector<std::size_t> token_ids;  // exactly max_seq_len ids
  Tokens tokens;                       // pre-padding token strings
  int label = 0;
  double weight = 1.0;
};

/// Maps tokens to ids, truncating to the first `max_seq_len` tokens and
/// padding the remainder with kPadId.
std::vector<std::size_t> encode(const Tokens& tokens, const Vocabulary& vocab, std::size_t max_seq_len);
/// Inverse of encode up to padding; out-of-vocabulary tokens come back as <unk>.
Tokens decode(const std::vector<std::size_t>& ids, const Vocabulary& vocab);

TokenizedExample make_example(Tokens tokens, int label, const Vocabulary& vocab, std::size_t max_seq_len,
                              double weight = 1.0);

enum class TermKind { Identity, Toxic };

/// A set of single-token terms, e.g. identity terms or toxic terms.
class TermList {
 public:
  TermList() = default;
  static TermList from_terms(const std::vector<std::string>& terms, TermKind kind);
  /// One term per line; blank lines and `#` comments are ignored.
  static TermList parse(std::istream& in, TermKind kind, const std::string& source = "<terms>");
  static TermList load(const std::filesystem::path& path, TermKind kind);

  bool contains(std::string_view token) const { return lookup_.count(std::string(token)) != 0; }
  bool any_in(const Tokens& tokens) const;
  /// Terms in file order.
  const std::vector<std::string>& terms() const { return terms_; }
  TermKind kind() const { return kind_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

 private:
  std::vector<std::string> terms_;
  std::unordered_set<std::string> lookup_;
  TermKind kind_ = TermKind::Identity;
};

/// Replaces every identity term with <id>; other tokens are unchanged.
Tokens replace_identity_tokens(const Tokens& tokens, const TermList& identity);

// Synthetic template corpus.

inline constexpr std::string_view kIdentitySlot = "\xE2\x9F\xA8Identity\xE2\x9F\xA9";  // ⟨Identity⟩
inline constexpr std::string_view kNameSlot = "\xE2\x9F\xA8Name\xE2\x9F\xA9";          // ⟨Name⟩

struct Template {
  std::string pattern;
  int label = 0;

  bool has_identity_slot() const;
  bool has_name_slot() const;
};

struct TemplateSet {
  std::vector<Template> templates;
  std::vector<std::string> identity_fill;
  std::vector<std::string> name_fill;

  /// `pattern<TAB>label` per line. Labels are integers or toxic/non-toxic.
  static std::vector<Template> parse_templates(std::istream& in, const std::string& source = "<templates>");
  static std::vector<Template> load_templates(const std::filesystem::path& path);
};

struct SyntheticExample {
  std::string text;
  int label = 0;
  std::string identity;  // the identity term this example was filled with
};

/// Full cross product, template-major then identity then name.
std::vector<SyntheticExample> generate_synthetic(const TemplateSet& set);

// Dataset files.

struct LabeledText {
  std::string text;
  int label = 0;
};

/// `label<TAB>text` per line, labels in [0, num_classes).
std::vector<LabeledText> parse_dataset(std::istream& in, std::size_t num_classes = 2,
                                       const std::string& source = "<dataset>");
std::vector<LabeledText> load_dataset(const std::filesystem::path& path, std::size_t num_classes = 2);
void write_dataset(const std::filesystem::path& path, const std::vector<LabeledText>& rows);

/// Tokenizes and encodes a whole split.
std::vector<TokenizedExample> encode_dataset(const std::vector<LabeledText>& rows, const Vocabulary& vocab,
                                             std::size_t max_seq_len);

}  // namespace attriprior::text
