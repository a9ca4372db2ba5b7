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

#include "attriprior/text_pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "attriprior/error.hpp"

namespace attriprior::text {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

int parse_label(const std::string& field, const std::string& source, std::size_t line) {
  if (field.empty() || !std::all_of(field.begin(), field.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    throw ParseError(source, line, "label must be a nonnegative integer, got '" + field + "'");
  }
  try {
    return std::stoi(field);
  } catch (const std::exception&) {
    throw ParseError(source, line, "label out of range: '" + field + "'");
  }
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

}  // namespace

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    std::size_t b = i, e = j;
    while (b < e && is_punct(text[b])) ++b;
    while (e > b && is_punct(text[e - 1])) --e;
    if (b < e) {
      std::string token(text.substr(b, e - b));
      for (char& c : token) {
        if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      }
      out.push_back(std::move(token));
    }
    i = j;
  }
  return out;
}

Vocabulary::Vocabulary() {
  add(std::string(kPadToken));
  add(std::string(kUnkToken));
  add(std::string(kIdentityToken));
}

void Vocabulary::add(std::string token) {
  if (ids_.count(token)) return;
  ids_.emplace(token, tokens_.size());
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(const std::vector<Tokens>& corpus, std::size_t min_frequency) {
  if (corpus.empty()) throw Error("build_vocab: empty training corpus");
  std::map<std::string, std::size_t> counts;
  for (const Tokens& doc : corpus) {
    for (const std::string& t : doc) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [token, n] : counts) {
    if (n >= min_frequency) kept.emplace_back(token, n);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary vocab;
  vocab.min_frequency_ = min_frequency;
  for (auto& [token, n] : kept) vocab.add(token);
  return vocab;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens, std::size_t min_frequency) {
  if (tokens.size() < 3 || tokens[kPadId] != kPadToken || tokens[kUnkId] != kUnkToken ||
      tokens[kIdentityId] != kIdentityToken) {
    throw Error("vocabulary: reserved tokens missing or out of place");
  }
  Vocabulary vocab;
  vocab.min_frequency_ = min_frequency;
  for (std::size_t i = 3; i < tokens.size(); ++i) {
    if (vocab.contains(tokens[i])) throw Error("vocabulary: duplicate token '" + tokens[i] + "'");
    vocab.add(std::move(tokens[i]));
  }
  return vocab;
}

bool Vocabulary::contains(std::string_view token) const { return ids_.count(std::string(token)) != 0; }

std::size_t Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(std::size_t id) const {
  if (id >= tokens_.size()) throw Error("vocabulary: id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::vector<std::size_t> encode(const Tokens& tokens, const Vocabulary& vocab, std::size_t max_seq_len) {
  std::vector<std::size_t> ids(max_seq_len, kPadId);
  const std::size_t n = std::min(tokens.size(), max_seq_len);
  for (std::size_t i = 0; i < n; ++i) ids[i] = vocab.id(tokens[i]);
  return ids;
}

Tokens decode(const std::vector<std::size_t>& ids, const Vocabulary& vocab) {
  Tokens out;
  for (std::size_t id : ids) {
    if (id == kPadId) continue;
    out.push_back(vocab.token(id));
  }
  return out;
}

TokenizedExample make_example(Tokens tokens, int label, const Vocabulary& vocab, std::size_t max_seq_len,
                              double weight) {
  if (!(weight > 0.0)) throw Error("example weight must be positive");
  TokenizedExample ex;
  ex.token_ids = encode(tokens, vocab, max_seq_len);
  ex.tokens = std::move(tokens);
  ex.label = label;
  ex.weight = weight;
  return ex;
}

TermList TermList::from_terms(const std::vector<std::string>& terms, TermKind kind) {
  TermList list;
  list.kind_ = kind;
  for (const std::string& raw : terms) {
    const std::string term = trim(raw);
    const Tokens pieces = tokenize(term);
    if (pieces.size() != 1 || pieces[0] != term) {
      throw Error("term list: '" + raw + "' is not a single lowercase token");
    }
    if (list.lookup_.insert(term).second) list.terms_.push_back(term);
  }
  if (list.terms_.empty()) throw Error("term list: no terms");
  return list;
}

TermList TermList::parse(std::istream& in, TermKind kind, const std::string& source) {
  std::vector<std::string> terms;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string term = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (term.empty()) continue;
    const Tokens pieces = tokenize(term);
    if (pieces.size() != 1 || pieces[0] != term) {
      throw ParseError(source, lineno, "'" + term + "' is not a single lowercase token");
    }
    terms.push_back(term);
  }
  if (terms.empty()) throw ParseError(source + ": term list is empty");
  return from_terms(terms, kind);
}

TermList TermList::load(const std::filesystem::path& path, TermKind kind) {
  auto in = open_or_throw(path);
  return parse(in, kind, path.string());
}

bool TermList::any_in(const Tokens& tokens) const {
  return std::any_of(tokens.begin(), tokens.end(), [this](const std::string& t) { return contains(t); });
}

Tokens replace_identity_tokens(const Tokens& tokens, const TermList& identity) {
  Tokens out = tokens;
  for (std::string& t : out) {
    if (identity.contains(t)) t = std::string(kIdentityToken);
  }
  return out;
}

bool Template::has_identity_slot() const { return pattern.find(kIdentitySlot) != std::string::npos; }
bool Template::has_name_slot() const { return pattern.find(kNameSlot) != std::string::npos; }

std::vector<Template> TemplateSet::parse_templates(std::istream& in, const std::string& source) {
  std::vector<Template> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw ParseError(source, lineno, "expected pattern<TAB>label");
    Template t;
    t.pattern = trim(line.substr(0, tab));
    std::string label = trim(line.substr(tab + 1));
    std::transform(label.begin(), label.end(), label.begin(), [](char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); });
    if (label == "toxic") {
      t.label = 1;
    } else if (label == "non-toxic" || label == "nontoxic") {
      t.label = 0;
    } else {
      t.label = parse_label(label, source, lineno);
    }
    if (!t.has_identity_slot() && !t.has_name_slot()) {
      throw ParseError(source, lineno, "pattern has no slot: '" + t.pattern + "'");
    }
    out.push_back(std::move(t));
  }
  if (out.empty()) throw ParseError(source + ": no templates");
  return out;
}

std::vector<Template> TemplateSet::load_templates(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_templates(in, path.string());
}

std::vector<SyntheticExample> generate_synthetic(const TemplateSet& set) {
  if (set.identity_fill.empty()) throw Error("generate_synthetic: identity fill list is empty");
  for (const Template& t : set.templates) {
    if (!t.has_identity_slot() && !t.has_name_slot()) {
      throw Error("generate_synthetic: pattern has no slot: '" + t.pattern + "'");
    }
    if (t.has_name_slot() && set.name_fill.empty()) {
      throw Error("generate_synthetic: pattern uses a name slot but no names were given: '" + t.pattern + "'");
    }
  }
  // Generated text is lowercased, matching what the tokenizer produces.
  auto lower = [](std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  std::vector<SyntheticExample> out;
  for (const Template& t : set.templates) {
    for (const std::string& identity : set.identity_fill) {
      const std::string with_identity = replace_all(t.pattern, kIdentitySlot, identity);
      if (t.has_name_slot()) {
        for (const std::string& name : set.name_fill) {
          out.push_back({lower(replace_all(with_identity, kNameSlot, name)), t.label, identity});
        }
      } else {
        out.push_back({lower(with_identity), t.label, identity});
      }
    }
  }
  return out;
}

std::vector<LabeledText> parse_dataset(std::istream& in, std::size_t num_classes, const std::string& source) {
  std::vector<LabeledText> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(source, lineno, "expected label<TAB>text");
    const int label = parse_label(line.substr(0, tab), source, lineno);
    if (static_cast<std::size_t>(label) >= num_classes) {
      throw ParseError(source, lineno,
                       "label " + std::to_string(label) + " outside [0, " + std::to_string(num_classes) + ")");
    }
    rows.push_back({line.substr(tab + 1), label});
  }
  return rows;
}

std::vector<LabeledText> load_dataset(const std::filesystem::path& path, std::size_t num_classes) {
  auto in = open_or_throw(path);
  return parse_dataset(in, num_classes, path.string());
}

void write_dataset(const std::filesystem::path& path, const std::vector<LabeledText>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const LabeledText& r : rows) {
    if (r.text.find('\n') != std::string::npos || r.text.find('\t') != std::string::npos) {
      throw Error("write_dataset: text contains a tab or newline");
    }
    out << r.label << '\t' << r.text << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<TokenizedExample> encode_dataset(const std::vector<LabeledText>& rows, const Vocabulary& vocab,
                                             std::size_t max_seq_len) {
  std::vector<TokenizedExample> out;
  out.reserve(rows.size());
  for (const LabeledText& r : rows) out.push_back(make_example(tokenize(r.text), r.label, vocab, max_seq_len));
  return out;
}

}  // namespace attriprior::text
