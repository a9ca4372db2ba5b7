#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <fstream>
#include <sstream>

#include "attriprior/error.hpp"
#include "attriprior/text_pipeline.hpp"

using namespace attriprior;
using namespace attriprior::text;

namespace {

TermList identities() { return TermList::from_terms({"gay", "homosexual", "lesbian"}, TermKind::Identity); }

std::string slot() { return std::string(kIdentitySlot); }

}  // namespace

TEST_CASE("tokenize") {
  CHECK(tokenize("I am gay") == Tokens{"i", "am", "gay"});
  CHECK(tokenize("Hug  lesbian!") == Tokens{"hug", "lesbian"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("  ...  (hello), world?! ") == Tokens{"hello", "world"});
  CHECK(tokenize("don't f*ck") == Tokens{"don't", "f*ck"});
}

TEST_CASE("vocabulary respects the frequency threshold") {
  std::vector<Tokens> corpus;
  for (int i = 0; i < 5; ++i) corpus.push_back({"often"});
  for (int i = 0; i < 4; ++i) corpus.push_back({"rare"});
  const Vocabulary v = Vocabulary::build(corpus, 5);
  CHECK(v.contains("often"));
  CHECK_FALSE(v.contains("rare"));
  CHECK(v.id("rare") == kUnkId);
  CHECK(v.id("<pad>") == kPadId);
  CHECK(v.id("<unk>") == kUnkId);
  CHECK(v.id("<id>") == kIdentityId);
  CHECK(v.size() == 4);
  CHECK_THROWS_AS(Vocabulary::build({}, 5), Error);
}

TEST_CASE("vocabulary ids are ordered by count then token") {
  const Vocabulary v = Vocabulary::build({{"b", "a", "c", "c"}}, 1);
  CHECK(v.tokens() == std::vector<std::string>{"<pad>", "<unk>", "<id>", "c", "a", "b"});
  CHECK(Vocabulary::from_tokens(v.tokens()) == v);
  CHECK_THROWS_AS(Vocabulary::from_tokens({"a", "b", "c"}), Error);
}

TEST_CASE("encode pads and truncates") {
  const Vocabulary v = Vocabulary::build({{"i", "am", "gay"}}, 1);
  const auto ids = encode({"i", "am", "gay"}, v, 100);
  REQUIRE(ids.size() == 100);
  CHECK(std::count(ids.begin() + 3, ids.end(), kPadId) == 97);
  Tokens longer(150, "am");
  longer[0] = "i";
  const auto cut = encode(longer, v, 100);
  CHECK(cut.size() == 100);
  CHECK(cut[0] == v.id("i"));
  CHECK(encode({"zebra"}, v, 3)[0] == kUnkId);
}

TEST_CASE("decode inverts encode on in-vocabulary tokens") {
  const Vocabulary v = Vocabulary::build({{"i", "am", "gay", "hug"}}, 1);
  const Tokens t{"hug", "i", "am", "gay"};
  CHECK(decode(encode(t, v, 10), v) == t);
  CHECK(decode(encode({"what"}, v, 4), v) == Tokens{"<unk>"});
}

TEST_CASE("make_example validates the weight") {
  const Vocabulary v = Vocabulary::build({{"x"}}, 1);
  CHECK(make_example({"x"}, 1, v, 4, 10.0).weight == 10.0);
  CHECK_THROWS_AS(make_example({"x"}, 1, v, 4, 0.0), Error);
}

TEST_CASE("identity replacement") {
  const TermList id = identities();
  CHECK(replace_identity_tokens({"i", "am", "gay"}, id) == Tokens{"i", "am", "<id>"});
  CHECK(replace_identity_tokens({"have", "a", "day"}, id) == Tokens{"have", "a", "day"});
  CHECK(replace_identity_tokens({"gay", "homosexual"}, id) == Tokens{"<id>", "<id>"});
  const Tokens once = replace_identity_tokens({"gay", "x", "lesbian"}, id);
  CHECK(replace_identity_tokens(once, id) == once);
}

TEST_CASE("term lists") {
  std::istringstream in("# identity terms\ngay\n\nlesbian\n");
  const TermList t = TermList::parse(in, TermKind::Identity);
  CHECK(t.terms() == std::vector<std::string>{"gay", "lesbian"});
  CHECK(t.contains("gay"));
  CHECK(t.any_in({"i", "am", "gay"}));
  CHECK_FALSE(t.any_in({}));
  std::istringstream multi("gay\nnew york\n");
  CHECK_THROWS_AS(TermList::parse(multi, TermKind::Identity), ParseError);
  std::istringstream empty("# nothing\n");
  CHECK_THROWS_AS(TermList::parse(empty, TermKind::Identity), ParseError);
}

TEST_CASE("synthetic templates") {
  TemplateSet set;
  set.templates = {{"I am " + slot(), 0}, {"I hate " + slot(), 1}};
  set.identity_fill = {"gay"};
  const auto rows = generate_synthetic(set);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].text == "i am gay");
  CHECK(rows[0].label == 0);
  CHECK(rows[1].label == 1);
  CHECK(rows[1].identity == "gay");
}

TEST_CASE("synthetic cross product and ordering") {
  TemplateSet set;
  for (int i = 0; i < 6; ++i) set.templates.push_back({"t" + std::to_string(i) + " " + slot(), i % 2});
  set.identity_fill = {"a", "b", "c", "d", "e"};
  const auto rows = generate_synthetic(set);
  CHECK(rows.size() == 30);
  CHECK(rows[0].text == "t0 a");
  CHECK(rows[1].text == "t0 b");
  CHECK(rows[5].text == "t1 a");
  std::map<std::string, int> per_identity;
  for (const auto& r : rows) ++per_identity[r.identity];
  for (const auto& [term, n] : per_identity) CHECK(n == 6);

  set.templates.push_back({std::string(kNameSlot) + " is a disgusting " + slot(), 1});
  CHECK_THROWS_AS(generate_synthetic(set), Error);
  set.name_fill = {"alice", "bob"};
  CHECK(generate_synthetic(set).size() == 40);
}

TEST_CASE("template files") {
  std::istringstream ok("I am " + slot() + "\tNon-toxic\nI hate " + slot() + "\t1\n");
  const auto t = TemplateSet::parse_templates(ok);
  REQUIRE(t.size() == 2);
  CHECK(t[0].label == 0);
  CHECK(t[1].label == 1);
  std::istringstream no_slot("hello there\t0\n");
  CHECK_THROWS_AS(TemplateSet::parse_templates(no_slot), ParseError);
}

TEST_CASE("dataset files") {
  std::istringstream in("1\tyou idiot\n0\ti am gay\n");
  const auto rows = parse_dataset(in);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].text == "you idiot");
  CHECK(rows[0].label == 1);
  CHECK(rows[1].label == 0);
  std::istringstream bad_label("0\tfine\n2\tx\n");
  CHECK_THROWS_WITH_AS(parse_dataset(bad_label), doctest::Contains(":2:"), ParseError);
  std::istringstream no_tab("0 missing tab\n");
  CHECK_THROWS_AS(parse_dataset(no_tab), ParseError);
}

TEST_CASE("dataset round trip through a file") {
  const auto path = std::filesystem::temp_directory_path() / "attriprior_dataset_roundtrip.tsv";
  const std::vector<LabeledText> rows{{"hello world", 0}, {"you idiot", 1}};
  write_dataset(path, rows);
  const auto back = load_dataset(path);
  REQUIRE(back.size() == 2);
  CHECK(back[1].text == "you idiot");
  CHECK(back[1].label == 1);
  std::filesystem::remove(path);
}
