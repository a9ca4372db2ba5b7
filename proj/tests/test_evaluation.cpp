#include <doctest.h>

#include <algorithm>

#include "attriprior/error.hpp"
#include "attriprior/evaluation.hpp"
#include "support/metric_oracles.hpp"
#include "support/micro.hpp"

using namespace attriprior;
using evaluation::classification_metrics;

TEST_CASE("classification metric examples") {
  const auto perfect = classification_metrics(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0});
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.f1 == 1.0);
  CHECK(*perfect.auc == 1.0);

  const auto flat = classification_metrics(std::vector<double>{0.5, 0.5, 0.5, 0.5}, std::vector<int>{1, 0, 1, 0});
  CHECK(flat.accuracy == 0.5);
  CHECK(*flat.auc == 0.5);
  CHECK(flat.fp_rate == 0.5);
  CHECK(flat.fn_rate == 0.0);

  CHECK(*evaluation::roc_auc(std::vector<double>{0.8, 0.7, 0.3}, std::vector<int>{1, 0, 1}) == 0.5);
}

TEST_CASE("degenerate metric inputs") {
  const auto one_class = classification_metrics(std::vector<double>{0.2, 0.3}, std::vector<int>{0, 0});
  CHECK_FALSE(one_class.auc.has_value());
  CHECK(one_class.f1 == 0.0);
  CHECK_THROWS_AS(classification_metrics(std::vector<double>{}, std::vector<int>{}), Error);
  CHECK_THROWS_AS(classification_metrics(std::vector<double>{0.1}, std::vector<int>{0, 1}), Error);
}

TEST_CASE("metric report invariants and order independence") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    auto inst = oracle::random_instance(rng);
    const auto r = classification_metrics(inst.scores, inst.labels);
    CHECK(r.fp_rate + r.fn_rate == doctest::Approx(1.0 - r.accuracy).epsilon(1e-12));
    for (double v : {r.accuracy, r.f1, *r.auc, r.fp_rate, r.fn_rate}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    std::vector<std::size_t> perm(inst.scores.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> s;
    std::vector<int> l;
    for (std::size_t i : perm) {
      s.push_back(inst.scores[i]);
      l.push_back(inst.labels[i]);
    }
    const auto shuffled = classification_metrics(s, l);
    CHECK(shuffled.accuracy == r.accuracy);
    CHECK(shuffled.f1 == r.f1);
    CHECK(*shuffled.auc == *r.auc);
  }
}

TEST_CASE("rank-statistic AUC agrees with trapezoidal ROC integration") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = oracle::random_instance(rng);
    CHECK(std::abs(*evaluation::roc_auc(inst.scores, inst.labels) - oracle::trapezoid_auc(inst.scores, inst.labels)) <=
          1e-9);
  }
}

TEST_CASE("equality differences on a hand fixture") {
  // Term a: negatives 0.9, 0.2 -> FPR 0.5. Term b: negatives 0.1, 0.3 -> FPR 0.
  // Overall FPR 1/4. Positives: a 0.8, 0.7 (FNR 0), b 0.6, 0.4 (FNR 0.5).
  const std::vector<double> scores{0.9, 0.2, 0.8, 0.7, 0.1, 0.3, 0.6, 0.4};
  const std::vector<int> labels{0, 0, 1, 1, 0, 0, 1, 1};
  const std::vector<std::string> terms{"a", "a", "a", "a", "b", "b", "b", "b"};
  const auto r = evaluation::equality_differences(scores, labels, terms);
  CHECK(r.overall_fpr == 0.25);
  CHECK(r.fped == 0.5);
  CHECK(r.overall_fnr == 0.25);
  CHECK(r.fned == 0.5);
  CHECK(*r.per_term.at("a").fpr == 0.5);
  CHECK(r.per_term.at("b").n == 4);
}

TEST_CASE("identical per-term rates give zero equality differences") {
  const std::vector<double> scores{0.9, 0.1, 0.9, 0.1};
  const std::vector<int> labels{1, 0, 1, 0};
  const std::vector<std::string> terms{"a", "a", "b", "b"};
  const auto r = evaluation::equality_differences(scores, labels, terms);
  CHECK(r.fped == 0.0);
  CHECK(r.fned == 0.0);
}

TEST_CASE("terms missing a label are skipped and flagged") {
  const std::vector<double> scores{0.9, 0.1, 0.7, 0.2};
  const std::vector<int> labels{1, 0, 1, 0};
  const std::vector<std::string> terms{"a", "a", "b", "c"};
  const auto r = evaluation::equality_differences(scores, labels, terms);
  CHECK(r.skipped_fpr == std::vector<std::string>{"b"});
  CHECK(r.skipped_fnr == std::vector<std::string>{"c"});
  CHECK_FALSE(r.per_term.at("b").fpr.has_value());
  CHECK_THROWS_AS(evaluation::equality_differences(std::vector<double>{0.1}, std::vector<int>{0},
                                                   std::vector<std::string>{"a"}),
                  Error);
}

TEST_CASE("equality differences agree with the brute-force oracle") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const auto inst = oracle::random_instance(rng);
    const auto r = evaluation::equality_differences(inst.scores, inst.labels, inst.terms);
    const auto o = oracle::brute_force_equality(inst.scores, inst.labels, inst.terms);
    CHECK(r.fped == o.fped);
    CHECK(r.fned == o.fned);
    CHECK(r.fped <= static_cast<double>(r.per_term.size()));
  }
}

TEST_CASE("filtering partitions the dataset") {
  const auto identity = text::TermList::from_terms({"w1"}, text::TermKind::Identity);
  std::mt19937_64 rng(4);
  std::vector<text::TokenizedExample> data;
  for (int i = 0; i < 40; ++i) data.push_back(micro::random_example(rng));
  const auto kept = evaluation::filter_by_terms(data, identity);
  std::size_t with = 0;
  for (const auto& ex : data) with += identity.any_in(ex.tokens);
  CHECK(kept.size() == with);
  for (std::size_t i : kept) CHECK(identity.any_in(data[i].tokens));
  CHECK(evaluation::select(data, kept).size() == kept.size());
}

TEST_CASE("rule-based classifier") {
  const auto toxic = text::TermList::from_terms({"f*ck", "idiot"}, text::TermKind::Toxic);
  CHECK(evaluation::rule_based_classify({"f*ck", "you"}, toxic) == 1);
  CHECK(evaluation::rule_based_classify({"have", "a", "nice", "day"}, toxic) == 0);
  CHECK(evaluation::rule_based_classify({}, toxic) == 0);
}

TEST_CASE("nearest neighbours") {
  const auto vocab = micro::vocabulary(3);  // <pad> <unk> <id> w0 w1 w2
  auto p = model::zero_params(micro::config(), vocab.size());
  p.embedding = Tensor::matrix(6, 4, {0, 0, 0, 0,  //
                                      0, 0, 0, 1,  //
                                      0, 0, 1, 0,  //
                                      1, 0, 0, 0,  //
                                      0, 1, 0, 0,  //
                                      1, 0, 0, 0});
  const auto dup = evaluation::nearest_neighbors(p, vocab, "w0", 5);
  REQUIRE(dup.neighbors.size() == 4);
  CHECK(dup.neighbors[0].token == "w2");
  CHECK(dup.neighbors[0].similarity == doctest::Approx(1.0));
  // The rest are orthogonal: similarity 0, ordered by token.
  CHECK(dup.neighbors[1].token == "<id>");
  CHECK(dup.neighbors[2].token == "<unk>");
  CHECK(dup.neighbors[3].token == "w1");
  CHECK(dup.neighbors[3].similarity == 0.0);
  CHECK(dup.zero_norm == std::vector<std::string>{"<pad>"});
  CHECK(evaluation::nearest_neighbors(p, vocab, "w0", 2).neighbors.size() == 2);
  CHECK_THROWS_AS(evaluation::nearest_neighbors(p, vocab, "zebra"), Error);
  CHECK_THROWS_AS(evaluation::nearest_neighbors(p, vocab, "<pad>"), Error);
}

TEST_CASE("cosine similarity is symmetric") {
  const auto p = micro::params(5);
  for (std::size_t a = 1; a < 10; ++a) {
    for (std::size_t b = 1; b < 10; ++b) {
      CHECK(evaluation::cosine_similarity(p, a, b) == doctest::Approx(evaluation::cosine_similarity(p, b, a)).epsilon(1e-15));
    }
  }
}

TEST_CASE("mean term attribution") {
  const auto p = micro::params(6);
  const std::vector<text::TokenizedExample> data{micro::example({"w1", "w2"}, 1), micro::example({"w3", "w1"}, 0),
                                                 micro::example({"w4"}, 0)};
  const auto terms = text::TermList::from_terms({"w1", "w6"}, text::TermKind::Identity);
  attribution::IGConfig cfg;
  cfg.steps = 10;
  const auto r = evaluation::mean_term_attribution(p, data, terms, cfg, true);
  CHECK(r.absent == std::vector<std::string>{"w6"});
  CHECK(r.occurrences.at("w1") == 2);
  const double a0 = attribution::attribute_example(p, data[0].token_ids, cfg).per_token[0];
  const double a1 = attribution::attribute_example(p, data[1].token_ids, cfg).per_token[1];
  CHECK(r.mean.at("w1") == doctest::Approx((a0 + a1) / 2.0).epsilon(1e-12));
  CHECK(r.mean_abs.at("w1") == doctest::Approx((std::abs(a0) + std::abs(a1)) / 2.0).epsilon(1e-12));
  REQUIRE(r.vocab_average.has_value());
  CHECK_FALSE(evaluation::mean_term_attribution(p, data, terms, cfg).vocab_average.has_value());
}

TEST_CASE("a token the model cannot see has zero attribution") {
  auto p = micro::params(7);
  const std::size_t id = micro::vocabulary().id("w5");
  for (std::size_t d = 0; d < p.config.embed_dim; ++d) p.embedding.at(id, d) = 0.0;
  const auto terms = text::TermList::from_terms({"w5"}, text::TermKind::Identity);
  attribution::IGConfig cfg;
  cfg.steps = 5;
  const auto r = evaluation::mean_term_attribution(p, {micro::example({"w0", "w5", "w2"}, 1)}, terms, cfg);
  CHECK(r.mean.at("w5") == 0.0);
}
