#include <doctest.h>

#include <sstream>

#include "attriprior/checkpoint.hpp"
#include "attriprior/error.hpp"
#include "attriprior/model.hpp"
#include "support/gradcheck.hpp"
#include "support/micro.hpp"

using namespace attriprior;
using model::Mode;

namespace {

std::vector<std::size_t> ids(std::initializer_list<std::size_t> visible, std::size_t len = 6) {
  std::vector<std::size_t> out(visible);
  out.resize(len, text::kPadId);
  return out;
}

Tensor eval_probs(const model::ModelParams& p, const std::vector<std::size_t>& token_ids) {
  return model::predict(p, token_ids).probs;
}

// -sum_i log p_{y_i} over a batch, built directly from autodiff ops.
ad::Var batch_nll(ad::Graph& g, const model::ModelVars& vars, const std::vector<text::TokenizedExample>& batch) {
  ad::Var total;
  for (const auto& ex : batch) {
    const auto out = model::forward(vars, ex.token_ids, Mode::Eval);
    const ad::Var nll = ad::neg(ad::log(ad::select(out.probs, static_cast<std::size_t>(ex.label))));
    total = total.valid() ? ad::add(total, nll) : nll;
  }
  return total;
}

}  // namespace

TEST_CASE("zero parameters give a uniform posterior") {
  const auto p = model::zero_params(micro::config(), 10);
  const Tensor probs = eval_probs(p, ids({3, 4, 5}));
  CHECK(probs[0] == 0.5);
  CHECK(probs[1] == 0.5);
}

TEST_CASE("probabilities sum to one") {
  const auto p = micro::params(1);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto ex = micro::random_example(rng);
    const Tensor probs = eval_probs(p, ex.token_ids);
    CHECK(probs[0] + probs[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(probs[0] >= 0.0);
    CHECK(probs[1] >= 0.0);
  }
}

TEST_CASE("train mode is reproducible under a fixed seed") {
  const auto p = micro::params(3);
  const auto x = ids({3, 4, 5, 6});
  auto run = [&](std::uint64_t seed) {
    ad::Graph g;
    std::mt19937_64 rng(seed);
    return model::forward(model::bind(g, p, false), x, Mode::Train, &rng).probs.value();
  };
  CHECK(run(9) == run(9));
  CHECK(eval_probs(p, x) == eval_probs(p, x));
  ad::Graph g;
  CHECK_THROWS_AS(model::forward(model::bind(g, p, false), x, Mode::Train), Error);
}

TEST_CASE("dropout is inactive in eval mode") {
  const auto p = micro::params(4);
  const auto x = ids({3, 7});
  ad::Graph g;
  std::mt19937_64 rng(1);
  const auto vars = model::bind(g, p, false);
  CHECK(model::forward(vars, x, Mode::Eval, &rng).probs.value() == eval_probs(p, x));
}

TEST_CASE("forward from exact embedding rows equals forward") {
  const auto p = micro::params(5);
  const auto x = ids({3, 9, 4, 8, 2});
  ad::Graph g;
  const auto vars = model::bind(g, p, false);
  const auto direct = model::forward(vars, x, Mode::Eval);
  const auto from_rows = model::forward_from_embeddings(vars, g.constant(model::lookup(p, x)), Mode::Eval);
  CHECK(direct.logits.value() == from_rows.logits.value());
  CHECK(direct.probs.value() == from_rows.probs.value());

  ad::Graph h;
  const auto table = model::bind(h, p, false, true);
  CHECK(model::forward(table, x, Mode::Eval).probs.value() == direct.probs.value());
}

TEST_CASE("initialisation") {
  const auto cfg = micro::config();
  const auto p = model::init_params(cfg, 50, 17);
  CHECK(p == model::init_params(cfg, 50, 17));
  CHECK_FALSE(p == model::init_params(cfg, 50, 18));
  for (const Tensor* t : {&p.embedding, &p.filters[0], &p.filters[1], &p.output_weights}) {
    for (double v : t->data()) {
      CHECK(v > -0.05);
      CHECK(v < 0.05);
    }
  }
  for (std::size_t d = 0; d < cfg.embed_dim; ++d) CHECK(p.embedding.at(text::kPadId, d) == 0.0);
  for (const Tensor& b : p.biases) CHECK(b == Tensor(b.shape()));
  CHECK(p.output_bias == Tensor(p.output_bias.shape()));
  CHECK(p.tensor_names().size() == p.tensors().size());
}

TEST_CASE("model config validation") {
  auto cfg = micro::config();
  CHECK_NOTHROW(cfg.validate());
  cfg.max_seq_len = 2;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = micro::config();
  cfg.filter_widths.clear();
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = micro::config();
  cfg.dropout_rate = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("token ids outside the vocabulary are rejected") {
  const auto p = micro::params(6);
  CHECK_THROWS_AS(model::predict(p, ids({3, 10})), Error);
  CHECK_THROWS_AS(model::predict(p, ids({3}, 5)), ShapeError);
}

TEST_CASE("permuting filters within a width leaves the posterior unchanged") {
  const auto p = micro::params(7);
  auto q = p;
  const std::size_t f = p.config.filters_per_width, width = 3, dim = p.config.embed_dim;
  const std::vector<std::size_t> perm{2, 0, 1};
  const std::size_t block = 1;  // second width
  for (std::size_t i = 0; i < f; ++i) {
    for (std::size_t k = 0; k < width * dim; ++k) q.filters[block][i * width * dim + k] = p.filters[block][perm[i] * width * dim + k];
    q.biases[block][i] = p.biases[block][perm[i]];
    for (std::size_t c = 0; c < 2; ++c) {
      q.output_weights.at(c, block * f + i) = p.output_weights.at(c, block * f + perm[i]);
    }
  }
  std::mt19937_64 rng(8);
  for (int n = 0; n < 10; ++n) {
    const auto ex = micro::random_example(rng);
    const Tensor a = eval_probs(p, ex.token_ids), b = eval_probs(q, ex.token_ids);
    CHECK(a[1] == doctest::Approx(b[1]).epsilon(1e-12));
  }
}

TEST_CASE("cross-entropy gradient matches finite differences on a micro batch") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    CAPTURE(seed);
    const auto p = micro::params(seed);
    std::mt19937_64 rng(seed);
    const std::vector<text::TokenizedExample> batch{micro::random_example(rng), micro::random_example(rng),
                                                    micro::random_example(rng)};
    ad::Graph g;
    const auto vars = model::bind(g, p, true, true);
    std::vector<ad::Var> wrt{vars.embedding};
    for (const ad::Var& v : vars.dense()) wrt.push_back(v);
    const auto analytic = g.gradients(batch_nll(g, vars, batch), wrt);
    const auto numeric = gradcheck::numeric_gradients(
        [&](const std::vector<Tensor>& values) {
          const auto q = micro::with_tensors(p, values);
          ad::Graph h;
          return batch_nll(h, model::bind(h, q, false, true), batch).item();
        },
        micro::tensors_of(p), 1e-5);
    const auto names = p.tensor_names();
    for (std::size_t k = 0; k < analytic.size(); ++k) {
      CAPTURE(names[k]);
      CHECK(gradcheck::relative_error(analytic[k], numeric[k]) <= 1e-4);
    }
  }
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  model::Checkpoint ckpt{micro::params(21), micro::vocabulary()};
  ckpt.params.config.dropout_rate = 0.1 + 1e-17;
  ckpt.params.embedding[5] = 1.0 / 3.0;
  std::stringstream buffer;
  model::write_checkpoint(buffer, ckpt);
  const auto back = model::read_checkpoint(buffer);
  CHECK(back.params == ckpt.params);
  CHECK(back.vocab == ckpt.vocab);

  std::stringstream truncated(buffer.str().substr(0, 40));
  CHECK_THROWS_AS(model::read_checkpoint(truncated), Error);
  std::stringstream garbage("not a checkpoint at all");
  CHECK_THROWS_AS(model::read_checkpoint(garbage), Error);
}

TEST_CASE("checkpoint files") {
  const auto path = std::filesystem::temp_directory_path() / "attriprior_model_test.ckpt";
  const model::Checkpoint ckpt{micro::params(22), micro::vocabulary()};
  model::save_checkpoint(path, ckpt);
  CHECK(model::load_checkpoint(path).params == ckpt.params);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(model::load_checkpoint(path), Error);
}
