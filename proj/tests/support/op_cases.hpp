#pragma once

// One finite-difference case generator per differentiable op.

#include <string>
#include <vector>

#include "support/gradcheck.hpp"

namespace gradcheck {

struct OpCase {
  std::string name;
  std::function<std::vector<Tensor>(std::mt19937_64&)> inputs;
  ScalarFn fn;
};

namespace detail {

// Values at least `margin` away from `kink`, so a perturbation of size eps
// never crosses a non-differentiable point.
inline Tensor away_from(const Shape& shape, std::mt19937_64& rng, double kink, double margin = 1e-3) {
  Tensor t = random_tensor(shape, rng);
  for (double& v : t.data()) {
    if (std::abs(v - kink) < margin) v = kink + (v < kink ? -margin : margin) * 2.0;
  }
  return t;
}

// [T x F] whose column maxima are separated from the runner-up.
inline Tensor distinct_columns(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  for (;;) {
    Tensor t = random_tensor({rows, cols}, rng);
    bool ok = true;
    for (std::size_t c = 0; c < cols && ok; ++c) {
      std::vector<double> col;
      for (std::size_t r = 0; r < rows; ++r) col.push_back(t.at(r, c));
      std::sort(col.begin(), col.end());
      ok = col[rows - 1] - col[rows - 2] > 1e-3;
    }
    if (ok) return t;
  }
}

inline std::vector<std::size_t> random_ids(std::size_t n, std::size_t bound, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, bound - 1);
  std::vector<std::size_t> ids(n);
  for (auto& i : ids) i = d(rng);
  return ids;
}

}  // namespace detail

/// Index arguments are drawn once per case from `seed` so the function is
/// fixed while its tensor inputs are perturbed.
inline std::vector<OpCase> op_cases(std::uint64_t seed) {
  std::mt19937_64 r(seed ^ 0xC0FFEEULL);
  const auto gather_ids = detail::random_ids(5, 6, r);
  const auto positions = detail::random_ids(4, 6, r);
  const std::uint64_t w = seed;  // weights of the reducing sum
  auto mat = [](Shape s) { return [s](std::mt19937_64& g) { return std::vector<Tensor>{random_tensor(s, g)}; }; };
  auto two = [](Shape a, Shape b) {
    return [a, b](std::mt19937_64& g) { return std::vector<Tensor>{random_tensor(a, g), random_tensor(b, g)}; };
  };
  using V = std::span<const ad::Var>;
  return {
      {"add", two({3, 4}, {3, 4}), [w](ad::Graph&, V x) { return weighted_sum(ad::add(x[0], x[1]), w); }},
      {"sub", two({3, 4}, {3, 4}), [w](ad::Graph&, V x) { return weighted_sum(ad::sub(x[0], x[1]), w); }},
      {"mul", two({3, 4}, {3, 4}), [w](ad::Graph&, V x) { return weighted_sum(ad::mul(x[0], x[1]), w); }},
      {"scale", mat({3, 4}), [w](ad::Graph&, V x) { return weighted_sum(ad::scale(x[0], -2.5), w); }},
      {"neg", mat({3, 4}), [w](ad::Graph&, V x) { return weighted_sum(ad::neg(x[0]), w); }},
      {"square", mat({3, 4}), [w](ad::Graph&, V x) { return weighted_sum(ad::square(x[0]), w); }},
      {"reciprocal",
       [](std::mt19937_64& g) {
         Tensor t = random_tensor({3, 4}, g, 0.5, 2.0);
         for (std::size_t i = 0; i < t.numel(); i += 2) t[i] = -t[i];
         return std::vector<Tensor>{t};
       },
       [w](ad::Graph&, V x) { return weighted_sum(ad::reciprocal(x[0]), w); }},
      {"log", [](std::mt19937_64& g) { return std::vector<Tensor>{random_tensor({3, 4}, g, 0.2, 3.0)}; },
       [w](ad::Graph&, V x) { return weighted_sum(ad::log(x[0]), w); }},
      {"clamp_min", [](std::mt19937_64& g) { return std::vector<Tensor>{detail::away_from({3, 4}, g, 0.1)}; },
       [w](ad::Graph&, V x) { return weighted_sum(ad::clamp_min(x[0], 0.1), w); }},
      {"relu", [](std::mt19937_64& g) { return std::vector<Tensor>{detail::away_from({3, 4}, g, 0.0)}; },
       [w](ad::Graph&, V x) { return weighted_sum(ad::relu(x[0]), w); }},
      {"sum", mat({3, 4}), [](ad::Graph&, V x) { return ad::scale(ad::sum(ad::square(x[0])), 0.5); }},
      {"expand", mat({}), [w](ad::Graph&, V x) { return weighted_sum(ad::expand(x[0], {3, 4}), w); }},
      {"sum_rows", mat({3, 4}), [w](ad::Graph&, V x) { return weighted_sum(ad::sum_rows(x[0]), w); }},
      {"broadcast_rows", mat({4}), [w](ad::Graph&, V x) { return weighted_sum(ad::broadcast_rows(x[0], 3), w); }},
      {"row_sums", mat({3, 4}), [w](ad::Graph&, V x) { return weighted_sum(ad::row_sums(x[0]), w); }},
      {"broadcast_cols", mat({3}), [w](ad::Graph&, V x) { return weighted_sum(ad::broadcast_cols(x[0], 4), w); }},
      {"gather_rows", mat({6, 3}),
       [w, gather_ids](ad::Graph&, V x) { return weighted_sum(ad::gather_rows(x[0], gather_ids), w); }},
      {"scatter_rows", mat({5, 3}),
       [w, gather_ids](ad::Graph&, V x) { return weighted_sum(ad::scatter_rows(x[0], gather_ids, 6), w); }},
      {"conv1d", two({7, 3}, {4, 2, 3}), [w](ad::Graph&, V x) { return weighted_sum(ad::conv1d(x[0], x[1]), w); }},
      {"conv1d_input_grad", two({6, 4}, {4, 2, 3}),
       [w](ad::Graph&, V x) { return weighted_sum(ad::conv1d_input_grad(x[0], x[1], 7), w); }},
      {"conv1d_filter_grad", two({7, 3}, {6, 4}),
       [w](ad::Graph&, V x) { return weighted_sum(ad::conv1d_filter_grad(x[0], x[1], 2), w); }},
      {"max_over_time", [](std::mt19937_64& g) { return std::vector<Tensor>{detail::distinct_columns(6, 4, g)}; },
       [w](ad::Graph&, V x) { return weighted_sum(ad::max_over_time(x[0]), w); }},
      {"unpool", mat({4}), [w, positions](ad::Graph&, V x) { return weighted_sum(ad::unpool(x[0], positions, 6), w); }},
      {"pick", mat({6, 4}), [w, positions](ad::Graph&, V x) { return weighted_sum(ad::pick(x[0], positions), w); }},
      {"concat",
       [](std::mt19937_64& g) {
         return std::vector<Tensor>{random_tensor({3}, g), random_tensor({2}, g), random_tensor({4}, g)};
       },
       [w](ad::Graph&, V x) {
         const std::vector<ad::Var> parts{x[0], x[1], x[2]};
         return weighted_sum(ad::concat(parts), w);
       }},
      {"slice", mat({8}), [w](ad::Graph&, V x) { return weighted_sum(ad::slice(x[0], 2, 4), w); }},
      {"pad", mat({3}), [w](ad::Graph&, V x) { return weighted_sum(ad::pad(x[0], 2, 7), w); }},
      {"matmul", two({3, 4}, {4, 2}), [w](ad::Graph&, V x) { return weighted_sum(ad::matmul(x[0], x[1]), w); }},
      {"transpose", mat({3, 4}), [w](ad::Graph&, V x) { return weighted_sum(ad::transpose(x[0]), w); }},
      {"reshape", mat({3, 4}), [w](ad::Graph&, V x) { return weighted_sum(ad::reshape(x[0], {2, 6}), w); }},
      {"softmax", mat({5}), [w](ad::Graph&, V x) { return weighted_sum(ad::softmax(x[0]), w); }},
      {"select", mat({5}), [](ad::Graph&, V x) { return ad::square(ad::select(x[0], 3)); }},
      {"dropout", mat({3, 4}),
       [w](ad::Graph&, V x) {
         std::mt19937_64 mask_rng(w);
         return weighted_sum(ad::dropout(x[0], 0.3, mask_rng), w);
       }},
  };
}

}  // namespace gradcheck
