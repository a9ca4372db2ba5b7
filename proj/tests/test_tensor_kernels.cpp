#include <doctest.h>

#include <cstdlib>
#include <random>

#include "attriprior/error.hpp"
#include "attriprior/kernels.hpp"
#include "attriprior/tensor.hpp"

using namespace attriprior;

namespace {

std::vector<double> random_values(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("tensor construction and accessors") {
  const Tensor m = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(m.rank() == 2);
  CHECK(m.numel() == 6);
  CHECK(m.at(1, 2) == 6.0);
  CHECK(m.sum() == 21.0);
  CHECK(shape_to_string(m.shape()) == "[2, 3]");
  CHECK(Tensor::scalar(4.0).item() == 4.0);
  CHECK_THROWS_AS(m.item(), Error);
  CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  CHECK(Tensor().numel() == 1);
}

TEST_CASE("tensor finiteness check") {
  Tensor t(Shape{3}, 1.0);
  CHECK(t.all_finite());
  t[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("conv1d on a hand example") {
  // One channel, one width-2 filter [1, -1] over [1, 2, 4]: differences.
  const kernels::ConvDims d{3, 1, 1, 2};
  const std::vector<double> in{1, 2, 4}, w{1, -1};
  std::vector<double> out(d.output_size());
  kernels::conv1d(d, in, w, out);
  CHECK(out == std::vector<double>{-1, -2});
}

TEST_CASE("parallel kernels agree with the serial reference") {
  std::mt19937_64 rng(11);
  for (const kernels::ConvDims d : {kernels::ConvDims{7, 3, 4, 2}, kernels::ConvDims{100, 32, 64, 4},
                                    kernels::ConvDims{5, 2, 3, 5}, kernels::ConvDims{60, 128, 128, 3}}) {
    CAPTURE(d.length);
    const auto x = random_values(d.input_size(), rng);
    const auto w = random_values(d.filter_size(), rng);
    const auto g = random_values(d.output_size(), rng);
    std::vector<double> a(d.output_size()), b(d.output_size());
    kernels::conv1d(d, x, w, a);
    kernels::reference::conv1d(d, x, w, b);
    CHECK(max_abs_diff(a, b) <= 1e-12);

    std::vector<double> gi(d.input_size()), gi_ref(d.input_size());
    kernels::conv1d_input_grad(d, g, w, gi);
    kernels::reference::conv1d_input_grad(d, g, w, gi_ref);
    CHECK(max_abs_diff(gi, gi_ref) <= 1e-12);

    std::vector<double> gw(d.filter_size()), gw_ref(d.filter_size());
    kernels::conv1d_filter_grad(d, x, g, gw);
    kernels::reference::conv1d_filter_grad(d, x, g, gw_ref);
    CHECK(max_abs_diff(gw, gw_ref) <= 1e-12);
  }
  for (std::size_t n : {1u, 7u, 64u, 130u}) {
    const auto a = random_values(n * (n + 1), rng), b = random_values((n + 1) * 3, rng);
    std::vector<double> c(n * 3), c_ref(n * 3);
    kernels::matmul(n, n + 1, 3, a, b, c);
    kernels::reference::matmul(n, n + 1, 3, a, b, c_ref);
    CHECK(max_abs_diff(c, c_ref) <= 1e-12);
  }
}

TEST_CASE("conv1d input gradient is the adjoint of conv1d") {
  // <conv(x), g> == <x, conv_input_grad(g)> and == <w, conv_filter_grad(x, g)>.
  std::mt19937_64 rng(5);
  const kernels::ConvDims d{9, 4, 3, 3};
  const auto x = random_values(d.input_size(), rng), w = random_values(d.filter_size(), rng),
             g = random_values(d.output_size(), rng);
  std::vector<double> y(d.output_size()), gi(d.input_size()), gw(d.filter_size());
  kernels::reference::conv1d(d, x, w, y);
  kernels::reference::conv1d_input_grad(d, g, w, gi);
  kernels::reference::conv1d_filter_grad(d, x, g, gw);
  double lhs = 0, rhs_x = 0, rhs_w = 0;
  for (std::size_t i = 0; i < y.size(); ++i) lhs += y[i] * g[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs_x += x[i] * gi[i];
  for (std::size_t i = 0; i < w.size(); ++i) rhs_w += w[i] * gw[i];
  CHECK(lhs == doctest::Approx(rhs_x).epsilon(1e-12));
  CHECK(lhs == doctest::Approx(rhs_w).epsilon(1e-12));
}

TEST_CASE("thread count honors the environment") {
  setenv("ATTRIPRIOR_THREADS", "1", 1);
  CHECK(kernels::worker_threads() == 1);
  unsetenv("ATTRIPRIOR_THREADS");
  CHECK(kernels::worker_threads() >= 1);
}
