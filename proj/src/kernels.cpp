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

#include "attriprior/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <string>

namespace attriprior::kernels {
namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

}  // namespace

void conv1d(const ConvDims& d, std::span<const double> input, std::span<const double> filters,
            std::span<double> output) {
  const std::size_t positions = d.positions();
  const std::size_t span = d.width * d.channels;
  const auto n = static_cast<std::ptrdiff_t>(positions);
  const bool parallel = positions * d.count * span >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    // A window of `width` consecutive rows is contiguous in row-major order.
    const double* window = input.data() + static_cast<std::size_t>(t) * d.channels;
    double* out = output.data() + static_cast<std::size_t>(t) * d.count;
    for (std::size_t f = 0; f < d.count; ++f) {
      const double* w = filters.data() + f * span;
      double acc = 0.0;
      for (std::size_t i = 0; i < span; ++i) acc += window[i] * w[i];
      out[f] = acc;
    }
  }
}

void conv1d_input_grad(const ConvDims& d, std::span<const double> grad_out, std::span<const double> filters,
                       std::span<double> grad_in) {
  const std::size_t positions = d.positions();
  const auto n = static_cast<std::ptrdiff_t>(d.length);
  const bool parallel = positions * d.count * d.width * d.channels >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t l = 0; l < n; ++l) {
    const auto row = static_cast<std::size_t>(l);
    double* gin = grad_in.data() + row * d.channels;
    std::fill(gin, gin + d.channels, 0.0);
    const std::size_t k_lo = row + 1 > positions ? row + 1 - positions : 0;
    const std::size_t k_hi = std::min(d.width, row + 1);
    for (std::size_t k = k_lo; k < k_hi; ++k) {
      const std::size_t t = row - k;
      const double* gout = grad_out.data() + t * d.count;
      for (std::size_t f = 0; f < d.count; ++f) {
        const double g = gout[f];
        const double* w = filters.data() + (f * d.width + k) * d.channels;
        for (std::size_t c = 0; c < d.channels; ++c) gin[c] += g * w[c];
      }
    }
  }
}

void conv1d_filter_grad(const ConvDims& d, std::span<const double> input, std::span<const double> grad_out,
                        std::span<double> grad_filters) {
  const std::size_t positions = d.positions();
  const std::size_t span = d.width * d.channels;
  const auto n = static_cast<std::ptrdiff_t>(d.count);
  const bool parallel = positions * d.count * span >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t fi = 0; fi < n; ++fi) {
    const auto f = static_cast<std::size_t>(fi);
    double* gw = grad_filters.data() + f * span;
    std::fill(gw, gw + span, 0.0);
    for (std::size_t t = 0; t < positions; ++t) {
      const double g = grad_out[t * d.count + f];
      if (g == 0.0) continue;
      const double* window = input.data() + t * d.channels;
      for (std::size_t i = 0; i < span; ++i) gw[i] += g * window[i];
    }
  }
}

void matmul(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
            std::span<double> c) {
  const auto rows = static_cast<std::ptrdiff_t>(m);
  const bool parallel = m * k * n >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t ri = 0; ri < rows; ++ri) {
    const auto r = static_cast<std::size_t>(ri);
    double* out = c.data() + r * n;
    std::fill(out, out + n, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      const double av = a[r * k + i];
      const double* brow = b.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) out[j] += av * brow[j];
    }
  }
}

int worker_threads() {
  if (const char* env = std::getenv("ATTRIPRIOR_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return omp_get_max_threads();
}

void configure_threads_from_env() {
  if (std::getenv("ATTRIPRIOR_THREADS")) omp_set_num_threads(worker_threads());
}

}  // namespace attriprior::kernels
