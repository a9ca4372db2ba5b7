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

#include <algorithm>

namespace attriprior::kernels::reference {

void conv1d(const ConvDims& d, std::span<const double> input, std::span<const double> filters,
            std::span<double> output) {
  for (std::size_t t = 0; t < d.positions(); ++t) {
    for (std::size_t f = 0; f < d.count; ++f) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d.width; ++k) {
        for (std::size_t c = 0; c < d.channels; ++c) {
          acc += input[(t + k) * d.channels + c] * filters[(f * d.width + k) * d.channels + c];
        }
      }
      output[t * d.count + f] = acc;
    }
  }
}

void conv1d_input_grad(const ConvDims& d, std::span<const double> grad_out, std::span<const double> filters,
                       std::span<double> grad_in) {
  std::fill(grad_in.begin(), grad_in.end(), 0.0);
  for (std::size_t t = 0; t < d.positions(); ++t) {
    for (std::size_t f = 0; f < d.count; ++f) {
      for (std::size_t k = 0; k < d.width; ++k) {
        for (std::size_t c = 0; c < d.channels; ++c) {
          grad_in[(t + k) * d.channels + c] += grad_out[t * d.count + f] * filters[(f * d.width + k) * d.channels + c];
        }
      }
    }
  }
}

void conv1d_filter_grad(const ConvDims& d, std::span<const double> input, std::span<const double> grad_out,
                        std::span<double> grad_filters) {
  std::fill(grad_filters.begin(), grad_filters.end(), 0.0);
  for (std::size_t t = 0; t < d.positions(); ++t) {
    for (std::size_t f = 0; f < d.count; ++f) {
      for (std::size_t k = 0; k < d.width; ++k) {
        for (std::size_t c = 0; c < d.channels; ++c) {
          grad_filters[(f * d.width + k) * d.channels + c] += grad_out[t * d.count + f] * input[(t + k) * d.channels + c];
        }
      }
    }
  }
}

void matmul(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
            std::span<double> c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] = acc;
    }
  }
}

}  // namespace attriprior::kernels::reference
