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

// Dense compute kernels behind the autodiff ops. The top-level functions are
// OpenMP-parallel; `kernels::reference` holds plain serial loops that the
// tests and the benchmark compare against.

#include <cstddef>
#include <span>

namespace attriprior::kernels {

/// Valid (unpadded) 1-D convolution over time.
///   input   [length x channels]
///   filters [count x width x channels]
///   output  [positions x count], positions = length - width + 1
struct ConvDims {
  std::size_t length = 0;
  std::size_t channels = 0;
  std::size_t count = 0;
  std::size_t width = 0;

  std::size_t positions() const { return length >= width ? length - width + 1 : 0; }
  std::size_t input_size() const { return length * channels; }
  std::size_t filter_size() const { return count * width * channels; }
  std::size_t output_size() const { return positions() * count; }
};

// out[t,f] = sum_{k,c} in[t+k,c] * w[f,k,c]
void conv1d(const ConvDims& d, std::span<const double> input, std::span<const double> filters,
            std::span<double> output);
// grad_in[l,c] = sum_{t+k=l} sum_f grad_out[t,f] * w[f,k,c]
void conv1d_input_grad(const ConvDims& d, std::span<const double> grad_out, std::span<const double> filters,
                       std::span<double> grad_in);
// grad_w[f,k,c] = sum_t grad_out[t,f] * in[t+k,c]
void conv1d_filter_grad(const ConvDims& d, std::span<const double> input, std::span<const double> grad_out,
                        std::span<double> grad_filters);
// c[m x n] = a[m x k] * b[k x n]
void matmul(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
            std::span<double> c);

namespace reference {

void conv1d(const ConvDims& d, std::span<const double> input, std::span<const double> filters,
            std::span<double> output);
void conv1d_input_grad(const ConvDims& d, std::span<const double> grad_out, std::span<const double> filters,
                       std::span<double> grad_in);
void conv1d_filter_grad(const ConvDims& d, std::span<const double> input, std::span<const double> grad_out,
                        std::span<double> grad_filters);
void matmul(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a, std::span<const double> b,
            std::span<double> c);

}  // namespace reference

/// Number of worker threads honoring ATTRIPRIOR_THREADS when set.
int worker_threads();
/// Applies ATTRIPRIOR_THREADS to the OpenMP runtime. Idempotent.
void configure_threads_from_env();

}  // namespace attriprior::kernels
