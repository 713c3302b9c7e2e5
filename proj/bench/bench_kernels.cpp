// SPDX-License-Identifier: Apache-2.0
//
// rispos - RIS-aided fingerprint positioning toolkit
// Copyright (C) 2026 The rispos authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// Parallel im2col + GEMM kernels against the serial reference loops, on the
// layer shapes of the default network with batch 32.

#include "rispos/geometry.hpp"
#include "rispos/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace rispos;
using namespace rispos::kernels;

namespace
{

struct ConvCase
{
    ConvGeometry g;
    std::vector<float> input, weight, bias, output, grad_out, grad_in, grad_w, grad_b;
    ConvWorkspace<float> ws;

    explicit ConvCase(const benchmark::State &state)
        : g(ConvGeometry::make(32, static_cast<int>(state.range(0)), static_cast<int>(state.range(1)),
                               static_cast<int>(state.range(1)), static_cast<int>(state.range(2)),
                               static_cast<int>(state.range(3)), static_cast<int>(state.range(4)),
                               static_cast<int>(state.range(3)) / 2))
    {
        Rng rng = make_rng(1);
        std::uniform_real_distribution<float> u(-1.0f, 1.0f);
        const auto fill = [&](std::vector<float> &v, std::size_t n) {
            v.resize(n);
            for (auto &x : v)
                x = u(rng);
        };
        fill(input, g.input_size());
        fill(weight, g.weight_size());
        fill(bias, static_cast<std::size_t>(g.out_channels));
        fill(grad_out, g.output_size());
        output.resize(g.output_size());
        grad_in.resize(g.input_size());
        grad_w.resize(g.weight_size());
        grad_b.resize(static_cast<std::size_t>(g.out_channels));
    }

    double flops() const
    {
        return 2.0 * static_cast<double>(g.output_size()) * g.in_channels * g.kernel * g.kernel;
    }
};

// in_channels, side, out_channels, kernel, stride
void conv_shapes(benchmark::internal::Benchmark *b)
{
    b->Args({2, 16, 16, 7, 2});
    b->Args({16, 4, 16, 3, 1});
    b->Args({16, 4, 32, 3, 2});
    b->Args({32, 2, 64, 3, 2});
    b->Unit(benchmark::kMicrosecond);
}

void BM_ConvForward(benchmark::State &state)
{
    ConvCase c(state);
    for (auto _ : state)
    {
        conv2d_forward(c.g, c.input.data(), c.weight.data(), c.bias.data(), c.output.data(), c.ws);
        benchmark::DoNotOptimize(c.output.data());
    }
    state.counters["GFLOP/s"] = benchmark::Counter(c.flops() * 1e-9, benchmark::Counter::kIsIterationInvariantRate);
}

void BM_ConvForwardReference(benchmark::State &state)
{
    ConvCase c(state);
    for (auto _ : state)
    {
        conv2d_forward_reference(c.g, c.input.data(), c.weight.data(), c.bias.data(), c.output.data());
        benchmark::DoNotOptimize(c.output.data());
    }
    state.counters["GFLOP/s"] = benchmark::Counter(c.flops() * 1e-9, benchmark::Counter::kIsIterationInvariantRate);
}

void BM_ConvBackward(benchmark::State &state)
{
    ConvCase c(state);
    conv2d_forward(c.g, c.input.data(), c.weight.data(), c.bias.data(), c.output.data(), c.ws);
    for (auto _ : state)
    {
        conv2d_backward(c.g, c.weight.data(), c.grad_out.data(), c.grad_in.data(), c.grad_w.data(), c.grad_b.data(),
                        c.ws);
        benchmark::DoNotOptimize(c.grad_in.data());
    }
    state.counters["GFLOP/s"] =
        benchmark::Counter(2.0 * c.flops() * 1e-9, benchmark::Counter::kIsIterationInvariantRate);
}

void BM_ConvBackwardReference(benchmark::State &state)
{
    ConvCase c(state);
    for (auto _ : state)
    {
        conv2d_backward_reference(c.g, c.input.data(), c.weight.data(), c.grad_out.data(), c.grad_in.data(),
                                  c.grad_w.data(), c.grad_b.data());
        benchmark::DoNotOptimize(c.grad_in.data());
    }
    state.counters["GFLOP/s"] =
        benchmark::Counter(2.0 * c.flops() * 1e-9, benchmark::Counter::kIsIterationInvariantRate);
}

void BM_MaxPool(benchmark::State &state)
{
    const auto g = PoolGeometry::make(32, 16, 8, 8, 3, 2, 1);
    std::vector<float> in(static_cast<std::size_t>(32) * 16 * 64, 0.5f), out(g.output_size());
    std::vector<int> arg(g.output_size());
    for (auto _ : state)
    {
        if (state.range(0))
            maxpool_forward(g, in.data(), out.data(), arg.data());
        else
            maxpool_forward_reference(g, in.data(), out.data(), arg.data());
        benchmark::DoNotOptimize(out.data());
    }
}

} // namespace

BENCHMARK(BM_ConvForward)->Apply(conv_shapes);
BENCHMARK(BM_ConvForwardReference)->Apply(conv_shapes);
BENCHMARK(BM_ConvBackward)->Apply(conv_shapes);
BENCHMARK(BM_ConvBackwardReference)->Apply(conv_shapes);
BENCHMARK(BM_MaxPool)->Arg(0)->Arg(1);

BENCHMARK_MAIN();
