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

#ifndef RISPOS_GRADCHECK_HPP
#define RISPOS_GRADCHECK_HPP

#include "rispos/layers.hpp"
#include "rispos/network.hpp"

#include <functional>
#include <string>
#include <vector>

namespace rispos
{

struct GradcheckOptions
{
    double epsilon = 1e-4;
    std::size_t coordinates = 200;
    std::uint64_t seed = 0;
};

struct GradcheckResult
{
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0; // stencil crossed a ReLU or pooling kink
    std::string worst;       // "<tensor>[<index>]"
    double worst_analytic = 0.0, worst_numeric = 0.0;
};

// A tensor under test together with its analytic gradient.
struct GradTarget
{
    std::string name;
    Tensor<double> *value = nullptr;
    Tensor<double> analytic;
};

// Scalar objective; when `kinks` is non-null it must fold in every branch
// decision made while evaluating.
using Objective = std::function<double(KinkHash *kinks)>;

// Central differences on a random subset of coordinates, relative error
// |a - n| / max(|a|, |n|, 1e-8). Coordinates whose stencil changes a branch
// decision are replaced by fresh draws.
GradcheckResult finite_diff_check(const Objective &objective, std::vector<GradTarget> &targets,
                                  const GradcheckOptions &opts = {});

// Checks a module with forward(x) -> y and backward(dy) -> dx against the
// objective sum(r * forward(x)) for a fixed random r. Learnable parameters
// come from `params` (buffers are ignored).
template <typename Forward, typename Backward, typename Kinks>
GradcheckResult check_module(Tensor<double> &input, const std::vector<ParamRef<double>> &params, Forward forward,
                             Backward backward, Kinks kinks, const GradcheckOptions &opts = {})
{
    const Tensor<double> out = forward(input);
    Tensor<double> weights(out.shape());
    Rng rng = make_rng(opts.seed, 7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto &w : weights.vec())
        w = u(rng);

    std::vector<GradTarget> targets;
    targets.push_back({"input", &input, backward(weights)});
    for (const auto &p : params)
        if (p.grad)
            targets.push_back({p.name, p.value, *p.grad});

    const Objective objective = [&](KinkHash *h) {
        const Tensor<double> y = forward(input);
        if (h)
            kinks(*h);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i)
            s += weights[i] * y[i];
        return s;
    };
    return finite_diff_check(objective, targets, opts);
}

struct GradcheckCase
{
    std::string name;
    GradcheckResult result;
    double tolerance = 0.0;
    bool passed() const { return result.max_rel_error < tolerance && result.checked > 0; }
};

// Every layer type, each block type, and the full 4-block RCNR at 64-bit precision.
std::vector<GradcheckCase> run_gradcheck_suite(std::uint64_t seed = 0);

} // namespace rispos

#endif
