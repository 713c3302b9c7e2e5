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

#include "rispos/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace rispos
{

GradcheckResult finite_diff_check(const Objective &objective, std::vector<GradTarget> &targets,
                                  const GradcheckOptions &opts)
{
    GradcheckResult res;
    std::size_t total = 0;
    for (const auto &t : targets)
    {
        if (t.value == nullptr || t.value->shape() != t.analytic.shape())
            throw ShapeError("gradcheck: analytic gradient shape differs for " + t.name);
        total += t.value->size();
    }
    if (total == 0)
        return res;

    KinkHash base;
    objective(&base);

    Rng rng = make_rng(opts.seed, 11);
    const std::size_t wanted = std::min(opts.coordinates, total);
    std::set<std::pair<std::size_t, std::size_t>> used;

    // A few coordinates from every tensor first, then uniform over all of them.
    auto draw = [&](std::size_t attempt) -> std::pair<std::size_t, std::size_t> {
        if (attempt < 4 * targets.size())
        {
            const std::size_t t = attempt % targets.size();
            return {t, std::uniform_int_distribution<std::size_t>(0, targets[t].value->size() - 1)(rng)};
        }
        std::size_t flat = std::uniform_int_distribution<std::size_t>(0, total - 1)(rng);
        std::size_t t = 0;
        while (flat >= targets[t].value->size())
            flat -= targets[t++].value->size();
        return {t, flat};
    };

    const std::size_t max_attempts = 50 * wanted + 100;
    for (std::size_t attempt = 0; attempt < max_attempts && res.checked < wanted && used.size() < total; ++attempt)
    {
        const auto key = draw(attempt);
        if (!used.insert(key).second)
            continue;
        auto &t = targets[key.first];
        double &x = (*t.value)[key.second];
        const double orig = x;

        KinkHash hp, hm;
        x = orig + opts.epsilon;
        const double fp = objective(&hp);
        x = orig - opts.epsilon;
        const double fm = objective(&hm);
        x = orig;
        if (hp.value != base.value || hm.value != base.value)
        {
            ++res.skipped;
            continue;
        }

        const double numeric = (fp - fm) / (2.0 * opts.epsilon);
        const double analytic = t.analytic[key.second];
        const double rel =
            std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        ++res.checked;
        if (res.worst.empty() || rel > res.max_rel_error)
        {
            res.max_rel_error = rel;
            res.worst = t.name + "[" + std::to_string(key.second) + "]";
            res.worst_analytic = analytic;
            res.worst_numeric = numeric;
        }
    }
    return res;
}

namespace
{

Tensor<double> random_tensor(const Shape &shape, Rng &rng, double scale = 1.0)
{
    Tensor<double> t(shape);
    std::normal_distribution<double> n(0.0, scale);
    for (auto &v : t.vec())
        v = n(rng);
    return t;
}

void randomize(Tensor<double> &t, Rng &rng, double mean, double scale)
{
    std::normal_distribution<double> n(mean, scale);
    for (auto &v : t.vec())
        v = n(rng);
}

void no_kinks(KinkHash &) {}

constexpr double kLayerTol = 1e-5;
constexpr double kNetworkTol = 1e-4;

} // namespace

std::vector<GradcheckCase> run_gradcheck_suite(std::uint64_t seed)
{
    std::vector<GradcheckCase> cases;
    Rng rng = make_rng(seed, 100);
    GradcheckOptions opts;
    opts.seed = seed;

    auto add = [&](std::string name, GradcheckResult r, double tol) { cases.push_back({std::move(name), r, tol}); };
    std::vector<ParamRef<double>> ps;

    {
        FullyConnected<double> fc(24, 3);
        fc.init(rng);
        randomize(fc.bias, rng, 0.0, 0.1);
        auto x = random_tensor({4, 24}, rng);
        ps.clear();
        fc.params(ps, "fc");
        add("fully_connected",
            check_module(x, ps, [&](const Tensor<double> &v) { return fc.forward(v); },
                         [&](const Tensor<double> &g) { return fc.backward(g); }, no_kinks, opts),
            kLayerTol);
    }

    struct ConvCase
    {
        const char *name;
        int cin, cout, k, s, p, h, w;
    };
    for (const ConvCase c : {ConvCase{"conv2d 3x3", 3, 4, 3, 1, 1, 7, 6}, ConvCase{"conv2d 7x7/2", 2, 4, 7, 2, 3, 9, 8},
                             ConvCase{"conv2d 1x1/2", 4, 5, 1, 2, 0, 5, 6}, ConvCase{"conv2d 3x3/2", 3, 2, 3, 2, 1, 2, 2}})
    {
        Conv2d<double> conv(c.cin, c.cout, c.k, c.s, c.p);
        conv.init(rng);
        randomize(conv.bias, rng, 0.0, 0.1);
        auto x = random_tensor({2, c.cin, c.h, c.w}, rng);
        ps.clear();
        conv.params(ps, "conv");
        add(c.name,
            check_module(x, ps, [&](const Tensor<double> &v) { return conv.forward(v); },
                         [&](const Tensor<double> &g) { return conv.backward(g); }, no_kinks, opts),
            kLayerTol);
    }

    for (const Mode mode : {Mode::Train, Mode::Eval})
    {
        BatchNorm2d<double> bn(3);
        randomize(bn.gamma, rng, 1.0, 0.3);
        randomize(bn.beta, rng, 0.0, 0.3);
        randomize(bn.running_mean, rng, 0.0, 0.5);
        for (auto &v : bn.running_var.vec())
            v = 0.5 + std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        auto x = random_tensor({3, 3, 4, 5}, rng, 2.0);
        ps.clear();
        bn.params(ps, "bn");
        add(mode == Mode::Train ? "batchnorm2d train" : "batchnorm2d eval",
            check_module(x, ps, [&](const Tensor<double> &v) { return bn.forward(v, mode); },
                         [&](const Tensor<double> &g) { return bn.backward(g); }, no_kinks, opts),
            kLayerTol);
    }

    {
        Relu<double> relu;
        auto x = random_tensor({2, 3, 6, 6}, rng);
        add("relu",
            check_module(x, {}, [&](const Tensor<double> &v) { return relu.forward(v); },
                         [&](const Tensor<double> &g) { return relu.backward(g); },
                         [&](KinkHash &h) { relu.mix_kinks(h); }, opts),
            kLayerTol);
    }

    for (const auto &[name, window, stride, pad] :
         {std::tuple{"maxpool2d 3x3/2", 3, 2, 1}, std::tuple{"maxpool2d 2x2", 2, 2, 0}})
    {
        MaxPool2d<double> pool(window, stride, pad);
        auto x = random_tensor({2, 3, 8, 7}, rng);
        add(name,
            check_module(x, {}, [&](const Tensor<double> &v) { return pool.forward(v); },
                         [&](const Tensor<double> &g) { return pool.backward(g); },
                         [&](KinkHash &h) { pool.mix_kinks(h); }, opts),
            kLayerTol);
    }

    {
        GlobalAvgPool<double> gap;
        auto x = random_tensor({3, 4, 3, 5}, rng);
        add("global_avgpool",
            check_module(x, {}, [&](const Tensor<double> &v) { return gap.forward(v); },
                         [&](const Tensor<double> &g) { return gap.backward(g); }, no_kinks, opts),
            kLayerTol);
    }

    {
        auto pred = random_tensor({5, 3}, rng);
        const auto target = random_tensor({5, 3}, rng);
        std::vector<GradTarget> targets{{"pred", &pred, mse_loss(pred, target).grad}};
        add("mse_loss", finite_diff_check([&](KinkHash *) { return mse_loss(pred, target).loss; }, targets, opts),
            kLayerTol);
    }

    {
        RegressionBlock<double> head(8);
        head.fc.init(rng);
        auto x = random_tensor({3, 8, 2, 3}, rng);
        ps.clear();
        head.params(ps, "head");
        add("regression_block",
            check_module(x, ps, [&](const Tensor<double> &v) { return head.forward(v); },
                         [&](const Tensor<double> &g) { return head.backward(g); }, no_kinks, opts),
            kLayerTol);
    }

    {
        NcBlock<double> block(2, 4);
        block.conv.init(rng);
        auto x = random_tensor({2, 2, 12, 12}, rng);
        ps.clear();
        block.params(ps, "nc");
        add("nc_block",
            check_module(x, ps, [&](const Tensor<double> &v) { return block.forward(v, Mode::Train); },
                         [&](const Tensor<double> &g) { return block.backward(g); },
                         [&](KinkHash &h) { block.mix_kinks(h); }, opts),
            kNetworkTol);
    }

    for (const auto &[name, cin, cout, stride] :
         {std::tuple{"rc_block identity", 4, 4, 1}, std::tuple{"rc_block 1x1/2 shortcut", 4, 6, 2}})
    {
        RcBlock<double> block(cin, cout, stride);
        block.conv1.init(rng);
        block.conv2.init(rng);
        if (block.shortcut)
            block.shortcut->init(rng);
        auto x = random_tensor({2, cin, 6, 6}, rng);
        ps.clear();
        block.params(ps, "rc");
        add(name,
            check_module(x, ps, [&](const Tensor<double> &v) { return block.forward(v, Mode::Train); },
                         [&](const Tensor<double> &g) { return block.backward(g); },
                         [&](KinkHash &h) { block.mix_kinks(h); }, opts),
            kNetworkTol);
    }

    {
        PlainBlock<double> block(4, 5, true);
        block.conv.init(rng);
        auto x = random_tensor({2, 4, 6, 6}, rng);
        ps.clear();
        block.params(ps, "plain");
        add("plain_block",
            check_module(x, ps, [&](const Tensor<double> &v) { return block.forward(v, Mode::Train); },
                         [&](const Tensor<double> &g) { return block.backward(g); },
                         [&](KinkHash &h) { block.mix_kinks(h); }, opts),
            kNetworkTol);
    }

    {
        Model<double> model(NetworkSpec{}, seed);
        auto x = random_tensor({8, 2, model.spec().input_rows, model.spec().input_cols}, rng);
        add("rcnr 4 blocks",
            check_module(x, model.params(), [&](const Tensor<double> &v) { return model.forward(v); },
                         [&](const Tensor<double> &g) { return model.backward(g); },
                         [&](KinkHash &h) { h.mix(model.kinks().value); }, opts),
            kNetworkTol);
    }
    return cases;
}

} // namespace rispos
