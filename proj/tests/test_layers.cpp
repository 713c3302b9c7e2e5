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

#include "catch_amalgamated.hpp"
#include "rispos/gradcheck.hpp"
#include "rispos/layers.hpp"

#include <cmath>

using namespace rispos;
using Catch::Matchers::WithinAbs;

namespace
{

Tensor<double> random_tensor(const Shape &s, Rng &rng, double mean = 0.0, double sd = 1.0)
{
    Tensor<double> t(s);
    std::normal_distribution<double> d(mean, sd);
    for (auto &v : t.vec())
        v = d(rng);
    return t;
}

} // namespace

TEST_CASE("Conv2d - identity and zero kernels")
{
    Conv2d<double> conv(1, 1, 1, 1, 0);
    conv.weight[0] = 1.0;
    Rng rng = make_rng(1);
    const auto x = random_tensor({2, 1, 3, 4}, rng);
    CHECK(conv.forward(x) == x);

    Conv2d<double> zero(3, 2, 3, 1, 1);
    zero.bias[0] = 1.5;
    zero.bias[1] = -0.5;
    const auto y = zero.forward(random_tensor({1, 3, 4, 4}, rng));
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 16; ++i)
            CHECK(y[static_cast<std::size_t>(c * 16 + i)] == (c == 0 ? 1.5 : -0.5));

    CHECK_THROWS_AS(zero.forward(random_tensor({1, 2, 4, 4}, rng)), ShapeError);
}

TEST_CASE("Conv2d - bias-free layers expose only the weight")
{
    Conv2d<float> with(2, 3, 3, 1, 1), without(2, 3, 3, 1, 1, false);
    std::vector<ParamRef<float>> a, b;
    with.params(a, "c");
    without.params(b, "c");
    CHECK(a.size() == 2);
    REQUIRE(b.size() == 1);
    CHECK(b[0].name == "c.weight");
}

TEST_CASE("Conv2d / FullyConnected - He-uniform init")
{
    Rng rng = make_rng(2);
    Conv2d<double> conv(32, 64, 3, 1, 1);
    conv.init(rng);
    const double fan_in = 32 * 9;
    const double bound = std::sqrt(6.0 / fan_in);
    double sum = 0.0, sq = 0.0;
    for (double w : conv.weight.vec())
    {
        REQUIRE(std::abs(w) <= bound);
        sum += w;
        sq += w * w;
    }
    const double n = static_cast<double>(conv.weight.size());
    CHECK_THAT(sum / n, WithinAbs(0.0, 0.005));
    CHECK_THAT(sq / n, WithinAbs(2.0 / fan_in, 0.05 * 2.0 / fan_in));
    for (double b : conv.bias.vec())
        CHECK(b == 0.0);

    Rng r1 = make_rng(9), r2 = make_rng(9);
    FullyConnected<float> f1(10, 3), f2(10, 3);
    f1.init(r1);
    f2.init(r2);
    CHECK(f1.weight == f2.weight);
}

TEST_CASE("BatchNorm2d - constant inputs")
{
    BatchNorm2d<double> bn(2);
    const Tensor<double> x({3, 2, 2, 2}, 4.0);
    const auto y0 = bn.forward(x, Mode::Train);
    for (double v : y0.vec())
        CHECK(v == 0.0);
    bn.beta.fill(7.0);
    const auto y7 = bn.forward(x, Mode::Train);
    for (double v : y7.vec())
        CHECK(v == 7.0);
}

TEST_CASE("BatchNorm2d - train statistics and running averages")
{
    Rng rng = make_rng(3);
    BatchNorm2d<double> bn(3);
    const auto x = random_tensor({4, 3, 5, 5}, rng, 2.0, 3.0);
    const auto y = bn.forward(x, Mode::Train);
    for (int c = 0; c < 3; ++c)
    {
        double s = 0.0, sq = 0.0, xs = 0.0, xsq = 0.0;
        const int n = 4 * 25;
        for (int b = 0; b < 4; ++b)
            for (int i = 0; i < 25; ++i)
            {
                const double v = y.at(b, c, i / 5, i % 5), u = x.at(b, c, i / 5, i % 5);
                s += v;
                sq += v * v;
                xs += u;
                xsq += u * u;
            }
        const double mean = s / n, var = sq / n - mean * mean;
        const double xm = xs / n, xv = xsq / n - xm * xm;
        CHECK(std::abs(mean) < 1e-6);
        CHECK_THAT(var, WithinAbs(xv / (xv + BatchNorm2d<double>::kEpsilon), 1e-4));
        // running stats after one step from (0, 1)
        CHECK_THAT(bn.running_mean[c], WithinAbs(0.1 * xm, 1e-12));
        CHECK_THAT(bn.running_var[c], WithinAbs(0.9 + 0.1 * xv * n / (n - 1), 1e-12));
    }
}

TEST_CASE("BatchNorm2d - eval mode uses running statistics")
{
    BatchNorm2d<double> bn(1);
    bn.running_mean[0] = 1.0;
    bn.running_var[0] = 4.0;
    bn.gamma[0] = 2.0;
    bn.beta[0] = 0.5;
    const Tensor<double> x({1, 1, 1, 2}, std::vector<double>{3.0, -1.0});
    const auto y = bn.forward(x, Mode::Eval);
    const double inv = 1.0 / std::sqrt(4.0 + 1e-5);
    CHECK_THAT(y[0], WithinAbs(2.0 * 2.0 * inv + 0.5, 1e-12));
    CHECK_THAT(y[1], WithinAbs(2.0 * -2.0 * inv + 0.5, 1e-12));
    CHECK(bn.running_mean[0] == 1.0);

    // a single value per channel is fine in eval mode, not in train mode
    const Tensor<double> one({1, 1, 1, 1}, 3.0);
    CHECK_NOTHROW(bn.forward(one, Mode::Eval));
    CHECK_THROWS(bn.forward(one, Mode::Train));
}

TEST_CASE("Relu - values, gradients, idempotence")
{
    Relu<double> relu;
    const Tensor<double> x({3}, std::vector<double>{-1, 0, 2});
    CHECK(relu.forward(x).vec() == std::vector<double>{0, 0, 2});

    const Tensor<double> pos({4}, std::vector<double>{0.1, 2, 3, 4});
    CHECK(relu.forward(pos) == pos);

    relu.forward(Tensor<double>({2}, std::vector<double>{-0.5, 0.5}));
    CHECK(relu.backward(Tensor<double>({2}, 1.0)).vec() == std::vector<double>{0, 1});

    Rng rng = make_rng(4);
    const auto r = random_tensor({50}, rng);
    Relu<double> a, b;
    const auto once = a.forward(r);
    CHECK(b.forward(once) == once);
}

TEST_CASE("MaxPool2d - values, routing, errors")
{
    MaxPool2d<double> pool(2, 2);
    const Tensor<double> x({1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4});
    const auto y = pool.forward(x);
    CHECK(y.shape() == Shape{1, 1, 1, 1});
    CHECK(y[0] == 4.0);
    CHECK(pool.backward(Tensor<double>({1, 1, 1, 1}, 5.0)).vec() == std::vector<double>{0, 0, 0, 5});

    const Tensor<double> c({1, 2, 4, 4}, 1.25);
    const auto pc = pool.forward(c);
    for (double v : pc.vec())
        CHECK(v == 1.25);
    // ties route to the first element
    CHECK(pool.backward(Tensor<double>({1, 2, 2, 2}, 1.0))[0] == 1.0);

    MaxPool2d<double> big(3, 1);
    CHECK_THROWS_AS(big.forward(Tensor<double>({1, 1, 2, 2})), ShapeError);
    CHECK(MaxPool2d<double>(3, 2, 1).output_shape({1, 16, 8, 8}) == Shape{1, 16, 4, 4});
}

TEST_CASE("GlobalAvgPool - values and scaling")
{
    GlobalAvgPool<double> gap;
    CHECK(gap.forward(Tensor<double>({1, 1, 3, 2}, 2.5))[0] == 2.5);
    CHECK(gap.forward(Tensor<double>({1, 1, 2, 2}, std::vector<double>{1, 3, 5, 7}))[0] == 4.0);

    Rng rng = make_rng(5);
    const auto x = random_tensor({2, 3, 4, 5}, rng);
    const auto y = gap.forward(x);
    REQUIRE(y.shape() == Shape{2, 3});
    auto scaled = x;
    for (auto &v : scaled.vec())
        v *= 3.0;
    const auto ys = gap.forward(scaled);
    for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 3; ++c)
        {
            double s = 0.0;
            for (int i = 0; i < 20; ++i)
                s += x.at(b, c, i / 5, i % 5);
            CHECK_THAT(y[static_cast<std::size_t>(b * 3 + c)], WithinAbs(s / 20.0, 1e-14));
            CHECK_THAT(ys[static_cast<std::size_t>(b * 3 + c)], WithinAbs(3.0 * s / 20.0, 1e-13));
        }
    const auto g = gap.backward(Tensor<double>({2, 3}, 20.0));
    for (double v : g.vec())
        CHECK(v == 1.0);
}

TEST_CASE("FullyConnected - identity, bias broadcast, oracle")
{
    FullyConnected<double> fc(3, 3);
    for (int i = 0; i < 3; ++i)
        fc.weight[static_cast<std::size_t>(i * 3 + i)] = 1.0;
    const Tensor<double> x({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
    CHECK(fc.forward(x) == x);

    fc.bias = Tensor<double>({3}, std::vector<double>{0.1, 0.2, 0.3});
    const auto yb = fc.forward(Tensor<double>({2, 3}));
    CHECK(yb.vec() == std::vector<double>{0.1, 0.2, 0.3, 0.1, 0.2, 0.3});

    Rng rng = make_rng(6);
    FullyConnected<double> r(7, 4);
    r.init(rng);
    r.bias = random_tensor({4}, rng);
    const auto in = random_tensor({5, 7}, rng);
    const auto out = r.forward(in);
    for (int b = 0; b < 5; ++b)
        for (int o = 0; o < 4; ++o)
        {
            double acc = r.bias[static_cast<std::size_t>(o)];
            for (int f = 0; f < 7; ++f)
                acc += in[static_cast<std::size_t>(b * 7 + f)] * r.weight[static_cast<std::size_t>(o * 7 + f)];
            CHECK_THAT(out[static_cast<std::size_t>(b * 4 + o)], WithinAbs(acc, 1e-13));
        }
    CHECK_THROWS_AS(r.forward(random_tensor({5, 6}, rng)), ShapeError);
}

TEST_CASE("mse_loss - values, gradient, oracle")
{
    const Tensor<double> p({1, 3}, std::vector<double>{1, 2, 2}), z({1, 3});
    auto r = mse_loss(p, z);
    CHECK(r.loss == 9.0);
    CHECK(r.grad.vec() == std::vector<double>{2, 4, 4});
    CHECK(mse_loss(p, p).loss == 0.0);

    Rng rng = make_rng(7);
    const auto a = random_tensor({6, 3}, rng), b = random_tensor({6, 3}, rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += (a[i] - b[i]) * (a[i] - b[i]);
    r = mse_loss(a, b);
    CHECK_THAT(r.loss, WithinAbs(acc / 6.0, 1e-14));
    CHECK(r.loss > 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK_THAT(r.grad[i], WithinAbs(2.0 * (a[i] - b[i]) / 6.0, 1e-15));

    CHECK_THROWS_AS(mse_loss(a, random_tensor({6, 2}, rng)), ShapeError);
}

TEST_CASE("Layers - forward passes are deterministic")
{
    Rng rng = make_rng(8);
    const auto x = random_tensor({4, 3, 6, 6}, rng).cast<float>();
    Conv2d<float> conv(3, 8, 3, 1, 1);
    conv.init(rng);
    BatchNorm2d<float> b1(8), b2(8);
    CHECK(b1.forward(conv.forward(x), Mode::Train) == b2.forward(conv.forward(x), Mode::Train));
}

TEST_CASE("finite_diff_check - flags a wrong analytic gradient")
{
    Tensor<double> x({4}, std::vector<double>{0.3, -1.2, 2.0, 0.7});
    std::vector<GradTarget> targets{{"x", &x, Tensor<double>({4}, std::vector<double>{0.6, -2.4, 4.0, 1.4})}};
    const Objective sq = [&](KinkHash *) {
        double s = 0.0;
        for (double v : x.vec())
            s += v * v;
        return s;
    };
    CHECK(finite_diff_check(sq, targets).max_rel_error < 1e-9);
    targets[0].analytic[2] = 4.1;
    const auto bad = finite_diff_check(sq, targets);
    CHECK(bad.max_rel_error > 1e-3);
    CHECK(bad.worst == "x[2]");
    CHECK(bad.checked == 4);
}

TEST_CASE("Gradient checks - every layer within tolerance over 20 seeds")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed)
        for (const auto &c : run_gradcheck_suite(seed))
        {
            INFO(c.name << " seed " << seed << " worst " << c.result.worst << " err " << c.result.max_rel_error);
            CHECK(c.passed());
            CHECK(c.result.checked >= std::min<std::size_t>(200, c.result.checked + c.result.skipped));
        }
}
