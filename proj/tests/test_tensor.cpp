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
#include "rispos/tensor.hpp"

#include <cmath>
#include <limits>

using namespace rispos;

TEST_CASE("Tensor - construction and shape checks")
{
    Tensor<float> t({2, 3, 4, 5});
    CHECK(t.size() == 120);
    CHECK(t.rank() == 4);
    CHECK(t.dim(2) == 4);
    for (float v : t.vec())
        CHECK(v == 0.0f);

    CHECK_THROWS_AS(Tensor<float>({2, 0}), ShapeError);
    CHECK_THROWS_AS(Tensor<float>({2, 2}, std::vector<float>(3)), ShapeError);
    CHECK_THROWS_AS(t.reshaped({7, 7}), ShapeError);
    CHECK(shape_string({2, 3}) == "[2,3]");
}

TEST_CASE("Tensor - row-major 4-d indexing")
{
    Tensor<double> t({2, 3, 4, 5});
    for (std::size_t i = 0; i < t.size(); ++i)
        t[i] = static_cast<double>(i);
    for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 3; ++c)
            for (int h = 0; h < 4; ++h)
                for (int w = 0; w < 5; ++w)
                    REQUIRE(t.at(b, c, h, w) == ((b * 3 + c) * 4 + h) * 5 + w);
}

TEST_CASE("Tensor - reshape, cast, equality, finiteness")
{
    Tensor<double> t({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6.5});
    const auto r = t.reshaped({3, 2});
    CHECK(r.shape() == Shape{3, 2});
    CHECK(r.vec() == t.vec());

    const auto f = t.cast<float>();
    CHECK(f[5] == 6.5f);
    CHECK(f.cast<double>() == t);

    CHECK(t.all_finite());
    t[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(t.all_finite());
    t[1] = std::numeric_limits<double>::infinity();
    CHECK_FALSE(t.all_finite());
}

TEST_CASE("require_shape / require_rank")
{
    Tensor<float> t({2, 3});
    CHECK_NOTHROW(require_shape(t, {2, 3}, "x"));
    CHECK_THROWS_AS(require_shape(t, {3, 2}, "x"), ShapeError);
    CHECK_THROWS_AS(require_rank(t, 4, "x"), ShapeError);
}
