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

#include "rispos/tensor.hpp"

#include <cmath>

namespace rispos
{

std::string shape_string(const Shape &shape)
{
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i)
    {
        if (i)
            s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

template <typename T>
bool Tensor<T>::all_finite() const
{
    for (T v : data_)
        if (!std::isfinite(v))
            return false;
    return true;
}

template class Tensor<float>;
template class Tensor<double>;

} // namespace rispos
