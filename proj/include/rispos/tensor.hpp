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

#ifndef RISPOS_TENSOR_HPP
#define RISPOS_TENSOR_HPP

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rispos
{

class ShapeError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

using Shape = std::vector<int>;

std::string shape_string(const Shape &shape);

// Dense row-major n-d array. T is float for training and double for gradient checks.
template <typename T>
class Tensor
{
public:
    using value_type = T;

    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T(0)) : shape_(std::move(shape))
    {
        for (int d : shape_)
            if (d < 1)
                throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape_));
        data_.assign(count(shape_), fill);
    }

    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data))
    {
        if (data_.size() != count(shape_))
            throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                             shape_string(shape_));
    }

    static std::size_t count(const Shape &shape)
    {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                               [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
    }

    const Shape &shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T *data() { return data_.data(); }
    const T *data() const { return data_.data(); }
    std::span<T> span() { return data_; }
    std::span<const T> span() const { return data_; }
    std::vector<T> &vec() { return data_; }
    const std::vector<T> &vec() const { return data_; }

    T &operator[](std::size_t i) { return data_[i]; }
    const T &operator[](std::size_t i) const { return data_[i]; }

    T &at(int b, int c, int h, int w)
    {
        return data_[((static_cast<std::size_t>(b) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }
    const T &at(int b, int c, int h, int w) const
    {
        return data_[((static_cast<std::size_t>(b) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }
    T &at(int r, int c) { return data_[static_cast<std::size_t>(r) * shape_[1] + c]; }
    const T &at(int r, int c) const { return data_[static_cast<std::size_t>(r) * shape_[1] + c]; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    Tensor reshaped(Shape shape) const
    {
        if (count(shape) != data_.size())
            throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
        return Tensor(std::move(shape), data_);
    }

    template <typename U>
    Tensor<U> cast() const
    {
        std::vector<U> out(data_.begin(), data_.end());
        return Tensor<U>(shape_, std::move(out));
    }

    bool all_finite() const;

    friend bool operator==(const Tensor &, const Tensor &) = default;

private:
    Shape shape_;
    std::vector<T> data_;
};

template <typename T>
void require_shape(const Tensor<T> &t, const Shape &expected, const char *what)
{
    if (t.shape() != expected)
        throw ShapeError(std::string(what) + ": expected shape " + shape_string(expected) + ", got " +
                         shape_string(t.shape()));
}

template <typename T>
void require_rank(const Tensor<T> &t, int rank, const char *what)
{
    if (t.rank() != rank)
        throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(t.shape()));
}

// Checks every value for NaN/Inf when RISPOS_CHECK_FINITE is defined (debug builds).
template <typename T>
void debug_check_finite([[maybe_unused]] const Tensor<T> &t, [[maybe_unused]] const char *what)
{
#ifdef RISPOS_CHECK_FINITE
    if (!t.all_finite())
        throw std::runtime_error(std::string(what) + ": non-finite value");
#endif
}

extern template class Tensor<float>;
extern template class Tensor<double>;

} // namespace rispos

#endif
