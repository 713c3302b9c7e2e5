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

#include "rispos/layers.hpp"

#include <cmath>

namespace rispos
{

namespace
{

template <typename T>
void fill_uniform(Tensor<T> &t, double bound, Rng &rng)
{
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto &v : t.vec())
        v = static_cast<T>(dist(rng));
}

// He-uniform bound: variance 2 / fan_in.
double he_bound(int fan_in) { return std::sqrt(6.0 / static_cast<double>(fan_in)); }

} // namespace

// ---------------------------------------------------------------- Conv2d

template <typename T>
Conv2d<T>::Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad, bool with_bias)
    : weight({out_channels, in_channels, kernel, kernel}), bias({out_channels}),
      grad_weight({out_channels, in_channels, kernel, kernel}), grad_bias({out_channels}), in_channels_(in_channels),
      out_channels_(out_channels), kernel_(kernel), stride_(stride), pad_(pad), has_bias_(with_bias)
{
    if (stride < 1 || pad < 0)
        throw ShapeError("conv2d: invalid stride/padding");
}

template <typename T>
void Conv2d<T>::init(Rng &rng)
{
    fill_uniform(weight, he_bound(in_channels_ * kernel_ * kernel_), rng);
    bias.fill(T(0));
}

template <typename T>
Shape Conv2d<T>::output_shape(const Shape &input) const
{
    if (input.size() != 4 || input[1] != in_channels_)
        throw ShapeError("conv2d: expected [B," + std::to_string(in_channels_) + ",H,W] input, got " +
                         shape_string(input));
    const auto g = kernels::ConvGeometry::make(input[0], input[1], input[2], input[3], out_channels_, kernel_, stride_,
                                               pad_);
    return {g.batch, g.out_channels, g.out_h, g.out_w};
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T> &input)
{
    output_shape(input.shape());
    geom_ = kernels::ConvGeometry::make(input.dim(0), input.dim(1), input.dim(2), input.dim(3), out_channels_,
                                        kernel_, stride_, pad_);
    Tensor<T> out({geom_.batch, geom_.out_channels, geom_.out_h, geom_.out_w});
    kernels::conv2d_forward(geom_, input.data(), weight.data(), has_bias_ ? bias.data() : nullptr, out.data(),
                            ws_);
    debug_check_finite(out, "conv2d");
    return out;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T> &grad_output)
{
    require_shape(grad_output, {geom_.batch, geom_.out_channels, geom_.out_h, geom_.out_w}, "conv2d backward");
    Tensor<T> grad_input({geom_.batch, geom_.in_channels, geom_.in_h, geom_.in_w});
    kernels::conv2d_backward(geom_, weight.data(), grad_output.data(), grad_input.data(), grad_weight.data(),
                             grad_bias.data(), ws_);
    return grad_input;
}

template <typename T>
void Conv2d<T>::params(std::vector<ParamRef<T>> &out, const std::string &prefix)
{
    out.push_back({prefix + ".weight", &weight, &grad_weight});
    if (has_bias_)
        out.push_back({prefix + ".bias", &bias, &grad_bias});
}

// ---------------------------------------------------------------- BatchNorm2d

template <typename T>
BatchNorm2d<T>::BatchNorm2d(int channels)
    : gamma({channels}, T(1)), beta({channels}, T(0)), grad_gamma({channels}), grad_beta({channels}),
      running_mean({channels}, T(0)), running_var({channels}, T(1)), channels_(channels)
{
}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T> &input, Mode mode)
{
    require_rank(input, 4, "batchnorm2d");
    if (input.dim(1) != channels_)
        throw ShapeError("batchnorm2d: expected " + std::to_string(channels_) + " channels, got " +
                         shape_string(input.shape()));
    const int B = input.dim(0), C = channels_;
    const std::size_t plane = static_cast<std::size_t>(input.dim(2)) * input.dim(3);
    const std::size_t n = static_cast<std::size_t>(B) * plane;
    if (mode == Mode::Train && n < 2)
        throw std::invalid_argument("batchnorm2d: train mode needs at least 2 values per channel");

    last_mode_ = mode;
    Tensor<T> out(input.shape());
    normalized_ = Tensor<T>(input.shape());
    inv_std_.assign(static_cast<std::size_t>(C), 0.0);

#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c)
    {
        double mean, var;
        if (mode == Mode::Train)
        {
            double sum = 0.0;
            for (int b = 0; b < B; ++b)
            {
                const T *x = input.data() + (static_cast<std::size_t>(b) * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i)
                    sum += x[i];
            }
            mean = sum / static_cast<double>(n);
            double sq = 0.0;
            for (int b = 0; b < B; ++b)
            {
                const T *x = input.data() + (static_cast<std::size_t>(b) * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i)
                {
                    const double d = x[i] - mean;
                    sq += d * d;
                }
            }
            var = sq / static_cast<double>(n);
            const double unbiased = sq / static_cast<double>(n - 1);
            running_mean[c] = static_cast<T>((1.0 - kMomentum) * running_mean[c] + kMomentum * mean);
            running_var[c] = static_cast<T>((1.0 - kMomentum) * running_var[c] + kMomentum * unbiased);
        }
        else
        {
            mean = running_mean[c];
            var = running_var[c];
        }
        const double inv = 1.0 / std::sqrt(var + kEpsilon);
        inv_std_[c] = inv;
        const double g = gamma[c], bt = beta[c];
        for (int b = 0; b < B; ++b)
        {
            const std::size_t off = (static_cast<std::size_t>(b) * C + c) * plane;
            for (std::size_t i = 0; i < plane; ++i)
            {
                const double xh = (input[off + i] - mean) * inv;
                normalized_[off + i] = static_cast<T>(xh);
                out[off + i] = static_cast<T>(g * xh + bt);
            }
        }
    }
    debug_check_finite(out, "batchnorm2d");
    return out;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::backward(const Tensor<T> &grad_output)
{
    require_shape(grad_output, normalized_.shape(), "batchnorm2d backward");
    const int B = grad_output.dim(0), C = channels_;
    const std::size_t plane = static_cast<std::size_t>(grad_output.dim(2)) * grad_output.dim(3);
    const double n = static_cast<double>(B) * static_cast<double>(plane);
    Tensor<T> grad_input(grad_output.shape());

#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c)
    {
        double sum_dy = 0.0, sum_dy_xh = 0.0;
        for (int b = 0; b < B; ++b)
        {
            const std::size_t off = (static_cast<std::size_t>(b) * C + c) * plane;
            for (std::size_t i = 0; i < plane; ++i)
            {
                sum_dy += grad_output[off + i];
                sum_dy_xh += static_cast<double>(grad_output[off + i]) * normalized_[off + i];
            }
        }
        grad_gamma[c] = static_cast<T>(sum_dy_xh);
        grad_beta[c] = static_cast<T>(sum_dy);

        const double scale = static_cast<double>(gamma[c]) * inv_std_[c];
        for (int b = 0; b < B; ++b)
        {
            const std::size_t off = (static_cast<std::size_t>(b) * C + c) * plane;
            for (std::size_t i = 0; i < plane; ++i)
            {
                if (last_mode_ == Mode::Train)
                    grad_input[off + i] = static_cast<T>(
                        scale / n * (n * grad_output[off + i] - sum_dy - normalized_[off + i] * sum_dy_xh));
                else
                    grad_input[off + i] = static_cast<T>(scale * grad_output[off + i]);
            }
        }
    }
    return grad_input;
}

template <typename T>
void BatchNorm2d<T>::params(std::vector<ParamRef<T>> &out, const std::string &prefix)
{
    out.push_back({prefix + ".gamma", &gamma, &grad_gamma});
    out.push_back({prefix + ".beta", &beta, &grad_beta});
    out.push_back({prefix + ".running_mean", &running_mean, nullptr});
    out.push_back({prefix + ".running_var", &running_var, nullptr});
}

// ---------------------------------------------------------------- Relu

template <typename T>
Tensor<T> Relu<T>::forward(const Tensor<T> &input)
{
    shape_ = input.shape();
    mask_.resize(input.size());
    Tensor<T> out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i)
    {
        mask_[i] = input[i] > T(0);
        out[i] = mask_[i] ? input[i] : T(0);
    }
    return out;
}

template <typename T>
Tensor<T> Relu<T>::backward(const Tensor<T> &grad_output) const
{
    require_shape(grad_output, shape_, "relu backward");
    Tensor<T> g(shape_);
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = mask_[i] ? grad_output[i] : T(0);
    return g;
}

template <typename T>
void Relu<T>::mix_kinks(KinkHash &h) const
{
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < mask_.size(); ++i)
    {
        word = (word << 1) | mask_[i];
        if (i % 64 == 63)
        {
            h.mix(word);
            word = 0;
        }
    }
    h.mix(word);
}

// ---------------------------------------------------------------- MaxPool2d

template <typename T>
Shape MaxPool2d<T>::output_shape(const Shape &input) const
{
    if (input.size() != 4)
        throw ShapeError("maxpool2d: expected rank-4 input, got " + shape_string(input));
    const auto g = kernels::PoolGeometry::make(input[0], input[1], input[2], input[3], window_, stride_, pad_);
    return {g.batch, g.channels, g.out_h, g.out_w};
}

template <typename T>
Tensor<T> MaxPool2d<T>::forward(const Tensor<T> &input)
{
    require_rank(input, 4, "maxpool2d");
    const auto g =
        kernels::PoolGeometry::make(input.dim(0), input.dim(1), input.dim(2), input.dim(3), window_, stride_, pad_);
    in_shape_ = input.shape();
    Tensor<T> out({g.batch, g.channels, g.out_h, g.out_w});
    argmax_.resize(out.size());
    kernels::maxpool_forward(g, input.data(), out.data(), argmax_.data());
    return out;
}

template <typename T>
Tensor<T> MaxPool2d<T>::backward(const Tensor<T> &grad_output) const
{
    if (grad_output.size() != argmax_.size())
        throw ShapeError("maxpool2d backward: gradient shape " + shape_string(grad_output.shape()) +
                         " does not match the last forward");
    Tensor<T> g(in_shape_);
    for (std::size_t i = 0; i < argmax_.size(); ++i)
        g[static_cast<std::size_t>(argmax_[i])] += grad_output[i];
    return g;
}

template <typename T>
void MaxPool2d<T>::mix_kinks(KinkHash &h) const
{
    for (int idx : argmax_)
        h.mix(static_cast<std::uint64_t>(idx));
}

// ---------------------------------------------------------------- GlobalAvgPool

template <typename T>
Tensor<T> GlobalAvgPool<T>::forward(const Tensor<T> &input)
{
    require_rank(input, 4, "global_avgpool");
    in_shape_ = input.shape();
    const int B = input.dim(0), C = input.dim(1);
    const std::size_t plane = static_cast<std::size_t>(input.dim(2)) * input.dim(3);
    Tensor<T> out({B, C});
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c)
        {
            const T *x = input.data() + (static_cast<std::size_t>(b) * C + c) * plane;
            double sum = 0.0;
            for (std::size_t i = 0; i < plane; ++i)
                sum += x[i];
            out[static_cast<std::size_t>(b) * C + c] = static_cast<T>(sum / static_cast<double>(plane));
        }
    return out;
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::backward(const Tensor<T> &grad_output) const
{
    require_shape(grad_output, {in_shape_[0], in_shape_[1]}, "global_avgpool backward");
    const std::size_t plane = static_cast<std::size_t>(in_shape_[2]) * in_shape_[3];
    const T inv = static_cast<T>(1.0 / static_cast<double>(plane));
    Tensor<T> g(in_shape_);
    for (std::size_t bc = 0; bc < grad_output.size(); ++bc)
    {
        const T v = grad_output[bc] * inv;
        T *dst = g.data() + bc * plane;
        for (std::size_t i = 0; i < plane; ++i)
            dst[i] = v;
    }
    return g;
}

// ---------------------------------------------------------------- FullyConnected

template <typename T>
FullyConnected<T>::FullyConnected(int in_features, int out_features)
    : weight({out_features, in_features}), bias({out_features}), grad_weight({out_features, in_features}),
      grad_bias({out_features}), in_(in_features), out_(out_features)
{
}

template <typename T>
void FullyConnected<T>::init(Rng &rng)
{
    fill_uniform(weight, he_bound(in_), rng);
    bias.fill(T(0));
}

template <typename T>
Tensor<T> FullyConnected<T>::forward(const Tensor<T> &input)
{
    require_rank(input, 2, "fully_connected");
    if (input.dim(1) != in_)
        throw ShapeError("fully_connected: expected " + std::to_string(in_) + " features, got " +
                         shape_string(input.shape()));
    input_ = input;
    const int B = input.dim(0);
    Tensor<T> out({B, out_});
    for (int b = 0; b < B; ++b)
        for (int o = 0; o < out_; ++o)
        {
            T acc = bias[o];
            for (int f = 0; f < in_; ++f)
                acc += input[static_cast<std::size_t>(b) * in_ + f] * weight[static_cast<std::size_t>(o) * in_ + f];
            out[static_cast<std::size_t>(b) * out_ + o] = acc;
        }
    return out;
}

template <typename T>
Tensor<T> FullyConnected<T>::backward(const Tensor<T> &grad_output)
{
    const int B = input_.dim(0);
    require_shape(grad_output, {B, out_}, "fully_connected backward");
    grad_weight.fill(T(0));
    grad_bias.fill(T(0));
    Tensor<T> grad_input({B, in_});
    for (int b = 0; b < B; ++b)
        for (int o = 0; o < out_; ++o)
        {
            const T go = grad_output[static_cast<std::size_t>(b) * out_ + o];
            grad_bias[o] += go;
            for (int f = 0; f < in_; ++f)
            {
                grad_weight[static_cast<std::size_t>(o) * in_ + f] += go * input_[static_cast<std::size_t>(b) * in_ + f];
                grad_input[static_cast<std::size_t>(b) * in_ + f] += go * weight[static_cast<std::size_t>(o) * in_ + f];
            }
        }
    return grad_input;
}

template <typename T>
void FullyConnected<T>::params(std::vector<ParamRef<T>> &out, const std::string &prefix)
{
    out.push_back({prefix + ".weight", &weight, &grad_weight});
    out.push_back({prefix + ".bias", &bias, &grad_bias});
}

// ---------------------------------------------------------------- loss

template <typename T>
LossResult<T> mse_loss(const Tensor<T> &pred, const Tensor<T> &target)
{
    require_rank(pred, 2, "mse_loss");
    require_shape(target, pred.shape(), "mse_loss target");
    const int B = pred.dim(0);
    LossResult<T> r;
    r.grad = Tensor<T>(pred.shape());
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
    {
        const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
        sum += d * d;
        r.grad[i] = static_cast<T>(2.0 * d / B);
    }
    r.loss = sum / B;
    return r;
}

template class Conv2d<float>;
template class Conv2d<double>;
template class BatchNorm2d<float>;
template class BatchNorm2d<double>;
template class Relu<float>;
template class Relu<double>;
template class MaxPool2d<float>;
template class MaxPool2d<double>;
template class GlobalAvgPool<float>;
template class GlobalAvgPool<double>;
template class FullyConnected<float>;
template class FullyConnected<double>;
template LossResult<float> mse_loss(const Tensor<float> &, const Tensor<float> &);
template LossResult<double> mse_loss(const Tensor<double> &, const Tensor<double> &);

} // namespace rispos
