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

#ifndef RISPOS_LAYERS_HPP
#define RISPOS_LAYERS_HPP

#include "rispos/geometry.hpp"
#include "rispos/kernels.hpp"
#include "rispos/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rispos
{

// A learnable tensor and its gradient, or (grad == nullptr) a persistent buffer.
template <typename T>
struct ParamRef
{
    std::string name;
    Tensor<T> *value = nullptr;
    Tensor<T> *grad = nullptr;
};

enum class Mode
{
    Train,
    Eval
};

// Folds forward-pass branch decisions (ReLU masks, pooling argmax) into a
// running hash. Finite-difference checks use it to detect kink crossings.
struct KinkHash
{
    std::uint64_t value = 1469598103934665603ull;
    void mix(std::uint64_t v)
    {
        value ^= v;
        value *= 1099511628211ull;
    }
};

template <typename T>
class Conv2d
{
public:
    Conv2d() = default;
    // Without a bias the layer is a pure cross-correlation; used in front of batch
    // normalization, which would cancel a bias anyway.
    Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad, bool with_bias = true);

    // Uniform(-sqrt(6 / fan_in), sqrt(6 / fan_in)) weights, zero bias.
    void init(Rng &rng);

    Tensor<T> forward(const Tensor<T> &input);
    Tensor<T> backward(const Tensor<T> &grad_output);

    void params(std::vector<ParamRef<T>> &out, const std::string &prefix);
    Shape output_shape(const Shape &input) const;

    int in_channels() const { return in_channels_; }
    int out_channels() const { return out_channels_; }
    int kernel() const { return kernel_; }
    int stride() const { return stride_; }
    int pad() const { return pad_; }
    bool has_bias() const { return has_bias_; }

    Tensor<T> weight, bias;
    Tensor<T> grad_weight, grad_bias;

private:
    int in_channels_ = 0, out_channels_ = 0, kernel_ = 1, stride_ = 1, pad_ = 0;
    bool has_bias_ = true;
    kernels::ConvGeometry geom_;
    kernels::ConvWorkspace<T> ws_;
};

template <typename T>
class BatchNorm2d
{
public:
    static constexpr double kEpsilon = 1e-5;
    static constexpr double kMomentum = 0.1;

    BatchNorm2d() = default;
    explicit BatchNorm2d(int channels);

    Tensor<T> forward(const Tensor<T> &input, Mode mode);
    Tensor<T> backward(const Tensor<T> &grad_output);

    void params(std::vector<ParamRef<T>> &out, const std::string &prefix);

    Tensor<T> gamma, beta;
    Tensor<T> grad_gamma, grad_beta;
    Tensor<T> running_mean, running_var;

private:
    int channels_ = 0;
    Mode last_mode_ = Mode::Train;
    Tensor<T> normalized_;        // x_hat from the last forward
    std::vector<double> inv_std_; // per channel
};

template <typename T>
class Relu
{
public:
    Tensor<T> forward(const Tensor<T> &input);
    Tensor<T> backward(const Tensor<T> &grad_output) const;
    void mix_kinks(KinkHash &h) const;

private:
    std::vector<std::uint8_t> mask_;
    Shape shape_;
};

template <typename T>
class MaxPool2d
{
public:
    MaxPool2d() = default;
    MaxPool2d(int window, int stride, int pad = 0) : window_(window), stride_(stride), pad_(pad) {}

    Tensor<T> forward(const Tensor<T> &input);
    Tensor<T> backward(const Tensor<T> &grad_output) const;
    Shape output_shape(const Shape &input) const;
    void mix_kinks(KinkHash &h) const;

private:
    int window_ = 2, stride_ = 2, pad_ = 0;
    Shape in_shape_;
    std::vector<int> argmax_;
};

template <typename T>
class GlobalAvgPool
{
public:
    Tensor<T> forward(const Tensor<T> &input);
    Tensor<T> backward(const Tensor<T> &grad_output) const;

private:
    Shape in_shape_;
};

template <typename T>
class FullyConnected
{
public:
    FullyConnected() = default;
    FullyConnected(int in_features, int out_features);

    void init(Rng &rng);

    Tensor<T> forward(const Tensor<T> &input);
    Tensor<T> backward(const Tensor<T> &grad_output);
    void params(std::vector<ParamRef<T>> &out, const std::string &prefix);

    int in_features() const { return in_; }
    int out_features() const { return out_; }

    Tensor<T> weight, bias; // [O, F], [O]
    Tensor<T> grad_weight, grad_bias;

private:
    int in_ = 0, out_ = 0;
    Tensor<T> input_;
};

template <typename T>
struct LossResult
{
    double loss = 0.0;
    Tensor<T> grad;
};

// (1/B) sum_b ||pred_b - target_b||^2 and its gradient 2 (pred - target) / B.
template <typename T>
LossResult<T> mse_loss(const Tensor<T> &pred, const Tensor<T> &target);

extern template class Conv2d<float>;
extern template class Conv2d<double>;
extern template class BatchNorm2d<float>;
extern template class BatchNorm2d<double>;
extern template class Relu<float>;
extern template class Relu<double>;
extern template class MaxPool2d<float>;
extern template class MaxPool2d<double>;
extern template class GlobalAvgPool<float>;
extern template class GlobalAvgPool<double>;
extern template class FullyConnected<float>;
extern template class FullyConnected<double>;

} // namespace rispos

#endif
