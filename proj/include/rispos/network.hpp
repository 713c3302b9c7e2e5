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

#ifndef RISPOS_NETWORK_HPP
#define RISPOS_NETWORK_HPP

#include "rispos/dataset.hpp"
#include "rispos/layers.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rispos
{

enum class Variant
{
    Rcnr, // residual blocks
    Cnn   // plain conv blocks, no skips
};

Variant parse_variant(const std::string &s);
std::string variant_name(Variant v);

struct NetworkSpec
{
    Variant variant = Variant::Rcnr;
    int block_count = 4;
    int base_channels = 16;
    std::vector<int> multipliers{1, 2, 4, 8};
    int input_rows = 16; // M_x
    int input_cols = 16; // M_z
    static constexpr int kOutputDim = 3;

    void validate() const;
    int block_channels(int block) const { return base_channels * multipliers.at(static_cast<std::size_t>(block)); }
};

// conv 7x7/2 -> BN -> ReLU -> maxpool 3x3/2 (pad 1)
template <typename T>
struct NcBlock
{
    Conv2d<T> conv;
    BatchNorm2d<T> bn;
    Relu<T> relu;
    MaxPool2d<T> pool{3, 2, 1};

    NcBlock() = default;
    NcBlock(int in_channels, int out_channels);
    Tensor<T> forward(const Tensor<T> &x, Mode mode);
    Tensor<T> backward(const Tensor<T> &g);
    void params(std::vector<ParamRef<T>> &out, const std::string &prefix);
    void mix_kinks(KinkHash &h) const;
};

// ReLU(BN(conv3x3(ReLU(BN(conv3x3/s(x))))) + shortcut(x)); the shortcut is a
// 1x1/s conv when the shape changes and the identity otherwise.
template <typename T>
struct RcBlock
{
    Conv2d<T> conv1, conv2;
    BatchNorm2d<T> bn1, bn2;
    Relu<T> relu1, relu_out;
    std::optional<Conv2d<T>> shortcut;

    RcBlock() = default;
    RcBlock(int in_channels, int out_channels, int stride);
    Tensor<T> forward(const Tensor<T> &x, Mode mode);
    Tensor<T> backward(const Tensor<T> &g);
    void params(std::vector<ParamRef<T>> &out, const std::string &prefix);
    void mix_kinks(KinkHash &h) const;
};

// conv3x3 -> BN -> ReLU [-> maxpool 2x2]
template <typename T>
struct PlainBlock
{
    Conv2d<T> conv;
    BatchNorm2d<T> bn;
    Relu<T> relu;
    std::optional<MaxPool2d<T>> pool;

    PlainBlock() = default;
    PlainBlock(int in_channels, int out_channels, bool with_pool);
    Tensor<T> forward(const Tensor<T> &x, Mode mode);
    Tensor<T> backward(const Tensor<T> &g);
    void params(std::vector<ParamRef<T>> &out, const std::string &prefix);
    void mix_kinks(KinkHash &h) const;
};

// global average pool -> fully connected (C -> 3)
template <typename T>
struct RegressionBlock
{
    GlobalAvgPool<T> pool;
    FullyConnected<T> fc;

    RegressionBlock() = default;
    explicit RegressionBlock(int in_channels) : fc(in_channels, NetworkSpec::kOutputDim) {}
    Tensor<T> forward(const Tensor<T> &x);
    Tensor<T> backward(const Tensor<T> &g);
    void params(std::vector<ParamRef<T>> &out, const std::string &prefix);
};

template <typename T>
class Model
{
public:
    Model(const NetworkSpec &spec, std::uint64_t seed);

    // input [B, 2, M_x, M_z] -> [B, 3] normalized positions
    Tensor<T> forward(const Tensor<T> &input);
    // Returns the gradient with respect to the input; parameter gradients are overwritten.
    Tensor<T> backward(const Tensor<T> &grad_output);

    void set_mode(Mode m) { mode_ = m; }
    Mode mode() const { return mode_; }

    const NetworkSpec &spec() const { return spec_; }

    // Learnable tensors and persistent buffers in declaration order.
    std::vector<ParamRef<T>> params();
    std::size_t parameter_count();
    int skip_connection_count() const;
    KinkHash kinks() const;

    // Copies every parameter and buffer from a model with the same spec.
    template <typename U>
    void copy_state_from(Model<U> &other);

    NcBlock<T> stem;
    std::vector<RcBlock<T>> residual_blocks;
    std::vector<PlainBlock<T>> plain_blocks;
    RegressionBlock<T> head;

private:
    NetworkSpec spec_;
    Mode mode_ = Mode::Train;
};

template <typename T>
template <typename U>
void Model<T>::copy_state_from(Model<U> &other)
{
    auto dst = params();
    auto src = other.params();
    if (dst.size() != src.size())
        throw ShapeError("copy_state_from: parameter lists differ");
    for (std::size_t i = 0; i < dst.size(); ++i)
    {
        if (dst[i].value->shape() != src[i].value->shape())
            throw ShapeError("copy_state_from: shape mismatch at " + dst[i].name);
        for (std::size_t k = 0; k < dst[i].value->size(); ++k)
            (*dst[i].value)[k] = static_cast<T>((*src[i].value)[k]);
    }
}

// Eval-mode forward pass, de-normalized to meters. Output [B, 3].
template <typename T>
Tensor<double> predict(Model<T> &model, const Tensor<T> &inputs, const LabelMap &labels);

// ---- checkpoint: text header + little-endian float32 payload ----

inline constexpr const char *kCheckpointFormatVersion = "1";

class CheckpointError : public std::runtime_error
{
public:
    enum class Kind
    {
        Missing,
        MalformedHeader,
        VersionMismatch,
        ShapeMismatch,
        PayloadSizeMismatch
    };
    CheckpointError(Kind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

void save_checkpoint(Model<float> &model, const std::filesystem::path &path);
Model<float> load_checkpoint(const std::filesystem::path &path);

extern template class Model<float>;
extern template class Model<double>;

} // namespace rispos

#endif
