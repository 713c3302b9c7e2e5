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

#include "rispos/network.hpp"
#include "rispos/keyvalue.hpp"

#include <algorithm>
#include <bit>
#include <fstream>

namespace rispos
{

Variant parse_variant(const std::string &s)
{
    if (s == "rcnr" || s == "RCNR")
        return Variant::Rcnr;
    if (s == "cnn" || s == "CNN")
        return Variant::Cnn;
    throw ConfigError("network variant must be 'rcnr' or 'cnn', got '" + s + "'");
}

std::string variant_name(Variant v) { return v == Variant::Rcnr ? "rcnr" : "cnn"; }

void NetworkSpec::validate() const
{
    if (block_count < 1)
        throw ConfigError("network needs at least one block");
    if (base_channels < 1)
        throw ConfigError("base_channels must be >= 1");
    if (static_cast<int>(multipliers.size()) < block_count)
        throw ConfigError("need one channel multiplier per block (" + std::to_string(block_count) + ")");
    for (int m : multipliers)
        if (m < 1)
            throw ConfigError("channel multipliers must be >= 1");
    if (input_rows < 1 || input_cols < 1)
        throw ConfigError("input dimensions must be >= 1");
}

// ---------------------------------------------------------------- blocks

template <typename T>
NcBlock<T>::NcBlock(int in_channels, int out_channels) : conv(in_channels, out_channels, 7, 2, 3, false), bn(out_channels)
{
}

template <typename T>
Tensor<T> NcBlock<T>::forward(const Tensor<T> &x, Mode mode)
{
    return pool.forward(relu.forward(bn.forward(conv.forward(x), mode)));
}

template <typename T>
Tensor<T> NcBlock<T>::backward(const Tensor<T> &g)
{
    return conv.backward(bn.backward(relu.backward(pool.backward(g))));
}

template <typename T>
void NcBlock<T>::params(std::vector<ParamRef<T>> &out, const std::string &prefix)
{
    conv.params(out, prefix + ".conv");
    bn.params(out, prefix + ".bn");
}

template <typename T>
void NcBlock<T>::mix_kinks(KinkHash &h) const
{
    relu.mix_kinks(h);
    pool.mix_kinks(h);
}

template <typename T>
RcBlock<T>::RcBlock(int in_channels, int out_channels, int stride)
    : conv1(in_channels, out_channels, 3, stride, 1, false), conv2(out_channels, out_channels, 3, 1, 1, false), bn1(out_channels),
      bn2(out_channels)
{
    if (stride != 1 || in_channels != out_channels)
        shortcut.emplace(in_channels, out_channels, 1, stride, 0);
}

template <typename T>
Tensor<T> RcBlock<T>::forward(const Tensor<T> &x, Mode mode)
{
    Tensor<T> main = bn2.forward(conv2.forward(relu1.forward(bn1.forward(conv1.forward(x), mode))), mode);
    const Tensor<T> skip = shortcut ? shortcut->forward(x) : x;
    if (main.shape() != skip.shape())
        throw ShapeError("rc_block: residual " + shape_string(main.shape()) + " and shortcut " +
                         shape_string(skip.shape()) + " differ");
    for (std::size_t i = 0; i < main.size(); ++i)
        main[i] += skip[i];
    return relu_out.forward(main);
}

template <typename T>
Tensor<T> RcBlock<T>::backward(const Tensor<T> &g)
{
    const Tensor<T> g_sum = relu_out.backward(g);
    Tensor<T> g_main = conv1.backward(bn1.backward(relu1.backward(conv2.backward(bn2.backward(g_sum)))));
    const Tensor<T> g_skip = shortcut ? shortcut->backward(g_sum) : g_sum;
    for (std::size_t i = 0; i < g_main.size(); ++i)
        g_main[i] += g_skip[i];
    return g_main;
}

template <typename T>
void RcBlock<T>::params(std::vector<ParamRef<T>> &out, const std::string &prefix)
{
    conv1.params(out, prefix + ".conv1");
    bn1.params(out, prefix + ".bn1");
    conv2.params(out, prefix + ".conv2");
    bn2.params(out, prefix + ".bn2");
    if (shortcut)
        shortcut->params(out, prefix + ".shortcut");
}

template <typename T>
void RcBlock<T>::mix_kinks(KinkHash &h) const
{
    relu1.mix_kinks(h);
    relu_out.mix_kinks(h);
}

template <typename T>
PlainBlock<T>::PlainBlock(int in_channels, int out_channels, bool with_pool)
    : conv(in_channels, out_channels, 3, 1, 1, false), bn(out_channels)
{
    if (with_pool)
        pool.emplace(2, 2, 0);
}

template <typename T>
Tensor<T> PlainBlock<T>::forward(const Tensor<T> &x, Mode mode)
{
    Tensor<T> y = relu.forward(bn.forward(conv.forward(x), mode));
    return pool ? pool->forward(y) : y;
}

template <typename T>
Tensor<T> PlainBlock<T>::backward(const Tensor<T> &g)
{
    const Tensor<T> g_relu = pool ? pool->backward(g) : g;
    return conv.backward(bn.backward(relu.backward(g_relu)));
}

template <typename T>
void PlainBlock<T>::params(std::vector<ParamRef<T>> &out, const std::string &prefix)
{
    conv.params(out, prefix + ".conv");
    bn.params(out, prefix + ".bn");
}

template <typename T>
void PlainBlock<T>::mix_kinks(KinkHash &h) const
{
    relu.mix_kinks(h);
    if (pool)
        pool->mix_kinks(h);
}

template <typename T>
Tensor<T> RegressionBlock<T>::forward(const Tensor<T> &x)
{
    return fc.forward(pool.forward(x));
}

template <typename T>
Tensor<T> RegressionBlock<T>::backward(const Tensor<T> &g)
{
    return pool.backward(fc.backward(g));
}

template <typename T>
void RegressionBlock<T>::params(std::vector<ParamRef<T>> &out, const std::string &prefix)
{
    fc.params(out, prefix + ".fc");
}

// ---------------------------------------------------------------- model

template <typename T>
Model<T>::Model(const NetworkSpec &spec, std::uint64_t seed) : spec_(spec)
{
    spec_.validate();
    Rng rng = make_rng(seed, 0);

    stem = NcBlock<T>(2, spec_.base_channels);
    stem.conv.init(rng);
    Shape s = stem.pool.output_shape(stem.conv.output_shape({1, 2, spec_.input_rows, spec_.input_cols}));

    int channels = spec_.base_channels;
    for (int b = 0; b < spec_.block_count; ++b)
    {
        const int out = spec_.block_channels(b);
        const bool can_shrink = std::min(s[2], s[3]) >= 2;
        if (spec_.variant == Variant::Rcnr)
        {
            RcBlock<T> block(channels, out, (b >= 1 && can_shrink) ? 2 : 1);
            block.conv1.init(rng);
            block.conv2.init(rng);
            if (block.shortcut)
                block.shortcut->init(rng);
            s = block.conv2.output_shape(block.conv1.output_shape(s));
            residual_blocks.push_back(std::move(block));
        }
        else
        {
            PlainBlock<T> block(channels, out, can_shrink);
            block.conv.init(rng);
            s = block.conv.output_shape(s);
            if (block.pool)
                s = block.pool->output_shape(s);
            plain_blocks.push_back(std::move(block));
        }
        channels = out;
    }

    head = RegressionBlock<T>(channels);
    head.fc.init(rng);
}

template <typename T>
Tensor<T> Model<T>::forward(const Tensor<T> &input)
{
    require_rank(input, 4, "model input");
    if (input.dim(1) != 2 || input.dim(2) != spec_.input_rows || input.dim(3) != spec_.input_cols)
        throw ShapeError("model: expected input [B,2," + std::to_string(spec_.input_rows) + "," +
                         std::to_string(spec_.input_cols) + "], got " + shape_string(input.shape()));
    Tensor<T> x = stem.forward(input, mode_);
    for (auto &b : residual_blocks)
        x = b.forward(x, mode_);
    for (auto &b : plain_blocks)
        x = b.forward(x, mode_);
    return head.forward(x);
}

template <typename T>
Tensor<T> Model<T>::backward(const Tensor<T> &grad_output)
{
    Tensor<T> g = head.backward(grad_output);
    for (auto it = plain_blocks.rbegin(); it != plain_blocks.rend(); ++it)
        g = it->backward(g);
    for (auto it = residual_blocks.rbegin(); it != residual_blocks.rend(); ++it)
        g = it->backward(g);
    return stem.backward(g);
}

template <typename T>
std::vector<ParamRef<T>> Model<T>::params()
{
    std::vector<ParamRef<T>> out;
    stem.params(out, "stem");
    for (std::size_t i = 0; i < residual_blocks.size(); ++i)
        residual_blocks[i].params(out, "rc" + std::to_string(i + 1));
    for (std::size_t i = 0; i < plain_blocks.size(); ++i)
        plain_blocks[i].params(out, "nc" + std::to_string(i + 1));
    head.params(out, "head");
    return out;
}

template <typename T>
std::size_t Model<T>::parameter_count()
{
    std::size_t n = 0;
    for (const auto &p : params())
        if (p.grad)
            n += p.value->size();
    return n;
}

template <typename T>
int Model<T>::skip_connection_count() const
{
    return static_cast<int>(residual_blocks.size());
}

template <typename T>
KinkHash Model<T>::kinks() const
{
    KinkHash h;
    stem.mix_kinks(h);
    for (const auto &b : residual_blocks)
        b.mix_kinks(h);
    for (const auto &b : plain_blocks)
        b.mix_kinks(h);
    return h;
}

template <typename T>
Tensor<double> predict(Model<T> &model, const Tensor<T> &inputs, const LabelMap &labels)
{
    const Mode previous = model.mode();
    model.set_mode(Mode::Eval);
    const Tensor<T> out = model.forward(inputs);
    model.set_mode(previous);

    Tensor<double> meters(out.shape());
    for (int b = 0; b < out.dim(0); ++b)
    {
        const std::size_t o = 3 * static_cast<std::size_t>(b);
        const Position3D p = labels.denormalize(out[o], out[o + 1], out[o + 2]);
        meters[o] = p.x;
        meters[o + 1] = p.y;
        meters[o + 2] = p.z;
    }
    return meters;
}

// ---------------------------------------------------------------- checkpoint

namespace
{

constexpr std::string_view kEndHeader = "end_header\n";

} // namespace

void save_checkpoint(Model<float> &model, const std::filesystem::path &path)
{
    const auto &spec = model.spec();
    auto params = model.params();

    KeyValues kv;
    kv.set("format", "rispos-checkpoint");
    kv.set("format_version", kCheckpointFormatVersion);
    kv.set("variant", variant_name(spec.variant));
    kv.set("blocks", std::to_string(spec.block_count));
    kv.set("base_channels", std::to_string(spec.base_channels));
    std::string mult;
    for (std::size_t i = 0; i < spec.multipliers.size(); ++i)
        mult += (i ? " " : "") + std::to_string(spec.multipliers[i]);
    kv.set("multipliers", mult);
    kv.set("input_shape", "2 " + std::to_string(spec.input_rows) + " " + std::to_string(spec.input_cols));
    kv.set("precision", "float32");
    kv.set("tensor_count", std::to_string(params.size()));
    std::size_t total = 0;
    for (std::size_t i = 0; i < params.size(); ++i)
    {
        std::string line = params[i].name;
        for (int d : params[i].value->shape())
            line += " " + std::to_string(d);
        kv.set("tensor." + std::to_string(i), line);
        total += params[i].value->size();
    }
    kv.set("payload_floats", std::to_string(total));

    std::string bytes = kv.serialize();
    bytes += kEndHeader;
    for (const auto &p : params)
        for (float f : p.value->vec())
        {
            const auto u = std::bit_cast<std::uint32_t>(f);
            for (int s = 0; s < 32; s += 8)
                bytes.push_back(static_cast<char>(static_cast<unsigned char>(u >> s)));
        }

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw std::runtime_error("cannot write checkpoint " + path.string());
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os)
        throw std::runtime_error("checkpoint write failed: " + path.string());
}

Model<float> load_checkpoint(const std::filesystem::path &path)
{
    using Kind = CheckpointError::Kind;
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw CheckpointError(Kind::Missing, "checkpoint missing: " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

    const auto end = bytes.find(kEndHeader);
    if (end == std::string::npos)
        throw CheckpointError(Kind::MalformedHeader, "checkpoint header not terminated: " + path.string());

    NetworkSpec spec;
    std::vector<std::string> declared;
    std::size_t payload_floats = 0;
    try
    {
        KeyValues kv = KeyValues::parse(std::string_view(bytes).substr(0, end), path.string());
        if (kv.raw("format") != "rispos-checkpoint")
            throw CheckpointError(Kind::MalformedHeader, "not a checkpoint file: " + path.string());
        if (kv.raw("format_version") != kCheckpointFormatVersion)
            throw CheckpointError(Kind::VersionMismatch, "unsupported checkpoint version '" +
                                                             kv.raw("format_version") + "'");
        if (kv.raw("precision") != "float32")
            throw CheckpointError(Kind::MalformedHeader, "unsupported checkpoint precision");
        spec.variant = parse_variant(kv.raw("variant"));
        spec.block_count = static_cast<int>(kv.get_int("blocks"));
        spec.base_channels = static_cast<int>(kv.get_int("base_channels"));
        spec.multipliers.clear();
        for (auto m : kv.get_ints("multipliers"))
            spec.multipliers.push_back(static_cast<int>(m));
        const auto shape = kv.get_ints("input_shape", 3);
        if (shape[0] != 2)
            throw CheckpointError(Kind::ShapeMismatch, "checkpoint input must have 2 channels");
        spec.input_rows = static_cast<int>(shape[1]);
        spec.input_cols = static_cast<int>(shape[2]);
        const auto count = kv.get_int("tensor_count");
        for (std::int64_t i = 0; i < count; ++i)
            declared.push_back(kv.raw("tensor." + std::to_string(i)));
        payload_floats = static_cast<std::size_t>(kv.get_int("payload_floats"));
        kv.require_all_consumed();
    }
    catch (const KeyValueError &e)
    {
        throw CheckpointError(Kind::MalformedHeader, std::string("malformed checkpoint header: ") + e.what());
    }
    catch (const ConfigError &e)
    {
        throw CheckpointError(Kind::MalformedHeader, std::string("malformed checkpoint header: ") + e.what());
    }

    Model<float> model(spec, 0);
    auto params = model.params();
    if (declared.size() != params.size())
        throw CheckpointError(Kind::ShapeMismatch, "checkpoint tensor count does not match the network spec");
    std::size_t total = 0;
    for (std::size_t i = 0; i < params.size(); ++i)
    {
        std::string expect = params[i].name;
        for (int d : params[i].value->shape())
            expect += " " + std::to_string(d);
        if (declared[i] != expect)
            throw CheckpointError(Kind::ShapeMismatch,
                                  "checkpoint tensor '" + declared[i] + "' does not match '" + expect + "'");
        total += params[i].value->size();
    }
    const std::size_t offset = end + kEndHeader.size();
    if (total != payload_floats || bytes.size() - offset != 4 * total)
        throw CheckpointError(Kind::PayloadSizeMismatch, "checkpoint payload holds " +
                                                             std::to_string(bytes.size() - offset) + " bytes, expected " +
                                                             std::to_string(4 * total));

    std::size_t pos = offset;
    for (auto &p : params)
        for (auto &f : p.value->vec())
        {
            std::uint32_t u = 0;
            for (int k = 0; k < 4; ++k)
                u |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + k])) << (8 * k);
            f = std::bit_cast<float>(u);
            pos += 4;
        }
    model.set_mode(Mode::Eval);
    return model;
}

template struct NcBlock<float>;
template struct NcBlock<double>;
template struct RcBlock<float>;
template struct RcBlock<double>;
template struct PlainBlock<float>;
template struct PlainBlock<double>;
template struct RegressionBlock<float>;
template struct RegressionBlock<double>;
template class Model<float>;
template class Model<double>;
template Tensor<double> predict(Model<float> &, const Tensor<float> &, const LabelMap &);
template Tensor<double> predict(Model<double> &, const Tensor<double> &, const LabelMap &);

} // namespace rispos
