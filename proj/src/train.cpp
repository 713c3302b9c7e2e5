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

#include "rispos/train.hpp"
#include "rispos/keyvalue.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace rispos
{

void TrainConfig::validate() const
{
    if (epochs < 1)
        throw ConfigError("train.epochs must be >= 1");
    if (batch_size < 1)
        throw ConfigError("train.batch_size must be >= 1");
    if (!(adam.learning_rate >= 0.0) || !std::isfinite(adam.learning_rate))
        throw ConfigError("train.learning_rate must be finite and >= 0");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0))
        throw ConfigError("Adam moment decays must lie in [0, 1)");
    if (!(adam.epsilon > 0.0))
        throw ConfigError("train.epsilon must be > 0");
    if (eval_every < 1)
        throw ConfigError("train.eval_every must be >= 1");
}

// ---------------------------------------------------------------- Adam

template <typename T>
AdamState<T> AdamState<T>::for_params(const std::vector<ParamRef<T>> &params)
{
    AdamState s;
    for (const auto &p : params)
        if (p.grad)
        {
            s.m.emplace_back(p.value->shape());
            s.v.emplace_back(p.value->shape());
        }
    return s;
}

template <typename T>
void adam_step(AdamState<T> &state, const std::vector<ParamRef<T>> &params, const AdamConfig &cfg)
{
    ++state.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
    const T step_size = static_cast<T>(cfg.learning_rate / c1);
    const T inv_c2 = static_cast<T>(1.0 / c2);
    const T eps = static_cast<T>(cfg.epsilon);

    std::size_t k = 0;
    for (const auto &p : params)
    {
        if (!p.grad)
            continue;
        if (k >= state.m.size())
            throw ShapeError("adam_step: more learnable tensors than moment buffers");
        Tensor<T> &m = state.m[k], &v = state.v[k];
        if (m.shape() != p.value->shape() || p.grad->shape() != p.value->shape())
            throw ShapeError("adam_step: moment buffers for " + p.name + " have shape " + shape_string(m.shape()) +
                             ", parameter has " + shape_string(p.value->shape()));
        T *w = p.value->data();
        const T *g = p.grad->data();
        T *mm = m.data(), *vv = v.data();
        for (std::size_t i = 0; i < m.size(); ++i)
        {
            mm[i] = b1 * mm[i] + (T(1) - b1) * g[i];
            vv[i] = b2 * vv[i] + (T(1) - b2) * g[i] * g[i];
            w[i] -= step_size * mm[i] / (std::sqrt(vv[i] * inv_c2) + eps);
        }
        ++k;
    }
    if (k != state.m.size())
        throw ShapeError("adam_step: fewer learnable tensors than moment buffers");
}

// ---------------------------------------------------------------- evaluation

namespace
{

template <typename T>
Tensor<T> as(const Tensor<float> &t)
{
    if constexpr (std::is_same_v<T, float>)
        return t;
    else
        return t.template cast<T>();
}

} // namespace

template <typename T>
EvalResult evaluate(Model<T> &model, const Dataset &data, const LabelMap &labels, std::size_t chunk)
{
    const std::size_t n = data.size();
    if (n == 0)
        throw std::invalid_argument("evaluate: empty dataset");
    chunk = std::max<std::size_t>(chunk, 1);

    const Mode previous = model.mode();
    model.set_mode(Mode::Eval);
    double sq_norm = 0.0, sq_m = 0.0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < n; start += chunk)
    {
        idx.resize(std::min(chunk, n - start));
        std::iota(idx.begin(), idx.end(), start);
        const Tensor<T> out = model.forward(as<T>(data.batch_inputs(idx)));
        for (std::size_t k = 0; k < idx.size(); ++k)
        {
            const float *lab = data.labels.data() + 3 * idx[k];
            const T *o = out.data() + 3 * k;
            const Position3D p = labels.denormalize(o[0], o[1], o[2]);
            const Position3D t = labels.denormalize(lab[0], lab[1], lab[2]);
            for (int c = 0; c < 3; ++c)
            {
                const double d = static_cast<double>(o[c]) - lab[c];
                sq_norm += d * d;
            }
            const double e = distance(p, t);
            sq_m += e * e;
        }
    }
    model.set_mode(previous);
    return {sq_norm / static_cast<double>(n), std::sqrt(sq_m / static_cast<double>(n))};
}

template <typename T>
double evaluate_rmse(Model<T> &model, const Dataset &data, const LabelMap &labels)
{
    return evaluate(model, data, labels).rmse_m;
}

// ---------------------------------------------------------------- training

template <typename T>
std::vector<MetricsRow> train(Model<T> &model, const Dataset &train_set, const Dataset &test_set, const LabelMap &labels,
                              const TrainConfig &cfg, const EpochCallback &on_epoch)
{
    cfg.validate();
    if (train_set.size() < 2)
        throw std::invalid_argument("train: need at least two training samples");
    if (test_set.size() == 0)
        throw std::invalid_argument("train: empty test set");
    const auto &spec = model.spec();
    if (train_set.rows != spec.input_rows || train_set.cols != spec.input_cols || test_set.rows != train_set.rows ||
        test_set.cols != train_set.cols)
        throw ShapeError("train: dataset samples are " + std::to_string(train_set.rows) + "x" +
                         std::to_string(train_set.cols) + ", network expects " + std::to_string(spec.input_rows) +
                         "x" + std::to_string(spec.input_cols));

    auto params = model.params();
    auto adam = AdamState<T>::for_params(params);
    Rng shuffle_rng = make_rng(cfg.seed, 1);

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);

    std::vector<MetricsRow> history;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch)
    {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        model.set_mode(Mode::Train);

        double loss_sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += batch)
        {
            const std::size_t count = std::min(batch, order.size() - start);
            if (count < 2)
                break;
            const std::span<const std::size_t> idx(order.data() + start, count);
            const Tensor<T> pred = model.forward(as<T>(train_set.batch_inputs(idx)));
            const auto loss = mse_loss(pred, as<T>(train_set.batch_labels(idx)));
            if (!std::isfinite(loss.loss))
                throw DivergenceError("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                                      ", sample offset " + std::to_string(start));
            model.backward(loss.grad);
            adam_step(adam, params, cfg.adam);
            loss_sum += loss.loss * static_cast<double>(count);
            seen += count;
        }

        if (epoch % cfg.eval_every != 0 && epoch != cfg.epochs)
            continue;
        const EvalResult test = evaluate(model, test_set, labels);
        MetricsRow row{epoch, loss_sum / static_cast<double>(seen), test.loss, test.rmse_m};
        if (!std::isfinite(row.test_loss))
            throw DivergenceError("training diverged: non-finite test loss at epoch " + std::to_string(epoch));
        history.push_back(row);
        if (on_epoch)
            on_epoch(row);
    }
    model.set_mode(Mode::Eval);
    return history;
}

// ---------------------------------------------------------------- metrics file

std::string format_metrics(std::span<const MetricsRow> history)
{
    if (history.empty())
        throw std::invalid_argument("export_metrics: empty history");
    std::string out = kMetricsHeader;
    out += '\n';
    for (const auto &r : history)
        out += std::to_string(r.epoch) + ',' + format_double(r.train_loss) + ',' + format_double(r.test_loss) + ',' +
               format_double(r.test_rmse_m) + '\n';
    return out;
}

void export_metrics(std::span<const MetricsRow> history, const std::filesystem::path &path)
{
    const std::string text = format_metrics(history);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw std::runtime_error("cannot write metrics file " + path.string());
    os << text;
    if (!os.flush())
        throw std::runtime_error("metrics write failed: " + path.string());
}

std::vector<MetricsRow> parse_metrics(std::string_view text)
{
    std::istringstream is{std::string(text)};
    std::string line;
    if (!std::getline(is, line) || line != kMetricsHeader)
        throw std::invalid_argument("metrics: missing header line");
    auto number = [](std::string_view s, auto &value) {
        const auto r = std::from_chars(s.data(), s.data() + s.size(), value);
        if (r.ec != std::errc() || r.ptr != s.data() + s.size())
            throw std::invalid_argument("metrics: bad number '" + std::string(s) + "'");
    };
    std::vector<MetricsRow> rows;
    while (std::getline(is, line))
    {
        if (line.empty())
            continue;
        std::vector<std::string_view> f;
        std::string_view rest(line);
        for (auto pos = rest.find(','); pos != std::string_view::npos; pos = rest.find(','))
        {
            f.push_back(rest.substr(0, pos));
            rest.remove_prefix(pos + 1);
        }
        f.push_back(rest);
        if (f.size() != 4)
            throw std::invalid_argument("metrics: expected 4 fields in '" + line + "'");
        MetricsRow r;
        number(f[0], r.epoch);
        number(f[1], r.train_loss);
        number(f[2], r.test_loss);
        number(f[3], r.test_rmse_m);
        rows.push_back(r);
    }
    return rows;
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step(AdamState<float> &, const std::vector<ParamRef<float>> &, const AdamConfig &);
template void adam_step(AdamState<double> &, const std::vector<ParamRef<double>> &, const AdamConfig &);
template EvalResult evaluate(Model<float> &, const Dataset &, const LabelMap &, std::size_t);
template EvalResult evaluate(Model<double> &, const Dataset &, const LabelMap &, std::size_t);
template double evaluate_rmse(Model<float> &, const Dataset &, const LabelMap &);
template double evaluate_rmse(Model<double> &, const Dataset &, const LabelMap &);
template std::vector<MetricsRow> train(Model<float> &, const Dataset &, const Dataset &, const LabelMap &,
                                       const TrainConfig &, const EpochCallback &);
template std::vector<MetricsRow> train(Model<double> &, const Dataset &, const Dataset &, const LabelMap &,
                                       const TrainConfig &, const EpochCallback &);

} // namespace rispos
