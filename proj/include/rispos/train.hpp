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

#ifndef RISPOS_TRAIN_HPP
#define RISPOS_TRAIN_HPP

#include "rispos/dataset.hpp"
#include "rispos/network.hpp"

#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace rispos
{

struct AdamConfig
{
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct TrainConfig
{
    int epochs = 60;
    int batch_size = 32;
    AdamConfig adam;
    std::uint64_t seed = 0; // network init and per-epoch shuffling
    int eval_every = 1;

    void validate() const;
};

struct MetricsRow
{
    int epoch = 0;
    double train_loss = 0.0; // mean minibatch loss over the epoch
    double test_loss = 0.0;  // eval mode, normalized label units
    double test_rmse_m = 0.0;

    friend bool operator==(const MetricsRow &, const MetricsRow &) = default;
};

// First and second moment buffers, one per learnable tensor.
template <typename T>
struct AdamState
{
    std::vector<Tensor<T>> m, v;
    std::int64_t step = 0;

    static AdamState for_params(const std::vector<ParamRef<T>> &params);
};

// One bias-corrected Adam update of every learnable tensor in `params`
// (buffers are skipped).
template <typename T>
void adam_step(AdamState<T> &state, const std::vector<ParamRef<T>> &params, const AdamConfig &cfg);

class DivergenceError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct EvalResult
{
    double loss = 0.0;   // mean squared error of normalized positions per sample
    double rmse_m = 0.0; // 3D Euclidean, meters
};

// Eval mode; processes the set in chunks of `chunk` samples.
template <typename T>
EvalResult evaluate(Model<T> &model, const Dataset &data, const LabelMap &labels, std::size_t chunk = 256);

template <typename T>
double evaluate_rmse(Model<T> &model, const Dataset &data, const LabelMap &labels);

using EpochCallback = std::function<void(const MetricsRow &)>;

// Minibatch Adam on the MSE loss. A trailing minibatch of a single sample is
// dropped because batch normalization needs two. Test metrics are recorded
// every `eval_every` epochs and after the last one.
template <typename T>
std::vector<MetricsRow> train(Model<T> &model, const Dataset &train_set, const Dataset &test_set, const LabelMap &labels,
                              const TrainConfig &cfg, const EpochCallback &on_epoch = {});

inline constexpr const char *kMetricsHeader = "epoch,train_loss,test_loss,test_rmse_m";

std::string format_metrics(std::span<const MetricsRow> history);
void export_metrics(std::span<const MetricsRow> history, const std::filesystem::path &path);
std::vector<MetricsRow> parse_metrics(std::string_view text);

extern template std::vector<MetricsRow> train(Model<float> &, const Dataset &, const Dataset &, const LabelMap &,
                                              const TrainConfig &, const EpochCallback &);
extern template std::vector<MetricsRow> train(Model<double> &, const Dataset &, const Dataset &, const LabelMap &,
                                              const TrainConfig &, const EpochCallback &);

} // namespace rispos

#endif
