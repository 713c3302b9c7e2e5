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

#ifndef RISPOS_DATASET_HPP
#define RISPOS_DATASET_HPP

#include "rispos/channel.hpp"
#include "rispos/geometry.hpp"
#include "rispos/tensor.hpp"

#include <array>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rispos
{

inline constexpr const char *kDatasetFormatVersion = "1";

struct GridArgs
{
    double length = 9.6;
    double width = 5.8;
    double spacing = 0.2;
    std::vector<double> heights{1.4, 1.5, 1.6};
    Position3D origin{-14.8, 0.0, 0.0};

    std::vector<Position3D> positions() const;
};

// normalized = (meters - offset) / scale, per coordinate.
struct LabelMap
{
    std::array<double, 3> offset{0.0, 0.0, 0.0};
    std::array<double, 3> scale{1.0, 1.0, 1.0};

    std::array<double, 3> normalize(const Position3D &p) const;
    Position3D denormalize(double x, double y, double z) const;

    // Maps the axis-aligned extent of `positions` onto [-1, 1]; degenerate axes keep scale 1.
    static LabelMap fit(std::span<const Position3D> positions);
};

// Per-channel (real, imaginary) standardization constants.
struct InputNorm
{
    std::array<double, 2> mean{0.0, 0.0};
    std::array<double, 2> stddev{1.0, 1.0};
};

struct DatasetManifest
{
    std::string format_version = kDatasetFormatVersion;
    std::size_t sample_count = 0;
    std::size_t train_count = 0;
    int rows = 0; // M_x
    int cols = 0; // M_z
    int label_dim = 3;
    InputNorm input_norm;
    LabelMap label_map;
    SceneConfig scene;
    GridArgs grid;
    double split_fraction = 0.8;
    std::uint64_t split_seed = 0;

    std::size_t test_count() const { return sample_count - train_count; }
    Shape input_shape() const { return {2, rows, cols}; }
};

struct Sample
{
    Tensor<float> input; // [2, rows, cols], channel 0 real, channel 1 imaginary
    Position3D label;    // normalized coordinates
};

// Samples stored contiguously: inputs [N, 2, rows, cols], labels [N, 3].
struct Dataset
{
    int rows = 0, cols = 0;
    std::vector<float> inputs;
    std::vector<float> labels;

    std::size_t size() const { return labels.size() / 3; }
    std::size_t input_stride() const { return 2 * static_cast<std::size_t>(rows) * cols; }
    void append(const Sample &s);
    Sample sample(std::size_t i) const;

    // Gathers the listed samples into batch tensors.
    Tensor<float> batch_inputs(std::span<const std::size_t> indices) const;
    Tensor<float> batch_labels(std::span<const std::size_t> indices) const;

    friend bool operator==(const Dataset &, const Dataset &) = default;
};

class DatasetError : public std::runtime_error
{
public:
    enum class Kind
    {
        ManifestMissing,
        MalformedManifest,
        VersionMismatch,
        ShapeMismatch,
        SampleCountMismatch,
        Io
    };

    DatasetError(Kind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

std::pair<std::vector<double>, std::vector<double>> decompose_complex(std::span<const cplx> h);

// Row-major: out[r][c] = v[r * cols + c].
Tensor<double> reshape_to_stcrm(std::span<const double> v, int rows, int cols);

Sample assemble_sample(std::span<const cplx> h_est, const Position3D &position, int rows, int cols,
                       const InputNorm &norm, const LabelMap &labels);

// Channel statistics over raw (unnormalized) STCRVs.
InputNorm fit_input_norm(std::span<const ComplexVector> fingerprints);

// Pilot symbol for slot t of a length-tau sequence (unit modulus).
cplx pilot_symbol(int t, int tau);

// Everything that stays fixed across MU positions in a scene.
struct SceneChannels
{
    ComplexMatrix ris_ap;                  // H
    ComplexMatrix phase;                   // psi (identity)
    std::vector<RisApPath> ris_ap_paths;
};

SceneChannels prepare_scene(const SceneConfig &scene);

// Noiseless h = H psi g at one MU position.
ComplexVector scene_stcrv(const SceneConfig &scene, const SceneChannels &channels, const Position3D &mu);

// Noisy estimate from tau pilot slots. `sample_index` selects the noise stream.
ComplexVector scene_fingerprint(const SceneConfig &scene, const SceneChannels &channels, const Position3D &mu,
                                std::uint64_t sample_index);

// Post-estimation SNR in dB, mean |h|^2 tau p / noise, at the given position.
double estimation_snr_db(const SceneConfig &scene, const Position3D &mu);

struct BuiltDataset
{
    Dataset train, test;
    DatasetManifest manifest;
    std::vector<std::size_t> train_grid_index, test_grid_index;
};

BuiltDataset build_dataset(const SceneConfig &scene, const GridArgs &grid, double split_fraction,
                           std::uint64_t split_seed);

// Directory layout: manifest, inputs.bin, labels.bin (train samples first).
void serialize(const Dataset &train, const Dataset &test, const DatasetManifest &manifest,
               const std::filesystem::path &dir);

struct LoadedDataset
{
    Dataset train, test;
    DatasetManifest manifest;
};

LoadedDataset deserialize(const std::filesystem::path &dir);

} // namespace rispos

#endif
