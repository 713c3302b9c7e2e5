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

#include "rispos/dataset.hpp"
#include "rispos/config.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

namespace rispos
{

namespace
{

constexpr std::uint64_t kStreamMuScatter = 0;
constexpr std::uint64_t kStreamRisApScatter = 1;
constexpr std::uint64_t kStreamNoiseBase = std::uint64_t{1} << 32;

} // namespace

std::vector<Position3D> GridArgs::positions() const
{
    return grid_positions(length, width, spacing, heights, origin);
}

std::array<double, 3> LabelMap::normalize(const Position3D &p) const
{
    return {(p.x - offset[0]) / scale[0], (p.y - offset[1]) / scale[1], (p.z - offset[2]) / scale[2]};
}

Position3D LabelMap::denormalize(double x, double y, double z) const
{
    return {x * scale[0] + offset[0], y * scale[1] + offset[1], z * scale[2] + offset[2]};
}

LabelMap LabelMap::fit(std::span<const Position3D> positions)
{
    LabelMap m;
    if (positions.empty())
        return m;
    std::array<double, 3> lo{positions[0].x, positions[0].y, positions[0].z}, hi = lo;
    for (const auto &p : positions)
    {
        const std::array<double, 3> v{p.x, p.y, p.z};
        for (int a = 0; a < 3; ++a)
        {
            lo[a] = std::min(lo[a], v[a]);
            hi[a] = std::max(hi[a], v[a]);
        }
    }
    for (int a = 0; a < 3; ++a)
    {
        m.offset[a] = 0.5 * (lo[a] + hi[a]);
        const double half = 0.5 * (hi[a] - lo[a]);
        m.scale[a] = half > 0.0 ? half : 1.0;
    }
    return m;
}

void Dataset::append(const Sample &s)
{
    if (s.input.shape() != Shape{2, rows, cols})
        throw ShapeError("dataset append: expected input shape " + shape_string({2, rows, cols}) + ", got " +
                         shape_string(s.input.shape()));
    inputs.insert(inputs.end(), s.input.vec().begin(), s.input.vec().end());
    labels.push_back(static_cast<float>(s.label.x));
    labels.push_back(static_cast<float>(s.label.y));
    labels.push_back(static_cast<float>(s.label.z));
}

Sample Dataset::sample(std::size_t i) const
{
    const std::size_t stride = input_stride();
    std::vector<float> v(inputs.begin() + static_cast<std::ptrdiff_t>(i * stride),
                         inputs.begin() + static_cast<std::ptrdiff_t>((i + 1) * stride));
    return {Tensor<float>({2, rows, cols}, std::move(v)), {labels[3 * i], labels[3 * i + 1], labels[3 * i + 2]}};
}

Tensor<float> Dataset::batch_inputs(std::span<const std::size_t> indices) const
{
    const std::size_t stride = input_stride();
    Tensor<float> out({static_cast<int>(indices.size()), 2, rows, cols});
    for (std::size_t k = 0; k < indices.size(); ++k)
        std::copy_n(inputs.data() + indices[k] * stride, stride, out.data() + k * stride);
    return out;
}

Tensor<float> Dataset::batch_labels(std::span<const std::size_t> indices) const
{
    Tensor<float> out({static_cast<int>(indices.size()), 3});
    for (std::size_t k = 0; k < indices.size(); ++k)
        std::copy_n(labels.data() + 3 * indices[k], 3, out.data() + 3 * k);
    return out;
}

std::pair<std::vector<double>, std::vector<double>> decompose_complex(std::span<const cplx> h)
{
    std::pair<std::vector<double>, std::vector<double>> out;
    out.first.reserve(h.size());
    out.second.reserve(h.size());
    for (const auto &v : h)
    {
        out.first.push_back(v.real());
        out.second.push_back(v.imag());
    }
    return out;
}

Tensor<double> reshape_to_stcrm(std::span<const double> v, int rows, int cols)
{
    if (rows < 1 || cols < 1 || v.size() != static_cast<std::size_t>(rows) * cols)
        throw ShapeError("reshape_to_stcrm: length " + std::to_string(v.size()) + " does not match " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    return Tensor<double>({rows, cols}, std::vector<double>(v.begin(), v.end()));
}

Sample assemble_sample(std::span<const cplx> h_est, const Position3D &position, int rows, int cols,
                       const InputNorm &norm, const LabelMap &labels)
{
    const auto [re, im] = decompose_complex(h_est);
    const Tensor<double> real_part = reshape_to_stcrm(re, rows, cols);
    const Tensor<double> imag_part = reshape_to_stcrm(im, rows, cols);

    const std::size_t plane = static_cast<std::size_t>(rows) * cols;
    Tensor<float> input({2, rows, cols});
    for (std::size_t i = 0; i < plane; ++i)
    {
        input[i] = static_cast<float>((real_part[i] - norm.mean[0]) / norm.stddev[0]);
        input[plane + i] = static_cast<float>((imag_part[i] - norm.mean[1]) / norm.stddev[1]);
    }
    const auto l = labels.normalize(position);
    return {std::move(input), {l[0], l[1], l[2]}};
}

InputNorm fit_input_norm(std::span<const ComplexVector> fingerprints)
{
    InputNorm n;
    double sum[2] = {0.0, 0.0};
    std::size_t count = 0;
    for (const auto &h : fingerprints)
        for (const auto &v : h)
        {
            sum[0] += v.real();
            sum[1] += v.imag();
            ++count;
        }
    if (count == 0)
        return n;
    n.mean = {sum[0] / static_cast<double>(count), sum[1] / static_cast<double>(count)};
    double sq[2] = {0.0, 0.0};
    for (const auto &h : fingerprints)
        for (const auto &v : h)
        {
            sq[0] += (v.real() - n.mean[0]) * (v.real() - n.mean[0]);
            sq[1] += (v.imag() - n.mean[1]) * (v.imag() - n.mean[1]);
        }
    for (int c = 0; c < 2; ++c)
    {
        const double sd = std::sqrt(sq[c] / static_cast<double>(count));
        n.stddev[c] = sd > 0.0 && std::isfinite(sd) ? sd : 1.0;
    }
    return n;
}

cplx pilot_symbol(int t, int tau)
{
    // Zadoff-Chu root 1.
    const double tt = static_cast<double>(t);
    const double phase = -std::numbers::pi * tt * (tt + static_cast<double>(tau % 2)) / static_cast<double>(tau);
    return std::polar(1.0, phase);
}

SceneChannels prepare_scene(const SceneConfig &scene)
{
    scene.validate();
    SceneChannels ch;
    Rng rng = make_rng(scene.rng_seed, kStreamRisApScatter);
    ch.ris_ap_paths = synth_ris_ap_paths(scene, rng);
    ch.ris_ap = ris_ap_channel(ch.ris_ap_paths, scene.ris, scene.ap, scene.wavelength);
    ch.phase = ComplexMatrix::identity(static_cast<std::size_t>(scene.ris.size()));
    return ch;
}

ComplexVector scene_stcrv(const SceneConfig &scene, const SceneChannels &channels, const Position3D &mu)
{
    Rng rng = make_rng(scene.rng_seed, kStreamMuScatter);
    const auto paths = synth_mu_ris_paths(scene, mu, rng);
    const ComplexVector g = mu_ris_channel(paths, scene.ris, scene.wavelength);
    return stcrv(channels.ris_ap, channels.phase, g);
}

ComplexVector scene_fingerprint(const SceneConfig &scene, const SceneChannels &channels, const Position3D &mu,
                                std::uint64_t sample_index)
{
    const ComplexVector h = scene_stcrv(scene, channels, mu);
    const double p = dbm_to_watts(scene.tx_power_dbm);
    const double noise = dbm_to_watts(scene.noise_power_dbm);

    Rng rng = make_rng(scene.rng_seed, kStreamNoiseBase + sample_index);
    std::vector<ComplexVector> observations;
    std::vector<cplx> pilots;
    observations.reserve(static_cast<std::size_t>(scene.pilot_length));
    for (int t = 0; t < scene.pilot_length; ++t)
    {
        pilots.push_back(pilot_symbol(t, scene.pilot_length));
        observations.push_back(received_signal(h, p, pilots.back(), noise, rng));
    }
    return estimate_stcrv(observations, pilots, p);
}

double estimation_snr_db(const SceneConfig &scene, const Position3D &mu)
{
    const SceneChannels channels = prepare_scene(scene);
    const ComplexVector h = scene_stcrv(scene, channels, mu);
    double power = 0.0;
    for (const auto &v : h)
        power += std::norm(v);
    power /= static_cast<double>(h.size());
    const double signal = power * scene.pilot_length * dbm_to_watts(scene.tx_power_dbm);
    return 10.0 * std::log10(signal / dbm_to_watts(scene.noise_power_dbm));
}

BuiltDataset build_dataset(const SceneConfig &scene, const GridArgs &grid, double split_fraction,
                           std::uint64_t split_seed)
{
    if (!(split_fraction > 0.0 && split_fraction < 1.0))
        throw std::invalid_argument("split_fraction must lie in (0, 1)");
    const std::vector<Position3D> positions = grid.positions();
    if (positions.empty())
        throw std::invalid_argument("empty grid");

    const std::size_t n = positions.size();
    const auto train_count = static_cast<std::size_t>(std::floor(split_fraction * static_cast<double>(n) + 1e-9));
    if (train_count == 0 || train_count == n)
        throw std::invalid_argument("split leaves an empty train or test set (" + std::to_string(n) + " samples)");

    const SceneChannels channels = prepare_scene(scene);
    std::vector<ComplexVector> fingerprints(n);
    // Per-sample RNG streams keep this loop order-independent.
#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t i = 0; i < n; ++i)
        fingerprints[i] = scene_fingerprint(scene, channels, positions[i], i);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i)
        order[i] = i;
    Rng split_rng = make_rng(split_seed, 0);
    std::shuffle(order.begin(), order.end(), split_rng);

    BuiltDataset out;
    out.train_grid_index.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_count));
    out.test_grid_index.assign(order.begin() + static_cast<std::ptrdiff_t>(train_count), order.end());

    std::vector<ComplexVector> train_fp;
    train_fp.reserve(train_count);
    for (std::size_t i : out.train_grid_index)
        train_fp.push_back(fingerprints[i]);

    auto &m = out.manifest;
    m.sample_count = n;
    m.train_count = train_count;
    m.rows = scene.ap.count_a;
    m.cols = scene.ap.count_b;
    m.input_norm = fit_input_norm(train_fp);
    m.label_map = LabelMap::fit(positions);
    m.scene = scene;
    m.grid = grid;
    m.split_fraction = split_fraction;
    m.split_seed = split_seed;

    out.train.rows = out.test.rows = m.rows;
    out.train.cols = out.test.cols = m.cols;
    for (std::size_t i : out.train_grid_index)
        out.train.append(assemble_sample(fingerprints[i], positions[i], m.rows, m.cols, m.input_norm, m.label_map));
    for (std::size_t i : out.test_grid_index)
        out.test.append(assemble_sample(fingerprints[i], positions[i], m.rows, m.cols, m.input_norm, m.label_map));
    return out;
}

// ---------------------------------------------------------------- files

namespace
{

void write_floats_le(const std::filesystem::path &path, std::span<const float> a, std::span<const float> b)
{
    std::vector<unsigned char> bytes;
    bytes.reserve(4 * (a.size() + b.size()));
    const auto put = [&bytes](float f) {
        const auto u = std::bit_cast<std::uint32_t>(f);
        for (int s = 0; s < 32; s += 8)
            bytes.push_back(static_cast<unsigned char>(u >> s));
    };
    for (float f : a)
        put(f);
    for (float f : b)
        put(f);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw DatasetError(DatasetError::Kind::Io, "cannot write " + path.string());
    os.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os)
        throw DatasetError(DatasetError::Kind::Io, "write failed: " + path.string());
}

std::vector<float> read_floats_le(const std::filesystem::path &path, std::size_t expected, const char *what)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw DatasetError(DatasetError::Kind::SampleCountMismatch, std::string(what) + " missing: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (bytes.size() != 4 * expected)
        throw DatasetError(DatasetError::Kind::SampleCountMismatch,
                           std::string("sample count mismatch: ") + what + " holds " + std::to_string(bytes.size()) +
                               " bytes, manifest implies " + std::to_string(4 * expected));
    std::vector<float> out(expected);
    for (std::size_t i = 0; i < expected; ++i)
    {
        std::uint32_t u = 0;
        for (int k = 0; k < 4; ++k)
            u |= static_cast<std::uint32_t>(bytes[4 * i + k]) << (8 * k);
        out[i] = std::bit_cast<float>(u);
    }
    return out;
}

} // namespace

void serialize(const Dataset &train, const Dataset &test, const DatasetManifest &m, const std::filesystem::path &dir)
{
    if (train.size() != m.train_count || train.size() + test.size() != m.sample_count)
        throw DatasetError(DatasetError::Kind::SampleCountMismatch, "dataset sizes disagree with manifest");
    if (train.rows != m.rows || train.cols != m.cols || test.rows != m.rows || test.cols != m.cols)
        throw DatasetError(DatasetError::Kind::ShapeMismatch, "dataset shapes disagree with manifest");

    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw DatasetError(DatasetError::Kind::Io, "cannot create " + dir.string() + ": " + ec.message());

    KeyValues kv;
    kv.set("format_version", m.format_version);
    kv.set("sample_count", std::to_string(m.sample_count));
    kv.set("train_count", std::to_string(m.train_count));
    kv.set("test_count", std::to_string(m.test_count()));
    kv.set("input_shape", "2 " + std::to_string(m.rows) + " " + std::to_string(m.cols));
    kv.set("label_dim", std::to_string(m.label_dim));
    kv.set("input.mean", format_double(m.input_norm.mean[0]) + " " + format_double(m.input_norm.mean[1]));
    kv.set("input.std", format_double(m.input_norm.stddev[0]) + " " + format_double(m.input_norm.stddev[1]));
    kv.set("label.offset", format_double(m.label_map.offset[0]) + " " + format_double(m.label_map.offset[1]) + " " +
                               format_double(m.label_map.offset[2]));
    kv.set("label.scale", format_double(m.label_map.scale[0]) + " " + format_double(m.label_map.scale[1]) + " " +
                              format_double(m.label_map.scale[2]));
    kv.set("split.fraction", format_double(m.split_fraction));
    kv.set("split.seed", std::to_string(m.split_seed));
    kv.set("reflection.range", format_double(kReflectionMin) + " " + format_double(kReflectionMax));
    write_scene(kv, m.scene);
    write_grid(kv, m.grid);

    std::ofstream os(dir / "manifest", std::ios::trunc);
    if (!os)
        throw DatasetError(DatasetError::Kind::Io, "cannot write manifest in " + dir.string());
    os << kv.serialize();
    os.close();

    write_floats_le(dir / "inputs.bin", train.inputs, test.inputs);
    write_floats_le(dir / "labels.bin", train.labels, test.labels);
}

LoadedDataset deserialize(const std::filesystem::path &dir)
{
    const auto manifest_path = dir / "manifest";
    if (!std::filesystem::exists(manifest_path))
        throw DatasetError(DatasetError::Kind::ManifestMissing, "manifest missing in " + dir.string());

    LoadedDataset out;
    auto &m = out.manifest;
    std::vector<std::int64_t> shape;
    try
    {
        KeyValues kv = KeyValues::parse(read_text_file(manifest_path), manifest_path.string());
        m.format_version = kv.raw("format_version");
        if (m.format_version != kDatasetFormatVersion)
            throw DatasetError(DatasetError::Kind::VersionMismatch,
                               "unsupported dataset format version '" + m.format_version + "'");
        const auto sample_count = kv.get_int("sample_count");
        const auto train_count = kv.get_int("train_count");
        const auto test_count = kv.get_int("test_count");
        if (sample_count < 0 || train_count < 0 || test_count < 0 || train_count + test_count != sample_count)
            throw DatasetError(DatasetError::Kind::MalformedManifest, "inconsistent sample counts in manifest");
        m.sample_count = static_cast<std::size_t>(sample_count);
        m.train_count = static_cast<std::size_t>(train_count);
        shape = kv.get_ints("input_shape", 3);
        m.label_dim = static_cast<int>(kv.get_int("label_dim"));
        const auto mean = kv.get_doubles("input.mean", 2);
        const auto sd = kv.get_doubles("input.std", 2);
        const auto off = kv.get_doubles("label.offset", 3);
        const auto sc = kv.get_doubles("label.scale", 3);
        for (int c = 0; c < 2; ++c)
        {
            m.input_norm.mean[c] = mean[c];
            m.input_norm.stddev[c] = sd[c];
            if (!std::isfinite(mean[c]) || !(sd[c] > 0.0) || !std::isfinite(sd[c]))
                throw DatasetError(DatasetError::Kind::MalformedManifest, "invalid input normalization constants");
        }
        for (int a = 0; a < 3; ++a)
        {
            m.label_map.offset[a] = off[a];
            m.label_map.scale[a] = sc[a];
            if (!std::isfinite(off[a]) || !std::isfinite(sc[a]) || sc[a] == 0.0)
                throw DatasetError(DatasetError::Kind::MalformedManifest, "invalid label map");
        }
        m.split_fraction = kv.get_double("split.fraction");
        m.split_seed = kv.get_uint("split.seed");
        kv.get_doubles("reflection.range", 2);
        read_scene(kv, m.scene);
        read_grid(kv, m.grid);
        kv.require_all_consumed();
    }
    catch (const KeyValueError &e)
    {
        throw DatasetError(DatasetError::Kind::MalformedManifest, std::string("malformed manifest: ") + e.what());
    }
    catch (const ConfigError &e)
    {
        throw DatasetError(DatasetError::Kind::MalformedManifest, std::string("malformed manifest: ") + e.what());
    }

    if (shape[0] != 2 || shape[1] < 1 || shape[2] < 1 || m.label_dim != 3)
        throw DatasetError(DatasetError::Kind::ShapeMismatch, "unsupported sample shape in manifest");
    m.rows = static_cast<int>(shape[1]);
    m.cols = static_cast<int>(shape[2]);

    const std::size_t stride = 2 * static_cast<std::size_t>(m.rows) * m.cols;
    std::vector<float> inputs = read_floats_le(dir / "inputs.bin", m.sample_count * stride, "inputs.bin");
    std::vector<float> labels = read_floats_le(dir / "labels.bin", m.sample_count * 3, "labels.bin");

    const auto split = [&](Dataset &d, std::size_t first, std::size_t count) {
        d.rows = m.rows;
        d.cols = m.cols;
        d.inputs.assign(inputs.begin() + static_cast<std::ptrdiff_t>(first * stride),
                        inputs.begin() + static_cast<std::ptrdiff_t>((first + count) * stride));
        d.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(first * 3),
                        labels.begin() + static_cast<std::ptrdiff_t>((first + count) * 3));
    };
    split(out.train, 0, m.train_count);
    split(out.test, m.train_count, m.test_count());
    return out;
}

} // namespace rispos
