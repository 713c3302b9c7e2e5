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

#ifndef RISPOS_GEOMETRY_HPP
#define RISPOS_GEOMETRY_HPP

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace rispos
{

using cplx = std::complex<double>;

// Engine used for every seeded draw in the library. Streams for independent
// workers are derived with make_rng(seed, stream).
using Rng = std::mt19937_64;
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

// Raised for invalid scene or network configuration values.
class ConfigError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

struct Position3D
{
    double x = 0.0, y = 0.0, z = 0.0;

    friend bool operator==(const Position3D &, const Position3D &) = default;
};

Position3D operator+(const Position3D &a, const Position3D &b);
Position3D operator-(const Position3D &a, const Position3D &b);
Position3D operator*(double s, const Position3D &a);
double dot(const Position3D &a, const Position3D &b);
double norm(const Position3D &a);
double distance(const Position3D &a, const Position3D &b);

enum class Axis
{
    X,
    Y,
    Z
};

Position3D unit_vector(Axis axis);

// Uniform planar array. Element (n, m) sits at center + n*spacing*axis_a + m*spacing*axis_b
// (phase reference at element 0); n in [0, count_a), m in [0, count_b).
struct UpaConfig
{
    int count_a = 16;
    int count_b = 16;
    double spacing = 0.0;
    Position3D center;
    Axis axis_a = Axis::Y;
    Axis axis_b = Axis::Z;

    int size() const { return count_a * count_b; }
    void validate() const;
};

// Elevation is measured from axis_a, azimuth from axis_b within the plane
// orthogonal to axis_a. Both lie in [0, pi].
struct AnglePair
{
    double elevation = 0.0;
    double azimuth = 0.0;
};

struct MuRisPath
{
    cplx gain;
    AnglePair arrival_at_ris;
};

struct RisApPath
{
    cplx gain;
    AnglePair departure_at_ris;
    AnglePair arrival_at_ap;
};

struct Box
{
    Position3D lo, hi;

    bool contains(const Position3D &p) const;
    bool empty() const { return !(lo.x < hi.x && lo.y < hi.y && lo.z < hi.z); }
};

struct SceneConfig
{
    double wavelength = 0.0107; // 28 GHz
    UpaConfig ap{16, 16, 0.0107 / 2.0, {-10.0, -5.0, 2.5}, Axis::X, Axis::Z};
    UpaConfig ris{16, 16, 0.0107 / 2.0, {-5.10, -1.43, 2.0}, Axis::Y, Axis::Z};
    int n_paths_mu_ris = 1;
    int n_paths_ris_ap = 32;
    Box scatter_bounds{{-16.0, -6.0, 0.0}, {-5.15, 7.0, 3.0}};
    double tx_power_dbm = 10.0;
    double noise_power_dbm = -129.51; // about 20 dB estimation SNR at the grid center
    int pilot_length = 8;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

// Single-bounce reflection factors are drawn with magnitude in this range.
inline constexpr double kReflectionMin = 0.1;
inline constexpr double kReflectionMax = 0.5;

AnglePair direction_angles(const Position3D &from, const Position3D &to, const UpaConfig &array);

// Free-space gain (lambda / 4 pi d) exp(-j 2 pi d / lambda).
cplx free_space_gain(double distance_m, double wavelength);

// Path 1 is the direct MU->RIS path; the remaining paths bounce off scatterers
// drawn from `rng`. Passing identically seeded engines for every MU keeps the
// scatterer layout fixed across the scene.
std::vector<MuRisPath> synth_mu_ris_paths(const SceneConfig &scene, const Position3D &mu, Rng &rng);
std::vector<RisApPath> synth_ris_ap_paths(const SceneConfig &scene, Rng &rng);

// Ordering: height outermost, then the length index i, then the width index j.
std::vector<Position3D> grid_positions(double length_m, double width_m, double spacing_m,
                                       std::span<const double> heights_m, const Position3D &origin);

} // namespace rispos

#endif
