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

#include "rispos/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rispos
{

Rng make_rng(std::uint64_t seed, std::uint64_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

Position3D operator+(const Position3D &a, const Position3D &b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
Position3D operator-(const Position3D &a, const Position3D &b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
Position3D operator*(double s, const Position3D &a) { return {s * a.x, s * a.y, s * a.z}; }
double dot(const Position3D &a, const Position3D &b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
double norm(const Position3D &a) { return std::sqrt(dot(a, a)); }
double distance(const Position3D &a, const Position3D &b) { return norm(a - b); }

Position3D unit_vector(Axis axis)
{
    switch (axis)
    {
    case Axis::X:
        return {1.0, 0.0, 0.0};
    case Axis::Y:
        return {0.0, 1.0, 0.0};
    case Axis::Z:
        return {0.0, 0.0, 1.0};
    }
    throw std::logic_error("unknown axis");
}

static bool finite(const Position3D &p)
{
    return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

void UpaConfig::validate() const
{
    if (count_a < 1 || count_b < 1)
        throw ConfigError("array element counts must be >= 1");
    if (!(spacing > 0.0) || !std::isfinite(spacing))
        throw ConfigError("array spacing must be > 0");
    if (axis_a == axis_b)
        throw ConfigError("array axes must differ");
    if (!finite(center))
        throw ConfigError("array center must be finite");
}

bool Box::contains(const Position3D &p) const
{
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
}

void SceneConfig::validate() const
{
    if (!(wavelength > 0.0) || !std::isfinite(wavelength))
        throw ConfigError("wavelength must be > 0");
    ap.validate();
    ris.validate();
    if (n_paths_mu_ris < 1)
        throw ConfigError("n_paths_mu_ris must be >= 1");
    if (n_paths_ris_ap < 1)
        throw ConfigError("n_paths_ris_ap must be >= 1");
    if (scatter_bounds.empty())
        throw ConfigError("scatter_bounds must be a nonempty box");
    if (pilot_length < 1)
        throw ConfigError("pilot_length must be >= 1");
    if (!std::isfinite(tx_power_dbm) || !std::isfinite(noise_power_dbm))
        throw ConfigError("powers must be finite");
}

AnglePair direction_angles(const Position3D &from, const Position3D &to, const UpaConfig &array)
{
    const Position3D delta = to - from;
    const double len = norm(delta);
    if (!(len > 0.0))
        throw std::invalid_argument("degenerate direction");
    const Position3D k = (1.0 / len) * delta;

    AnglePair out;
    out.elevation = std::acos(std::clamp(dot(k, unit_vector(array.axis_a)), -1.0, 1.0));
    const double s = std::sin(out.elevation);
    if (s < 1e-9)
        out.azimuth = std::numbers::pi / 2.0;
    else
        out.azimuth = std::acos(std::clamp(dot(k, unit_vector(array.axis_b)) / s, -1.0, 1.0));
    return out;
}

cplx free_space_gain(double distance_m, double wavelength)
{
    const double phase = -2.0 * std::numbers::pi * distance_m / wavelength;
    return wavelength / (4.0 * std::numbers::pi * distance_m) * std::polar(1.0, phase);
}

namespace
{

Position3D draw_in_box(const Box &box, Rng &rng)
{
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double a = u01(rng), b = u01(rng), c = u01(rng);
    return {box.lo.x + a * (box.hi.x - box.lo.x), box.lo.y + b * (box.hi.y - box.lo.y),
            box.lo.z + c * (box.hi.z - box.lo.z)};
}

cplx draw_reflection(Rng &rng)
{
    std::uniform_real_distribution<double> mag(kReflectionMin, kReflectionMax);
    std::uniform_real_distribution<double> ph(0.0, 2.0 * std::numbers::pi);
    const double m = mag(rng);
    return std::polar(m, ph(rng));
}

} // namespace

std::vector<MuRisPath> synth_mu_ris_paths(const SceneConfig &scene, const Position3D &mu, Rng &rng)
{
    if (scene.n_paths_mu_ris < 1)
        throw ConfigError("n_paths_mu_ris must be >= 1");
    if (!finite(mu) || !scene.scatter_bounds.contains(mu))
        throw std::invalid_argument("MU position outside scene bounds");

    const auto &ris = scene.ris;
    std::vector<MuRisPath> paths;
    paths.reserve(scene.n_paths_mu_ris);

    const double direct = distance(mu, ris.center);
    paths.push_back({free_space_gain(direct, scene.wavelength), direction_angles(ris.center, mu, ris)});

    for (int p = 1; p < scene.n_paths_mu_ris; ++p)
    {
        const Position3D scatterer = draw_in_box(scene.scatter_bounds, rng);
        const cplx reflection = draw_reflection(rng);
        const double total = distance(mu, scatterer) + distance(scatterer, ris.center);
        paths.push_back({free_space_gain(total, scene.wavelength) * reflection,
                         direction_angles(ris.center, scatterer, ris)});
    }
    return paths;
}

std::vector<RisApPath> synth_ris_ap_paths(const SceneConfig &scene, Rng &rng)
{
    if (scene.n_paths_ris_ap < 1)
        throw ConfigError("n_paths_ris_ap must be >= 1");

    const auto &ris = scene.ris;
    const auto &ap = scene.ap;
    std::vector<RisApPath> paths;
    paths.reserve(scene.n_paths_ris_ap);

    paths.push_back({free_space_gain(distance(ris.center, ap.center), scene.wavelength),
                     direction_angles(ris.center, ap.center, ris), direction_angles(ap.center, ris.center, ap)});

    for (int j = 1; j < scene.n_paths_ris_ap; ++j)
    {
        const Position3D scatterer = draw_in_box(scene.scatter_bounds, rng);
        const cplx reflection = draw_reflection(rng);
        const double total = distance(ris.center, scatterer) + distance(scatterer, ap.center);
        paths.push_back({free_space_gain(total, scene.wavelength) * reflection,
                         direction_angles(ris.center, scatterer, ris), direction_angles(ap.center, scatterer, ap)});
    }
    return paths;
}

std::vector<Position3D> grid_positions(double length_m, double width_m, double spacing_m,
                                       std::span<const double> heights_m, const Position3D &origin)
{
    if (!(spacing_m > 0.0))
        throw std::invalid_argument("grid spacing must be > 0");
    if (length_m < 0.0 || width_m < 0.0)
        throw std::invalid_argument("grid extents must be >= 0");

    // Small tolerance so that e.g. 9.6 / 0.2 counts 48 steps despite rounding.
    const auto steps = [spacing_m](double extent) {
        return static_cast<long>(std::floor(extent / spacing_m + 1e-9));
    };
    const long ni = steps(length_m) + 1;
    const long nj = steps(width_m) + 1;

    std::vector<Position3D> out;
    out.reserve(static_cast<std::size_t>(ni * nj) * heights_m.size());
    for (double h : heights_m)
        for (long i = 0; i < ni; ++i)
            for (long j = 0; j < nj; ++j)
                out.push_back({origin.x + static_cast<double>(i) * spacing_m,
                               origin.y + static_cast<double>(j) * spacing_m, origin.z + h});
    return out;
}

} // namespace rispos
