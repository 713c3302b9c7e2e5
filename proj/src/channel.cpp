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

#include "rispos/channel.hpp"

#include <cmath>
#include <numbers>

namespace rispos
{

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols)
{
    if (rows == 0 || cols == 0)
        throw DimensionError("matrix dimensions must be positive");
}

ComplexMatrix ComplexMatrix::identity(std::size_t n)
{
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        m(i, i) = 1.0;
    return m;
}

bool ComplexMatrix::is_diagonal() const
{
    if (rows_ != cols_)
        return false;
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c)
            if (r != c && data_[r * cols_ + c] != cplx{})
                return false;
    return true;
}

ComplexVector upa_response(const UpaConfig &array, const AnglePair &angles, double wavelength)
{
    if (!(wavelength > 0.0))
        throw std::invalid_argument("wavelength must be > 0");

    const double k = -2.0 * std::numbers::pi * array.spacing / wavelength;
    const double u = std::cos(angles.elevation);
    const double v = std::sin(angles.elevation) * std::cos(angles.azimuth);

    ComplexVector a(static_cast<std::size_t>(array.count_b));
    for (int m = 0; m < array.count_b; ++m)
        a[m] = std::polar(1.0, k * m * v);

    ComplexVector out(static_cast<std::size_t>(array.size()));
    for (int n = 0; n < array.count_a; ++n)
    {
        const cplx e = std::polar(1.0, k * n * u);
        cplx *row = out.data() + static_cast<std::size_t>(n) * array.count_b;
        for (int m = 0; m < array.count_b; ++m)
            row[m] = e * a[m];
    }
    return out;
}

ComplexVector mu_ris_channel(std::span<const MuRisPath> paths, const UpaConfig &ris, double wavelength)
{
    if (paths.empty())
        throw std::invalid_argument("mu_ris_channel: empty path list");

    ComplexVector g(static_cast<std::size_t>(ris.size()));
    for (const auto &path : paths)
    {
        const ComplexVector resp = upa_response(ris, path.arrival_at_ris, wavelength);
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += path.gain * resp[i];
    }
    return g;
}

ComplexMatrix ris_ap_channel(std::span<const RisApPath> paths, const UpaConfig &ris, const UpaConfig &ap,
                             double wavelength)
{
    if (paths.empty())
        throw std::invalid_argument("ris_ap_channel: empty path list");

    const std::size_t M = static_cast<std::size_t>(ap.size());
    const std::size_t N = static_cast<std::size_t>(ris.size());
    ComplexMatrix H(M, N);
    std::vector<cplx> dep_conj(N);

    for (const auto &path : paths)
    {
        const ComplexVector arr = upa_response(ap, path.arrival_at_ap, wavelength);
        const ComplexVector dep = upa_response(ris, path.departure_at_ris, wavelength);
        for (std::size_t c = 0; c < N; ++c)
            dep_conj[c] = std::conj(dep[c]);

#pragma omp parallel for schedule(static)
        for (std::size_t r = 0; r < M; ++r)
        {
            const cplx scale = path.gain * arr[r];
            cplx *row = &H(r, 0);
            for (std::size_t c = 0; c < N; ++c)
                row[c] += scale * dep_conj[c];
        }
    }
    return H;
}

ComplexVector stcrv(const ComplexMatrix &H, const ComplexMatrix &psi, std::span<const cplx> g)
{
    if (psi.rows() != psi.cols())
        throw DimensionError("stcrv: psi must be square, got " + std::to_string(psi.rows()) + "x" +
                             std::to_string(psi.cols()));
    if (H.cols() != psi.rows())
        throw DimensionError("stcrv: H (" + std::to_string(H.rows()) + "x" + std::to_string(H.cols()) +
                             ") does not conform with psi (" + std::to_string(psi.rows()) + "x" +
                             std::to_string(psi.cols()) + ")");
    if (psi.cols() != g.size())
        throw DimensionError("stcrv: psi (" + std::to_string(psi.rows()) + "x" + std::to_string(psi.cols()) +
                             ") does not conform with g (" + std::to_string(g.size()) + ")");

    const std::size_t N = psi.rows();
    std::vector<cplx> pg(N);
    if (psi.is_diagonal())
    {
        for (std::size_t i = 0; i < N; ++i)
            pg[i] = psi(i, i) * g[i];
    }
    else
    {
        for (std::size_t r = 0; r < N; ++r)
        {
            cplx acc{};
            for (std::size_t c = 0; c < N; ++c)
                acc += psi(r, c) * g[c];
            pg[r] = acc;
        }
    }

    ComplexVector h(H.rows());
#pragma omp parallel for schedule(static)
    for (std::size_t r = 0; r < H.rows(); ++r)
    {
        const cplx *row = &H(r, 0);
        cplx acc{};
        for (std::size_t c = 0; c < N; ++c)
            acc += row[c] * pg[c];
        h[r] = acc;
    }
    return h;
}

ComplexMatrix phase_shift_matrix(std::span<const double> phases)
{
    ComplexMatrix psi(phases.size(), phases.size());
    for (std::size_t i = 0; i < phases.size(); ++i)
        psi(i, i) = std::polar(1.0, phases[i]);
    return psi;
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

ComplexVector received_signal(std::span<const cplx> h, double tx_power_w, cplx pilot, double noise_power_w,
                              Rng &rng)
{
    if (tx_power_w < 0.0 || noise_power_w < 0.0)
        throw std::invalid_argument("received_signal: powers must be >= 0");
    if (std::abs(std::abs(pilot) - 1.0) > 1e-9)
        throw std::invalid_argument("received_signal: pilot must have unit modulus");

    const cplx scale = std::sqrt(tx_power_w) * pilot;
    ComplexVector y(h.size());
    if (noise_power_w == 0.0)
    {
        for (std::size_t i = 0; i < h.size(); ++i)
            y[i] = scale * h[i];
        return y;
    }

    std::normal_distribution<double> gauss(0.0, std::sqrt(noise_power_w / 2.0));
    for (std::size_t i = 0; i < h.size(); ++i)
    {
        const double re = gauss(rng);
        const double im = gauss(rng);
        y[i] = scale * h[i] + cplx(re, im);
    }
    return y;
}

ComplexVector estimate_stcrv(std::span<const ComplexVector> observations, std::span<const cplx> pilots,
                             double tx_power_w)
{
    if (observations.empty() || pilots.empty())
        throw std::invalid_argument("estimate_stcrv: empty observation sequence");
    if (observations.size() != pilots.size())
        throw std::invalid_argument("estimate_stcrv: observation and pilot counts differ");
    if (!(tx_power_w > 0.0))
        throw std::invalid_argument("estimate_stcrv: tx power must be > 0");

    const std::size_t len = observations.front().size();
    ComplexVector acc(len);
    for (std::size_t t = 0; t < observations.size(); ++t)
    {
        if (observations[t].size() != len)
            throw DimensionError("estimate_stcrv: observation lengths differ");
        if (std::abs(std::abs(pilots[t]) - 1.0) > 1e-9)
            throw std::invalid_argument("estimate_stcrv: pilot must have unit modulus");
        const cplx s = std::conj(pilots[t]);
        for (std::size_t i = 0; i < len; ++i)
            acc[i] += observations[t][i] * s;
    }
    const double scale = 1.0 / (static_cast<double>(observations.size()) * std::sqrt(tx_power_w));
    for (auto &v : acc)
        v *= scale;
    return acc;
}

} // namespace rispos
