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

#ifndef RISPOS_CHANNEL_HPP
#define RISPOS_CHANNEL_HPP

#include "rispos/geometry.hpp"

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rispos
{

using ComplexVector = std::vector<cplx>;

// Dense row-major complex matrix.
class ComplexMatrix
{
public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols);

    static ComplexMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    cplx &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const cplx &operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<cplx> data() { return data_; }
    std::span<const cplx> data() const { return data_; }

    // Diagonal matrices (the RIS phase-shift case) take a cheaper path in stcrv().
    bool is_diagonal() const;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<cplx> data_;
};

class DimensionError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// Array response e (x) a, entry (n, m) at index n * count_b + m, where
//   e[n] = exp(-j 2 pi n d cos(elevation) / lambda)
//   a[m] = exp(-j 2 pi m d sin(elevation) cos(azimuth) / lambda)
ComplexVector upa_response(const UpaConfig &array, const AnglePair &angles, double wavelength);

// g = sum_p alpha_p a_ris(arrival_p)
ComplexVector mu_ris_channel(std::span<const MuRisPath> paths, const UpaConfig &ris, double wavelength);

// H = sum_j beta_j a_ap(arrival_j) a_ris(departure_j)^H, shape (ap.size() x ris.size()).
ComplexMatrix ris_ap_channel(std::span<const RisApPath> paths, const UpaConfig &ris, const UpaConfig &ap,
                             double wavelength);

// h = H psi g
ComplexVector stcrv(const ComplexMatrix &H, const ComplexMatrix &psi, std::span<const cplx> g);

// Diagonal RIS phase matrix with the given per-element phases (radians).
ComplexMatrix phase_shift_matrix(std::span<const double> phases);

double dbm_to_watts(double dbm);

// y = sqrt(p) s h + n, n ~ CN(0, noise_power I)
ComplexVector received_signal(std::span<const cplx> h, double tx_power_w, cplx pilot, double noise_power_w,
                              Rng &rng);

// h_hat = 1/(tau sqrt(p)) sum_t y(t) conj(s(t))
ComplexVector estimate_stcrv(std::span<const ComplexVector> observations, std::span<const cplx> pilots,
                             double tx_power_w);

} // namespace rispos

#endif
