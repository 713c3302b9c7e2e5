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

#ifndef RISPOS_KERNELS_HPP
#define RISPOS_KERNELS_HPP

// Raw compute kernels behind the layers. Each hot kernel exists twice: an
// OpenMP-parallel version used by the layers, and a serial reference kept
// for tests and the benchmark. Parallel versions partition work so that every
// output element is reduced in a fixed order regardless of thread count.

#include <cstddef>
#include <vector>

namespace rispos::kernels
{

struct ConvGeometry
{
    int batch = 1;
    int in_channels = 1, in_h = 1, in_w = 1;
    int out_channels = 1;
    int kernel = 1, stride = 1, pad = 0;
    int out_h = 1, out_w = 1;

    // Output extent follows floor((in + 2 pad - k) / stride) + 1; throws
    // ShapeError when the padded input is smaller than the kernel.
    static ConvGeometry make(int batch, int in_channels, int in_h, int in_w, int out_channels, int kernel, int stride,
                             int pad);

    std::size_t input_size() const { return static_cast<std::size_t>(batch) * in_channels * in_h * in_w; }
    std::size_t output_size() const { return static_cast<std::size_t>(batch) * out_channels * out_h * out_w; }
    std::size_t weight_size() const { return static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel; }
};

// Kernel taps (kh, kw) that touch at least one in-bounds input pixel. Taps
// that only ever see padding contribute exactly zero and are skipped.
std::vector<int> active_taps(const ConvGeometry &g);

// ---- conv2d: cross-correlation with zero padding ----
// input [B, Cin, H, W], weight [Cout, Cin, k, k], bias [Cout], output [B, Cout, H', W']

template <typename T>
void conv2d_forward_reference(const ConvGeometry &g, const T *input, const T *weight, const T *bias, T *output);

// grad_* buffers are overwritten.
template <typename T>
void conv2d_backward_reference(const ConvGeometry &g, const T *input, const T *weight, const T *grad_output,
                               T *grad_input, T *grad_weight, T *grad_bias);

// Scratch space reused between the forward and backward passes of one layer.
template <typename T>
struct ConvWorkspace
{
    std::vector<int> taps;
    std::vector<T> columns;       // [Cin * taps, B * H' * W']
    std::vector<T> packed_weight; // [Cout, Cin * taps]
    std::vector<T> product;       // [Cout, B * H' * W']
};

// im2col + GEMM. The workspace keeps the column matrix for backward.
template <typename T>
void conv2d_forward(const ConvGeometry &g, const T *input, const T *weight, const T *bias, T *output,
                    ConvWorkspace<T> &ws);

// Requires the workspace filled by conv2d_forward on the same input.
template <typename T>
void conv2d_backward(const ConvGeometry &g, const T *weight, const T *grad_output, T *grad_input, T *grad_weight,
                     T *grad_bias, ConvWorkspace<T> &ws);

// ---- GEMM, row-major ----
// C[M, N] = A[M, K] * B[K, N]
template <typename T>
void gemm_nn(int M, int N, int K, const T *A, const T *B, T *C);
// C[M, K] = A[M, N] * B[K, N]^T
template <typename T>
void gemm_nt(int M, int K, int N, const T *A, const T *B, T *C);
// C[K, N] = A[M, K]^T * B[M, N]
template <typename T>
void gemm_tn(int K, int N, int M, const T *A, const T *B, T *C);

// ---- max pooling with implicit -inf padding ----
struct PoolGeometry
{
    int batch = 1, channels = 1, in_h = 1, in_w = 1;
    int window = 1, stride = 1, pad = 0;
    int out_h = 1, out_w = 1;

    static PoolGeometry make(int batch, int channels, int in_h, int in_w, int window, int stride, int pad);
    std::size_t output_size() const { return static_cast<std::size_t>(batch) * channels * out_h * out_w; }
};

// argmax receives, per output, the flat input index of the first maximum in row-major window order.
template <typename T>
void maxpool_forward(const PoolGeometry &g, const T *input, T *output, int *argmax);
template <typename T>
void maxpool_forward_reference(const PoolGeometry &g, const T *input, T *output, int *argmax);

} // namespace rispos::kernels

#endif
