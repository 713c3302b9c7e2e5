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

#include "rispos/kernels.hpp"
#include "rispos/tensor.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace rispos::kernels
{

ConvGeometry ConvGeometry::make(int batch, int in_channels, int in_h, int in_w, int out_channels, int kernel,
                                int stride, int pad)
{
    if (batch < 1 || in_channels < 1 || in_h < 1 || in_w < 1 || out_channels < 1)
        throw ShapeError("conv2d: dimensions must be positive");
    if (kernel < 1 || stride < 1 || pad < 0)
        throw ShapeError("conv2d: invalid kernel/stride/padding");
    if (in_h + 2 * pad < kernel || in_w + 2 * pad < kernel)
        throw ShapeError("conv2d: kernel " + std::to_string(kernel) + " larger than padded input " +
                         std::to_string(in_h + 2 * pad) + "x" + std::to_string(in_w + 2 * pad));
    ConvGeometry g;
    g.batch = batch;
    g.in_channels = in_channels;
    g.in_h = in_h;
    g.in_w = in_w;
    g.out_channels = out_channels;
    g.kernel = kernel;
    g.stride = stride;
    g.pad = pad;
    g.out_h = (in_h + 2 * pad - kernel) / stride + 1;
    g.out_w = (in_w + 2 * pad - kernel) / stride + 1;
    return g;
}

std::vector<int> active_taps(const ConvGeometry &g)
{
    const auto hits = [&](int offset, int out_extent, int in_extent) {
        for (int o = 0; o < out_extent; ++o)
        {
            const int i = o * g.stride - g.pad + offset;
            if (i >= 0 && i < in_extent)
                return true;
        }
        return false;
    };
    std::vector<int> taps;
    for (int kh = 0; kh < g.kernel; ++kh)
        for (int kw = 0; kw < g.kernel; ++kw)
            if (hits(kh, g.out_h, g.in_h) && hits(kw, g.out_w, g.in_w))
                taps.push_back(kh * g.kernel + kw);
    return taps;
}

template <typename T>
void conv2d_forward_reference(const ConvGeometry &g, const T *input, const T *weight, const T *bias, T *output)
{
    const int k = g.kernel;
    for (int b = 0; b < g.batch; ++b)
        for (int co = 0; co < g.out_channels; ++co)
            for (int oh = 0; oh < g.out_h; ++oh)
                for (int ow = 0; ow < g.out_w; ++ow)
                {
                    T acc = bias ? bias[co] : T(0);
                    for (int ci = 0; ci < g.in_channels; ++ci)
                        for (int kh = 0; kh < k; ++kh)
                        {
                            const int ih = oh * g.stride - g.pad + kh;
                            if (ih < 0 || ih >= g.in_h)
                                continue;
                            for (int kw = 0; kw < k; ++kw)
                            {
                                const int iw = ow * g.stride - g.pad + kw;
                                if (iw < 0 || iw >= g.in_w)
                                    continue;
                                acc += input[((static_cast<std::size_t>(b) * g.in_channels + ci) * g.in_h + ih) *
                                                 g.in_w +
                                             iw] *
                                       weight[((static_cast<std::size_t>(co) * g.in_channels + ci) * k + kh) * k + kw];
                            }
                        }
                    output[((static_cast<std::size_t>(b) * g.out_channels + co) * g.out_h + oh) * g.out_w + ow] = acc;
                }
}

template <typename T>
void conv2d_backward_reference(const ConvGeometry &g, const T *input, const T *weight, const T *grad_output,
                               T *grad_input, T *grad_weight, T *grad_bias)
{
    const int k = g.kernel;
    std::fill(grad_input, grad_input + g.input_size(), T(0));
    std::fill(grad_weight, grad_weight + g.weight_size(), T(0));
    std::fill(grad_bias, grad_bias + g.out_channels, T(0));

    for (int b = 0; b < g.batch; ++b)
        for (int co = 0; co < g.out_channels; ++co)
            for (int oh = 0; oh < g.out_h; ++oh)
                for (int ow = 0; ow < g.out_w; ++ow)
                {
                    const T go =
                        grad_output[((static_cast<std::size_t>(b) * g.out_channels + co) * g.out_h + oh) * g.out_w +
                                    ow];
                    grad_bias[co] += go;
                    for (int ci = 0; ci < g.in_channels; ++ci)
                        for (int kh = 0; kh < k; ++kh)
                        {
                            const int ih = oh * g.stride - g.pad + kh;
                            if (ih < 0 || ih >= g.in_h)
                                continue;
                            for (int kw = 0; kw < k; ++kw)
                            {
                                const int iw = ow * g.stride - g.pad + kw;
                                if (iw < 0 || iw >= g.in_w)
                                    continue;
                                const std::size_t ii =
                                    ((static_cast<std::size_t>(b) * g.in_channels + ci) * g.in_h + ih) * g.in_w + iw;
                                const std::size_t wi =
                                    ((static_cast<std::size_t>(co) * g.in_channels + ci) * k + kh) * k + kw;
                                grad_weight[wi] += go * input[ii];
                                grad_input[ii] += go * weight[wi];
                            }
                        }
                }
}

template <typename T>
void gemm_nn(int M, int N, int K, const T *A, const T *B, T *C)
{
    constexpr int kBlock = 512;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < M; ++i)
    {
        T *c = C + static_cast<std::size_t>(i) * N;
        std::fill(c, c + N, T(0));
        for (int j0 = 0; j0 < N; j0 += kBlock)
        {
            const int j1 = std::min(N, j0 + kBlock);
            for (int kk = 0; kk < K; ++kk)
            {
                const T a = A[static_cast<std::size_t>(i) * K + kk];
                const T *b = B + static_cast<std::size_t>(kk) * N;
                for (int j = j0; j < j1; ++j)
                    c[j] += a * b[j];
            }
        }
    }
}

template <typename T>
static T dot_fixed(const T *a, const T *b, int n)
{
    // Eight independent lanes, combined in a fixed order.
    T acc[8] = {};
    int j = 0;
    for (; j + 8 <= n; j += 8)
        for (int l = 0; l < 8; ++l)
            acc[l] += a[j + l] * b[j + l];
    T tail = T(0);
    for (; j < n; ++j)
        tail += a[j] * b[j];
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

template <typename T>
void gemm_nt(int M, int K, int N, const T *A, const T *B, T *C)
{
#pragma omp parallel for schedule(static)
    for (int i = 0; i < M; ++i)
        for (int kk = 0; kk < K; ++kk)
            C[static_cast<std::size_t>(i) * K + kk] =
                dot_fixed(A + static_cast<std::size_t>(i) * N, B + static_cast<std::size_t>(kk) * N, N);
}

template <typename T>
void gemm_tn(int K, int N, int M, const T *A, const T *B, T *C)
{
#pragma omp parallel for schedule(static)
    for (int kk = 0; kk < K; ++kk)
    {
        T *c = C + static_cast<std::size_t>(kk) * N;
        std::fill(c, c + N, T(0));
        for (int i = 0; i < M; ++i)
        {
            const T a = A[static_cast<std::size_t>(i) * K + kk];
            const T *b = B + static_cast<std::size_t>(i) * N;
            for (int j = 0; j < N; ++j)
                c[j] += a * b[j];
        }
    }
}

template <typename T>
void conv2d_forward(const ConvGeometry &g, const T *input, const T *weight, const T *bias, T *output,
                    ConvWorkspace<T> &ws)
{
    ws.taps = active_taps(g);
    const int k = g.kernel;
    const int nt = static_cast<int>(ws.taps.size());
    const int rows = g.in_channels * nt;
    const int plane = g.out_h * g.out_w;
    const int cols = g.batch * plane;

    ws.columns.resize(static_cast<std::size_t>(rows) * cols);
    ws.packed_weight.resize(static_cast<std::size_t>(g.out_channels) * rows);
    ws.product.resize(static_cast<std::size_t>(g.out_channels) * cols);

#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r)
    {
        const int ci = r / nt;
        const int kh = ws.taps[r % nt] / k;
        const int kw = ws.taps[r % nt] % k;
        T *dst = ws.columns.data() + static_cast<std::size_t>(r) * cols;
        for (int b = 0; b < g.batch; ++b)
        {
            const T *src = input + (static_cast<std::size_t>(b) * g.in_channels + ci) * g.in_h * g.in_w;
            for (int oh = 0; oh < g.out_h; ++oh)
            {
                const int ih = oh * g.stride - g.pad + kh;
                for (int ow = 0; ow < g.out_w; ++ow)
                {
                    const int iw = ow * g.stride - g.pad + kw;
                    *dst++ = (ih >= 0 && ih < g.in_h && iw >= 0 && iw < g.in_w)
                                 ? src[static_cast<std::size_t>(ih) * g.in_w + iw]
                                 : T(0);
                }
            }
        }
    }

    for (int co = 0; co < g.out_channels; ++co)
        for (int ci = 0; ci < g.in_channels; ++ci)
            for (int t = 0; t < nt; ++t)
                ws.packed_weight[static_cast<std::size_t>(co) * rows + ci * nt + t] =
                    weight[(static_cast<std::size_t>(co) * g.in_channels + ci) * k * k + ws.taps[t]];

    gemm_nn(g.out_channels, cols, rows, ws.packed_weight.data(), ws.columns.data(), ws.product.data());

#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < g.batch; ++b)
        for (int co = 0; co < g.out_channels; ++co)
        {
            const T bv = bias ? bias[co] : T(0);
            const T *src = ws.product.data() + static_cast<std::size_t>(co) * cols + static_cast<std::size_t>(b) * plane;
            T *dst = output + (static_cast<std::size_t>(b) * g.out_channels + co) * plane;
            for (int p = 0; p < plane; ++p)
                dst[p] = src[p] + bv;
        }
}

template <typename T>
void conv2d_backward(const ConvGeometry &g, const T *weight, const T *grad_output, T *grad_input, T *grad_weight,
                     T *grad_bias, ConvWorkspace<T> &ws)
{
    (void)weight; // packed copy lives in the workspace
    const int k = g.kernel;
    const int nt = static_cast<int>(ws.taps.size());
    const int rows = g.in_channels * nt;
    const int plane = g.out_h * g.out_w;
    const int cols = g.batch * plane;

    // Reorder grad_output [B, Cout, P] into [Cout, B * P]; bias gradient sums in b-then-p order.
    std::vector<T> &dprod = ws.product;
    dprod.resize(static_cast<std::size_t>(g.out_channels) * cols);
#pragma omp parallel for schedule(static)
    for (int co = 0; co < g.out_channels; ++co)
    {
        T acc = T(0);
        for (int b = 0; b < g.batch; ++b)
        {
            const T *src = grad_output + (static_cast<std::size_t>(b) * g.out_channels + co) * plane;
            T *dst = dprod.data() + static_cast<std::size_t>(co) * cols + static_cast<std::size_t>(b) * plane;
            for (int p = 0; p < plane; ++p)
            {
                dst[p] = src[p];
                acc += src[p];
            }
        }
        grad_bias[co] = acc;
    }

    std::vector<T> packed_grad(static_cast<std::size_t>(g.out_channels) * rows);
    gemm_nt(g.out_channels, rows, cols, dprod.data(), ws.columns.data(), packed_grad.data());
    std::fill(grad_weight, grad_weight + g.weight_size(), T(0));
    for (int co = 0; co < g.out_channels; ++co)
        for (int ci = 0; ci < g.in_channels; ++ci)
            for (int t = 0; t < nt; ++t)
                grad_weight[(static_cast<std::size_t>(co) * g.in_channels + ci) * k * k + ws.taps[t]] =
                    packed_grad[static_cast<std::size_t>(co) * rows + ci * nt + t];

    if (!grad_input)
        return;

    std::vector<T> dcols(static_cast<std::size_t>(rows) * cols);
    gemm_tn(rows, cols, g.out_channels, ws.packed_weight.data(), dprod.data(), dcols.data());

    std::fill(grad_input, grad_input + g.input_size(), T(0));
#pragma omp parallel for collapse(2) schedule(static)
    for (int ci = 0; ci < g.in_channels; ++ci)
        for (int b = 0; b < g.batch; ++b)
        {
            T *dst = grad_input + (static_cast<std::size_t>(b) * g.in_channels + ci) * g.in_h * g.in_w;
            for (int t = 0; t < nt; ++t)
            {
                const int kh = ws.taps[t] / k;
                const int kw = ws.taps[t] % k;
                const T *src = dcols.data() + static_cast<std::size_t>(ci * nt + t) * cols +
                               static_cast<std::size_t>(b) * plane;
                for (int oh = 0; oh < g.out_h; ++oh)
                {
                    const int ih = oh * g.stride - g.pad + kh;
                    if (ih < 0 || ih >= g.in_h)
                        continue;
                    for (int ow = 0; ow < g.out_w; ++ow)
                    {
                        const int iw = ow * g.stride - g.pad + kw;
                        if (iw >= 0 && iw < g.in_w)
                            dst[static_cast<std::size_t>(ih) * g.in_w + iw] += src[oh * g.out_w + ow];
                    }
                }
            }
        }
}

PoolGeometry PoolGeometry::make(int batch, int channels, int in_h, int in_w, int window, int stride, int pad)
{
    if (batch < 1 || channels < 1 || in_h < 1 || in_w < 1)
        throw ShapeError("maxpool2d: dimensions must be positive");
    if (window < 1 || stride < 1 || pad < 0 || pad >= window)
        throw ShapeError("maxpool2d: invalid window/stride/padding");
    if (in_h + 2 * pad < window || in_w + 2 * pad < window)
        throw ShapeError("maxpool2d: window " + std::to_string(window) + " larger than input " +
                         std::to_string(in_h) + "x" + std::to_string(in_w));
    PoolGeometry g;
    g.batch = batch;
    g.channels = channels;
    g.in_h = in_h;
    g.in_w = in_w;
    g.window = window;
    g.stride = stride;
    g.pad = pad;
    g.out_h = (in_h + 2 * pad - window) / stride + 1;
    g.out_w = (in_w + 2 * pad - window) / stride + 1;
    return g;
}

template <typename T>
static void maxpool_plane(const PoolGeometry &g, const T *in, T *out, int *argmax, std::size_t in_offset)
{
    for (int oh = 0; oh < g.out_h; ++oh)
        for (int ow = 0; ow < g.out_w; ++ow)
        {
            T best = -std::numeric_limits<T>::infinity();
            int best_idx = -1;
            for (int kh = 0; kh < g.window; ++kh)
            {
                const int ih = oh * g.stride - g.pad + kh;
                if (ih < 0 || ih >= g.in_h)
                    continue;
                for (int kw = 0; kw < g.window; ++kw)
                {
                    const int iw = ow * g.stride - g.pad + kw;
                    if (iw < 0 || iw >= g.in_w)
                        continue;
                    const int idx = ih * g.in_w + iw;
                    if (best_idx < 0 || in[idx] > best)
                    {
                        best = in[idx];
                        best_idx = idx;
                    }
                }
            }
            out[oh * g.out_w + ow] = best;
            argmax[oh * g.out_w + ow] = static_cast<int>(in_offset) + best_idx;
        }
}

template <typename T>
void maxpool_forward(const PoolGeometry &g, const T *input, T *output, int *argmax)
{
    const int planes = g.batch * g.channels;
    const std::size_t in_plane = static_cast<std::size_t>(g.in_h) * g.in_w;
    const std::size_t out_plane = static_cast<std::size_t>(g.out_h) * g.out_w;
#pragma omp parallel for schedule(static)
    for (int pl = 0; pl < planes; ++pl)
        maxpool_plane(g, input + pl * in_plane, output + pl * out_plane, argmax + pl * out_plane, pl * in_plane);
}

template <typename T>
void maxpool_forward_reference(const PoolGeometry &g, const T *input, T *output, int *argmax)
{
    const std::size_t in_plane = static_cast<std::size_t>(g.in_h) * g.in_w;
    const std::size_t out_plane = static_cast<std::size_t>(g.out_h) * g.out_w;
    for (int pl = 0; pl < g.batch * g.channels; ++pl)
        maxpool_plane(g, input + pl * in_plane, output + pl * out_plane, argmax + pl * out_plane, pl * in_plane);
}

#define RISPOS_INSTANTIATE(T)                                                                                          \
    template void conv2d_forward_reference<T>(const ConvGeometry &, const T *, const T *, const T *, T *);            \
    template void conv2d_backward_reference<T>(const ConvGeometry &, const T *, const T *, const T *, T *, T *, T *); \
    template void conv2d_forward<T>(const ConvGeometry &, const T *, const T *, const T *, T *, ConvWorkspace<T> &);  \
    template void conv2d_backward<T>(const ConvGeometry &, const T *, const T *, T *, T *, T *, ConvWorkspace<T> &);   \
    template void gemm_nn<T>(int, int, int, const T *, const T *, T *);                                                \
    template void gemm_nt<T>(int, int, int, const T *, const T *, T *);                                                \
    template void gemm_tn<T>(int, int, int, const T *, const T *, T *);                                                \
    template void maxpool_forward<T>(const PoolGeometry &, const T *, T *, int *);                                     \
    template void maxpool_forward_reference<T>(const PoolGeometry &, const T *, T *, int *);

RISPOS_INSTANTIATE(float)
RISPOS_INSTANTIATE(double)

#undef RISPOS_INSTANTIATE

} // namespace rispos::kernels
