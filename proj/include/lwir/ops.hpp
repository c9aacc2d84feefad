#pragma once

#include <span>
#include <vector>

#include "lwir/tensor.hpp"

namespace lwir {

// Primitive operators. All of them are deterministic: a fixed summation
// order is used per output element (input-channel major, then kernel rows,
// then kernel columns), accumulating in 32-bit floats.

// Cross-correlation (no kernel flip). Weight layout [N, M/g, kh, kw].
// With ZeroSame padding the sampled input offset for tap i is
// dilation * (i - floor(k/2)) relative to y*stride.
Tensor conv2d(const Tensor& x, const Tensor& w, const ConvParams& p);

// Depthwise 3x3 on M channels followed by a 1x1 pointwise map to N channels.
// w_dw: [M, 1, 3, 3], w_pw: [N, M, 1, 1]. Identical to composing conv2d twice.
Tensor depthwise_separable(const Tensor& x, const Tensor& w_dw, const Tensor& w_pw);

// Reshape channels [g, C/g] -> transpose -> flatten. Output channel j*g + i
// reads input channel i*(C/g) + j. Pure permutation.
Tensor channel_shuffle(const Tensor& x, int64_t groups);

// out(c, y, x) = in(c*r^2 + (y%r)*r + (x%r), y/r, x/r); shape [B, C/r^2, H*r, W*r].
Tensor pixel_shuffle(const Tensor& x, int64_t r);

// Exact inverse of pixel_shuffle under the same indexing convention.
Tensor space_to_depth(const Tensor& x, int64_t r);

// Half-pixel-center bilinear resize with border clamping, per channel.
// Interpolation itself runs in double so constants survive bit-exactly and
// outputs stay inside [min(in), max(in)].
Tensor bilinear_resize(const Tensor& x, int64_t out_h, int64_t out_w);

// Fractionally strided convolution. Weight layout [M, N, k, k].
// out(n, y, x) = sum w[m][n][a][b] * in[m][(y+pad-a)/r][(x+pad-b)/r]
// over taps where the division is exact and in range.
// Output spatial size = (in - 1) * stride + k - 2 * pad.
Tensor transposed_conv2d(const Tensor& x, const Tensor& w, int64_t stride, int64_t pad);

Tensor relu(const Tensor& x);

// Per-channel affine y = scale[c] * x + shift[c] (inference-form batch norm).
Tensor bn_inference(const Tensor& x, std::span<const float> scale, std::span<const float> shift);

// Stack along the channel axis, operand order preserved.
Tensor concat_channels(const std::vector<const Tensor*>& xs);

Tensor add(const Tensor& x, const Tensor& y);

// Spatial output size of a convolution along one axis.
int64_t conv_out_extent(int64_t in, int64_t kernel, int64_t stride, int64_t dilation, PadMode pad);

// Thread cap used by conv kernels (1 = sequential). Set from LWIR_THREADS.
void set_thread_cap(int cap);
int thread_cap();

}  // namespace lwir
