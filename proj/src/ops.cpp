#include "lwir/ops.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <thread>

namespace lwir {

namespace {

std::atomic<int> g_thread_cap{1};

// Runs fn(lo, hi) over [0, count) split across the configured thread cap.
// Each worker owns a disjoint slice, so results do not depend on the split.
void parallel_ranges(int64_t count, const std::function<void(int64_t, int64_t)>& fn) {
    int cap = g_thread_cap.load();
    if (cap <= 1 || count < 4) {
        fn(0, count);
        return;
    }
    int workers = static_cast<int>(std::min<int64_t>(cap, count));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    int64_t chunk = (count + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
        int64_t lo = t * chunk;
        int64_t hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(fn, lo, hi);
    }
    for (auto& th : pool) th.join();
}

}  // namespace

void set_thread_cap(int cap) { g_thread_cap.store(cap < 1 ? 1 : cap); }
int thread_cap() { return g_thread_cap.load(); }

int64_t conv_out_extent(int64_t in, int64_t kernel, int64_t stride, int64_t dilation, PadMode pad) {
    if (pad == PadMode::ZeroSame) return (in + stride - 1) / stride;
    int64_t span = dilation * (kernel - 1) + 1;
    if (in < span) throw Error("valid conv: input extent " + std::to_string(in) +
                               " smaller than dilated kernel span " + std::to_string(span));
    return (in - span) / stride + 1;
}

Tensor conv2d(const Tensor& x, const Tensor& w, const ConvParams& p) {
    p.validate();
    if (x.shape.c != p.in_channels)
        throw Error("conv2d: input has " + std::to_string(x.shape.c) +
                    " channels, params expect " + std::to_string(p.in_channels));
    const int64_t mg = p.in_channels / p.groups;
    Shape4 expect_w{p.out_channels, mg, p.kernel_h, p.kernel_w};
    if (w.shape != expect_w)
        throw Error("conv2d: weight shape " + w.shape.str() + " does not match expected " +
                    expect_w.str());

    const int64_t B = x.shape.n, H = x.shape.h, W = x.shape.w;
    const int64_t Ho = conv_out_extent(H, p.kernel_h, p.stride, p.dilation, p.padding);
    const int64_t Wo = conv_out_extent(W, p.kernel_w, p.stride, p.dilation, p.padding);
    Tensor out(Shape4{B, p.out_channels, Ho, Wo});

    const int64_t ng = p.out_channels / p.groups;
    const int64_t c0h = (p.padding == PadMode::ZeroSame) ? p.kernel_h / 2 : 0;
    const int64_t c0w = (p.padding == PadMode::ZeroSame) ? p.kernel_w / 2 : 0;

    auto run = [&](int64_t lo, int64_t hi) {
        for (int64_t bn = lo; bn < hi; ++bn) {
            const int64_t b = bn / p.out_channels;
            const int64_t n = bn % p.out_channels;
            const int64_t g = n / ng;
            float* outp = out.plane(b, n);
            for (int64_t mi = 0; mi < mg; ++mi) {
                const int64_t m = g * mg + mi;
                const float* inp = x.plane(b, m);
                const float* wrow = &w.data[static_cast<size_t>(((n * mg + mi) * p.kernel_h) * p.kernel_w)];
                for (int64_t a = 0; a < p.kernel_h; ++a) {
                    const int64_t offy = p.dilation * (a - c0h);
                    for (int64_t bk = 0; bk < p.kernel_w; ++bk) {
                        const float wv = wrow[a * p.kernel_w + bk];
                        const int64_t offx = p.dilation * (bk - c0w);
                        // valid output x range for this tap
                        int64_t x_lo = 0, x_hi = Wo;  // [x_lo, x_hi)
                        if (offx < 0) x_lo = (-offx + p.stride - 1) / p.stride;
                        if (offx > 0) x_hi = std::min<int64_t>(Wo, (W - 1 - offx) / p.stride + 1);
                        if (x_lo >= x_hi) continue;
                        for (int64_t y = 0; y < Ho; ++y) {
                            const int64_t yy = y * p.stride + offy;
                            if (yy < 0 || yy >= H) continue;
                            const float* irow = inp + yy * W + offx;
                            float* orow = outp + y * Wo;
                            if (p.stride == 1) {
                                for (int64_t xo = x_lo; xo < x_hi; ++xo)
                                    orow[xo] += wv * irow[xo];
                            } else {
                                for (int64_t xo = x_lo; xo < x_hi; ++xo)
                                    orow[xo] += wv * irow[xo * p.stride];
                            }
                        }
                    }
                }
            }
        }
    };
    parallel_ranges(B * p.out_channels, run);
    return out;
}

Tensor depthwise_separable(const Tensor& x, const Tensor& w_dw, const Tensor& w_pw) {
    const int64_t M = x.shape.c;
    if (w_dw.shape != Shape4{M, 1, 3, 3})
        throw Error("depthwise_separable: dw weight shape " + w_dw.shape.str() +
                    " does not match [" + std::to_string(M) + ",1,3,3]");
    if (w_pw.shape.c != M || w_pw.shape.h != 1 || w_pw.shape.w != 1)
        throw Error("depthwise_separable: pw weight shape " + w_pw.shape.str() + " invalid");
    ConvParams dw;
    dw.kernel_h = dw.kernel_w = 3;
    dw.in_channels = dw.out_channels = M;
    dw.groups = M;
    Tensor mid = conv2d(x, w_dw, dw);
    ConvParams pw;
    pw.kernel_h = pw.kernel_w = 1;
    pw.in_channels = M;
    pw.out_channels = w_pw.shape.n;
    return conv2d(mid, w_pw, pw);
}

Tensor channel_shuffle(const Tensor& x, int64_t groups) {
    const int64_t C = x.shape.c;
    if (groups < 1 || C % groups != 0)
        throw Error("channel_shuffle: channels " + std::to_string(C) +
                    " not divisible by groups " + std::to_string(groups));
    const int64_t per = C / groups;
    Tensor out(x.shape);
    const size_t plane = static_cast<size_t>(x.shape.h * x.shape.w);
    for (int64_t b = 0; b < x.shape.n; ++b) {
        for (int64_t j = 0; j < per; ++j) {
            for (int64_t i = 0; i < groups; ++i) {
                std::memcpy(out.plane(b, j * groups + i), x.plane(b, i * per + j),
                            plane * sizeof(float));
            }
        }
    }
    return out;
}

Tensor pixel_shuffle(const Tensor& x, int64_t r) {
    if (r < 1) throw Error("pixel_shuffle: factor must be >= 1");
    const int64_t C = x.shape.c;
    if (C % (r * r) != 0)
        throw Error("pixel_shuffle: channels " + std::to_string(C) +
                    " not divisible by r^2 = " + std::to_string(r * r));
    const int64_t Co = C / (r * r), H = x.shape.h, W = x.shape.w;
    Tensor out(Shape4{x.shape.n, Co, H * r, W * r});
    for (int64_t b = 0; b < x.shape.n; ++b) {
        for (int64_t c = 0; c < Co; ++c) {
            float* op = out.plane(b, c);
            for (int64_t py = 0; py < r; ++py) {
                for (int64_t px = 0; px < r; ++px) {
                    const float* ip = x.plane(b, c * r * r + py * r + px);
                    for (int64_t y = 0; y < H; ++y) {
                        const float* irow = ip + y * W;
                        float* orow = op + (y * r + py) * (W * r) + px;
                        for (int64_t xx = 0; xx < W; ++xx) orow[xx * r] = irow[xx];
                    }
                }
            }
        }
    }
    return out;
}

Tensor space_to_depth(const Tensor& x, int64_t r) {
    if (r < 1) throw Error("space_to_depth: factor must be >= 1");
    if (x.shape.h % r != 0 || x.shape.w % r != 0)
        throw Error("space_to_depth: spatial dims " + std::to_string(x.shape.h) + "x" +
                    std::to_string(x.shape.w) + " not divisible by " + std::to_string(r));
    const int64_t Ho = x.shape.h / r, Wo = x.shape.w / r;
    Tensor out(Shape4{x.shape.n, x.shape.c * r * r, Ho, Wo});
    for (int64_t b = 0; b < x.shape.n; ++b) {
        for (int64_t c = 0; c < x.shape.c; ++c) {
            const float* ip = x.plane(b, c);
            for (int64_t py = 0; py < r; ++py) {
                for (int64_t px = 0; px < r; ++px) {
                    float* op = out.plane(b, c * r * r + py * r + px);
                    for (int64_t y = 0; y < Ho; ++y) {
                        const float* irow = ip + (y * r + py) * x.shape.w + px;
                        float* orow = op + y * Wo;
                        for (int64_t xx = 0; xx < Wo; ++xx) orow[xx] = irow[xx * r];
                    }
                }
            }
        }
    }
    return out;
}

namespace {

struct AxisSample {
    int64_t i0;
    int64_t i1;
    double frac;
};

std::vector<AxisSample> bilinear_axis(int64_t in, int64_t out) {
    std::vector<AxisSample> s(static_cast<size_t>(out));
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (int64_t t = 0; t < out; ++t) {
        double src = (static_cast<double>(t) + 0.5) * scale - 0.5;
        if (src < 0.0) src = 0.0;
        double fl = std::floor(src);
        int64_t i0 = static_cast<int64_t>(fl);
        if (i0 > in - 1) i0 = in - 1;
        int64_t i1 = std::min<int64_t>(i0 + 1, in - 1);
        s[static_cast<size_t>(t)] = {i0, i1, src - fl};
    }
    return s;
}

}  // namespace

Tensor bilinear_resize(const Tensor& x, int64_t out_h, int64_t out_w) {
    if (out_h < 1 || out_w < 1) throw Error("bilinear_resize: output extents must be >= 1");
    if (out_h == x.shape.h && out_w == x.shape.w) return x;
    const auto ys = bilinear_axis(x.shape.h, out_h);
    const auto xs = bilinear_axis(x.shape.w, out_w);
    Tensor out(Shape4{x.shape.n, x.shape.c, out_h, out_w});
    for (int64_t b = 0; b < x.shape.n; ++b) {
        for (int64_t c = 0; c < x.shape.c; ++c) {
            const float* ip = x.plane(b, c);
            float* op = out.plane(b, c);
            for (int64_t y = 0; y < out_h; ++y) {
                const auto& sy = ys[static_cast<size_t>(y)];
                const float* r0 = ip + sy.i0 * x.shape.w;
                const float* r1 = ip + sy.i1 * x.shape.w;
                float* orow = op + y * out_w;
                for (int64_t xo = 0; xo < out_w; ++xo) {
                    const auto& sx = xs[static_cast<size_t>(xo)];
                    const double a = r0[sx.i0], bv = r0[sx.i1];
                    const double cv = r1[sx.i0], dv = r1[sx.i1];
                    const double h0 = a + sx.frac * (bv - a);
                    const double h1 = cv + sx.frac * (dv - cv);
                    orow[xo] = static_cast<float>(h0 + sy.frac * (h1 - h0));
                }
            }
        }
    }
    return out;
}

Tensor transposed_conv2d(const Tensor& x, const Tensor& w, int64_t stride, int64_t pad) {
    if (stride < 1) throw Error("transposed_conv2d: stride must be >= 1");
    if (pad < 0) throw Error("transposed_conv2d: padding must be >= 0");
    const int64_t M = x.shape.c;
    if (w.shape.n != M)
        throw Error("transposed_conv2d: weight shape " + w.shape.str() +
                    " does not match input channels " + std::to_string(M));
    const int64_t N = w.shape.c, k = w.shape.h;
    if (w.shape.w != k) throw Error("transposed_conv2d: kernel must be square");
    const int64_t H = x.shape.h, W = x.shape.w;
    const int64_t Ho = (H - 1) * stride + k - 2 * pad;
    const int64_t Wo = (W - 1) * stride + k - 2 * pad;
    if (Ho < 1 || Wo < 1)
        throw Error("transposed_conv2d: padding " + std::to_string(pad) +
                    " leaves no output for kernel " + std::to_string(k));
    Tensor out(Shape4{x.shape.n, N, Ho, Wo});

    auto run = [&](int64_t lo, int64_t hi) {
        for (int64_t bn = lo; bn < hi; ++bn) {
            const int64_t b = bn / N;
            const int64_t n = bn % N;
            float* outp = out.plane(b, n);
            for (int64_t m = 0; m < M; ++m) {
                const float* inp = x.plane(b, m);
                const float* wbase = &w.data[static_cast<size_t>(((m * N + n) * k) * k)];
                for (int64_t a = 0; a < k; ++a) {
                    for (int64_t bk = 0; bk < k; ++bk) {
                        const float wv = wbase[a * k + bk];
                        for (int64_t yin = 0; yin < H; ++yin) {
                            const int64_t y = yin * stride + a - pad;
                            if (y < 0 || y >= Ho) continue;
                            const int64_t x_first = (bk - pad < 0) ? (pad - bk + stride - 1) / stride : 0;
                            float* orow = outp + y * Wo;
                            const float* irow = inp + yin * W;
                            for (int64_t xin = x_first; xin < W; ++xin) {
                                const int64_t xo = xin * stride + bk - pad;
                                if (xo >= Wo) break;
                                orow[xo] += wv * irow[xin];
                            }
                        }
                    }
                }
            }
        }
    };
    parallel_ranges(x.shape.n * N, run);
    return out;
}

Tensor relu(const Tensor& x) {
    Tensor out(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i) out.data[i] = x.data[i] > 0.0f ? x.data[i] : 0.0f;
    return out;
}

Tensor bn_inference(const Tensor& x, std::span<const float> scale, std::span<const float> shift) {
    const int64_t C = x.shape.c;
    if (static_cast<int64_t>(scale.size()) != C || static_cast<int64_t>(shift.size()) != C)
        throw Error("bn_inference: affine parameter length does not match " + std::to_string(C) +
                    " channels");
    Tensor out(x.shape);
    const int64_t plane = x.shape.h * x.shape.w;
    for (int64_t b = 0; b < x.shape.n; ++b) {
        for (int64_t c = 0; c < C; ++c) {
            const float s = scale[static_cast<size_t>(c)];
            const float t = shift[static_cast<size_t>(c)];
            const float* ip = x.plane(b, c);
            float* op = out.plane(b, c);
            for (int64_t i = 0; i < plane; ++i) op[i] = s * ip[i] + t;
        }
    }
    return out;
}

Tensor concat_channels(const std::vector<const Tensor*>& xs) {
    if (xs.empty()) throw Error("concat: no operands");
    const Shape4 first = xs[0]->shape;
    int64_t C = 0;
    for (const Tensor* t : xs) {
        if (t->shape.n != first.n || t->shape.h != first.h || t->shape.w != first.w)
            throw Error("concat: operand shape " + t->shape.str() +
                        " does not match spatial/batch dims of " + first.str());
        C += t->shape.c;
    }
    Tensor out(Shape4{first.n, C, first.h, first.w});
    const size_t plane = static_cast<size_t>(first.h * first.w);
    for (int64_t b = 0; b < first.n; ++b) {
        int64_t co = 0;
        for (const Tensor* t : xs) {
            for (int64_t c = 0; c < t->shape.c; ++c, ++co)
                std::memcpy(out.plane(b, co), t->plane(b, c), plane * sizeof(float));
        }
    }
    return out;
}

Tensor add(const Tensor& x, const Tensor& y) {
    if (x.shape != y.shape)
        throw Error("add: shape mismatch " + x.shape.str() + " vs " + y.shape.str());
    Tensor out(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i) out.data[i] = x.data[i] + y.data[i];
    return out;
}

}  // namespace lwir
