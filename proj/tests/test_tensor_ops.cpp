#include <doctest.h>

#include <cstring>

#include "lwir/ops.hpp"

using namespace lwir;

namespace {

ConvParams params(int64_t k, int64_t m, int64_t n, int64_t stride = 1, int64_t dilation = 1,
                  int64_t groups = 1) {
    ConvParams p;
    p.kernel_h = p.kernel_w = k;
    p.in_channels = m;
    p.out_channels = n;
    p.stride = stride;
    p.dilation = dilation;
    p.groups = groups;
    return p;
}

// small deterministic fill, decorrelated across calls by the salt
Tensor filled(Shape4 s, uint32_t salt) {
    Tensor t(s);
    uint32_t state = salt * 2654435761u + 1;
    for (float& v : t.data) {
        state = state * 1664525u + 1013904223u;
        v = static_cast<float>(static_cast<int32_t>(state >> 8) % 1000) / 500.0f - 1.0f;
    }
    return t;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
    return a.shape == b.shape &&
           std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("conv2d identity kernel preserves the input") {
    Tensor x = filled({1, 1, 3, 3}, 1);
    Tensor w({1, 1, 3, 3});
    w.at(0, 0, 1, 1) = 1.0f;
    Tensor y = conv2d(x, w, params(3, 1, 1));
    CHECK(bit_equal(x, y));
}

TEST_CASE("depthwise all-ones kernel sums the 3x3 neighborhood") {
    const int64_t c = 3;
    Tensor x(Shape4{1, c, 5, 5}, 1.0f);
    Tensor w(Shape4{c, 1, 3, 3}, 1.0f);
    Tensor y = conv2d(x, w, params(3, c, c, 1, 1, c));
    for (int64_t ch = 0; ch < c; ++ch) {
        CHECK(y.at(0, ch, 2, 2) == 9.0f);   // interior
        CHECK(y.at(0, ch, 0, 0) == 4.0f);   // corner sees a 2x2 window
        CHECK(y.at(0, ch, 0, 2) == 6.0f);   // edge
    }
}

TEST_CASE("grouped conv equals dense conv with a block-diagonal kernel") {
    const int64_t m = 8, n = 8, g = 2;
    Tensor x = filled({1, m, 5, 5}, 2);
    Tensor wg = filled({n, m / g, 3, 3}, 3);
    Tensor dense(Shape4{n, m, 3, 3});
    for (int64_t o = 0; o < n; ++o) {
        const int64_t grp = o / (n / g);
        for (int64_t mi = 0; mi < m / g; ++mi)
            for (int64_t a = 0; a < 3; ++a)
                for (int64_t b = 0; b < 3; ++b)
                    dense.at(o, grp * (m / g) + mi, a, b) = wg.at(o, mi, a, b);
    }
    Tensor yg = conv2d(x, wg, params(3, m, n, 1, 1, g));
    Tensor yd = conv2d(x, dense, params(3, m, n));
    REQUIRE(yg.shape == yd.shape);
    for (size_t i = 0; i < yg.data.size(); ++i)
        CHECK(std::abs(yg.data[i] - yd.data[i]) <=
              1e-6 * std::max(1.0f, std::abs(yd.data[i])));
}

TEST_CASE("conv2d validates channel and weight shapes") {
    Tensor x = filled({1, 6, 4, 4}, 4);
    CHECK_THROWS_AS(conv2d(x, filled({4, 3, 3, 3}, 5), params(3, 6, 4, 1, 1, 4)), Error);
    CHECK_THROWS_AS(conv2d(x, filled({4, 6, 3, 3}, 5), params(3, 4, 4)), Error);
    CHECK_THROWS_AS(conv2d(x, filled({4, 6, 5, 5}, 5), params(3, 6, 4)), Error);
}

TEST_CASE("conv2d dilation samples taps at spaced offsets") {
    // single channel, 5x5 input, dilated 3x3 kernel with only the top-left tap set
    Tensor x(Shape4{1, 1, 5, 5});
    for (int64_t y = 0; y < 5; ++y)
        for (int64_t xx = 0; xx < 5; ++xx) x.at(0, 0, y, xx) = static_cast<float>(y * 5 + xx);
    Tensor w({1, 1, 3, 3});
    w.at(0, 0, 0, 0) = 1.0f;
    Tensor y = conv2d(x, w, params(3, 1, 1, 1, 2));
    // tap offset is d*(0-1) = -2 in both axes
    CHECK(y.at(0, 0, 2, 2) == x.at(0, 0, 0, 0));
    CHECK(y.at(0, 0, 4, 3) == x.at(0, 0, 2, 1));
    CHECK(y.at(0, 0, 1, 1) == 0.0f);  // reads the zero pad
}

TEST_CASE("conv2d stride-2 same padding gives ceil(extent/2)") {
    Tensor x = filled({1, 2, 7, 6}, 6);
    Tensor w = filled({3, 2, 3, 3}, 7);
    Tensor y = conv2d(x, w, params(3, 2, 3, 2));
    CHECK(y.shape == Shape4{1, 3, 4, 3});
}

TEST_CASE("depthwise_separable equals the two-step composition bit-for-bit") {
    Tensor x = filled({2, 4, 5, 5}, 8);
    Tensor dw = filled({4, 1, 3, 3}, 9);
    Tensor pw = filled({6, 4, 1, 1}, 10);
    Tensor fused = depthwise_separable(x, dw, pw);
    Tensor two = conv2d(conv2d(x, dw, params(3, 4, 4, 1, 1, 4)), pw, params(1, 4, 6));
    CHECK(bit_equal(fused, two));
}

TEST_CASE("depthwise_separable with one channel is conv then scalar scale") {
    Tensor x = filled({1, 1, 4, 4}, 11);
    Tensor dw = filled({1, 1, 3, 3}, 12);
    Tensor pw(Shape4{1, 1, 1, 1});
    pw.data[0] = 2.5f;
    Tensor y = depthwise_separable(x, dw, pw);
    Tensor conv = conv2d(x, dw, params(3, 1, 1));
    for (size_t i = 0; i < y.data.size(); ++i) CHECK(y.data[i] == 2.5f * conv.data[i]);
}

TEST_CASE("channel_shuffle interleaves groups") {
    Tensor x(Shape4{1, 6, 1, 1});
    for (int64_t c = 0; c < 6; ++c) x.at(0, c, 0, 0) = static_cast<float>(c);
    Tensor y = channel_shuffle(x, 2);
    const float want[6] = {0, 3, 1, 4, 2, 5};
    for (int64_t c = 0; c < 6; ++c) CHECK(y.at(0, c, 0, 0) == want[c]);

    Tensor a = filled({1, 6, 2, 3}, 13);
    CHECK(bit_equal(channel_shuffle(a, 1), a));
    CHECK(bit_equal(channel_shuffle(a, 6), a));
    CHECK_THROWS_AS(channel_shuffle(a, 4), Error);
}

TEST_CASE("pixel_shuffle arranges r^2 channels into an r x r block") {
    Tensor x(Shape4{1, 4, 1, 1});
    const float vals[4] = {10, 20, 30, 40};
    for (int64_t c = 0; c < 4; ++c) x.at(0, c, 0, 0) = vals[c];
    Tensor y = pixel_shuffle(x, 2);
    REQUIRE(y.shape == Shape4{1, 1, 2, 2});
    CHECK(y.at(0, 0, 0, 0) == 10);
    CHECK(y.at(0, 0, 0, 1) == 20);
    CHECK(y.at(0, 0, 1, 0) == 30);
    CHECK(y.at(0, 0, 1, 1) == 40);

    Tensor a = filled({2, 3, 4, 5}, 14);
    CHECK(bit_equal(pixel_shuffle(a, 1), a));
    CHECK_THROWS_AS(pixel_shuffle(a, 2), Error);
}

TEST_CASE("space_to_depth is the exact inverse of pixel_shuffle") {
    Tensor x(Shape4{1, 1, 2, 2});
    x.at(0, 0, 0, 0) = 1;
    x.at(0, 0, 0, 1) = 2;
    x.at(0, 0, 1, 0) = 3;
    x.at(0, 0, 1, 1) = 4;
    Tensor d = space_to_depth(x, 2);
    REQUIRE(d.shape == Shape4{1, 4, 1, 1});
    for (int64_t c = 0; c < 4; ++c) CHECK(d.at(0, c, 0, 0) == static_cast<float>(c + 1));

    Tensor a = filled({1, 2, 6, 4}, 15);
    CHECK(bit_equal(space_to_depth(a, 1), a));
    CHECK(bit_equal(pixel_shuffle(space_to_depth(a, 2), 2), a));
    Tensor b = filled({1, 8, 3, 3}, 16);
    CHECK(bit_equal(space_to_depth(pixel_shuffle(b, 2), 2), b));
    CHECK_THROWS_AS(space_to_depth(a, 4), Error);
}

TEST_CASE("bilinear_resize half-pixel values on the 2x2 to 4x4 case") {
    Tensor x(Shape4{1, 1, 2, 2});
    x.at(0, 0, 0, 0) = 0;
    x.at(0, 0, 0, 1) = 1;
    x.at(0, 0, 1, 0) = 2;
    x.at(0, 0, 1, 1) = 3;
    Tensor y = bilinear_resize(x, 4, 4);
    // hand evaluation of s = (t + 0.5)/2 - 0.5 with border clamping
    const float want[4][4] = {{0.0f, 0.25f, 0.75f, 1.0f},
                              {0.5f, 0.75f, 1.25f, 1.5f},
                              {1.5f, 1.75f, 2.25f, 2.5f},
                              {2.0f, 2.25f, 2.75f, 3.0f}};
    for (int64_t r = 0; r < 4; ++r)
        for (int64_t c = 0; c < 4; ++c) CHECK(y.at(0, 0, r, c) == want[r][c]);
}

TEST_CASE("bilinear_resize preserves constants and identity sizes") {
    Tensor x(Shape4{1, 2, 3, 5}, 0.3f);
    Tensor up = bilinear_resize(x, 7, 11);
    for (float v : up.data) CHECK(std::memcmp(&v, &x.data[0], 4) == 0);
    Tensor same = filled({1, 2, 3, 5}, 17);
    CHECK(bit_equal(same, bilinear_resize(same, 3, 5)));
}

TEST_CASE("transposed_conv2d on a single pixel reproduces the kernel") {
    Tensor x(Shape4{1, 1, 1, 1});
    x.data[0] = 3.0f;
    Tensor w = filled({1, 1, 2, 2}, 18);
    Tensor y = transposed_conv2d(x, w, 2, 0);
    REQUIRE(y.shape == Shape4{1, 1, 2, 2});
    for (int64_t a = 0; a < 2; ++a)
        for (int64_t b = 0; b < 2; ++b) CHECK(y.at(0, 0, a, b) == 3.0f * w.at(0, 0, a, b));
}

TEST_CASE("transposed_conv2d with stride 1 is flipped-kernel correlation") {
    const int64_t m = 2, n = 3, k = 3;
    Tensor x = filled({1, m, 5, 4}, 19);
    Tensor w = filled({m, n, k, k}, 20);
    Tensor flipped(Shape4{n, m, k, k});
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j)
            for (int64_t a = 0; a < k; ++a)
                for (int64_t b = 0; b < k; ++b)
                    flipped.at(j, i, k - 1 - a, k - 1 - b) = w.at(i, j, a, b);
    Tensor yt = transposed_conv2d(x, w, 1, k - 1 - k / 2);
    Tensor yc = conv2d(x, flipped, params(k, m, n));
    REQUIRE(yt.shape == yc.shape);
    for (size_t i = 0; i < yt.data.size(); ++i)
        CHECK(std::abs(yt.data[i] - yc.data[i]) <=
              1e-6 * std::max(1.0f, std::abs(yc.data[i])));
}

TEST_CASE("transposed_conv2d doubles the resolution for k=4 s=2 pad=1") {
    Tensor x = filled({1, 2, 6, 5}, 21);
    Tensor w = filled({2, 3, 4, 4}, 22);
    CHECK(transposed_conv2d(x, w, 2, 1).shape == Shape4{1, 3, 12, 10});
}

TEST_CASE("relu, bn_inference, concat and add basics") {
    Tensor x(Shape4{1, 1, 1, 3});
    x.data = {-1.0f, 0.0f, 2.0f};
    Tensor r = relu(x);
    CHECK(r.data[0] == 0.0f);
    CHECK(r.data[1] == 0.0f);
    CHECK(r.data[2] == 2.0f);

    Tensor y = filled({1, 2, 3, 3}, 23);
    const std::vector<float> one{1.0f, 1.0f}, zero{0.0f, 0.0f};
    CHECK(bit_equal(bn_inference(y, one, zero), y));
    std::vector<float> sc{2.0f, -1.0f}, sh{0.5f, 0.25f};
    Tensor b = bn_inference(y, sc, sh);
    CHECK(b.at(0, 0, 1, 1) == 2.0f * y.at(0, 0, 1, 1) + 0.5f);
    CHECK(b.at(0, 1, 2, 0) == -1.0f * y.at(0, 1, 2, 0) + 0.25f);

    Tensor c1 = filled({1, 3, 4, 4}, 24);
    Tensor c2 = filled({1, 5, 4, 4}, 25);
    Tensor cc = concat_channels({&c1, &c2});
    CHECK(cc.shape.c == 8);
    CHECK(cc.at(0, 0, 2, 2) == c1.at(0, 0, 2, 2));
    CHECK(cc.at(0, 3, 2, 2) == c2.at(0, 0, 2, 2));
    Tensor bad = filled({1, 2, 3, 4}, 26);
    CHECK_THROWS_AS(concat_channels({&c1, &bad}), Error);

    Tensor s = add(c1, c1);
    CHECK(s.at(0, 1, 1, 1) == 2.0f * c1.at(0, 1, 1, 1));
    CHECK_THROWS_AS(add(c1, c2), Error);
}

TEST_CASE("primitive ops are deterministic across repeated evaluation") {
    Tensor x = filled({1, 4, 8, 8}, 27);
    Tensor w = filled({4, 4, 3, 3}, 28);
    Tensor a = conv2d(x, w, params(3, 4, 4, 1, 2));
    Tensor b = conv2d(x, w, params(3, 4, 4, 1, 2));
    CHECK(bit_equal(a, b));
    CHECK(bit_equal(bilinear_resize(x, 13, 7), bilinear_resize(x, 13, 7)));
}

TEST_CASE("valid padding shrinks the output and rejects degenerate extents") {
    Tensor x = filled({1, 1, 5, 5}, 29);
    Tensor w = filled({1, 1, 3, 3}, 30);
    ConvParams p = params(3, 1, 1);
    p.padding = PadMode::None;
    CHECK(conv2d(x, w, p).shape == Shape4{1, 1, 3, 3});
    Tensor tiny = filled({1, 1, 2, 2}, 31);
    CHECK_THROWS_AS(conv2d(tiny, w, p), Error);
}

TEST_CASE("thread cap does not change results") {
    Tensor x = filled({2, 8, 16, 16}, 32);
    Tensor w = filled({8, 8, 3, 3}, 33);
    Tensor wt = filled({8, 4, 4, 4}, 34);
    Tensor seq_c = conv2d(x, w, params(3, 8, 8));
    Tensor seq_t = transposed_conv2d(x, wt, 2, 1);
    set_thread_cap(4);
    Tensor par_c = conv2d(x, w, params(3, 8, 8));
    Tensor par_t = transposed_conv2d(x, wt, 2, 1);
    set_thread_cap(1);
    CHECK(bit_equal(seq_c, par_c));
    CHECK(bit_equal(seq_t, par_t));
}
