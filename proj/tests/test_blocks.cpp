#include <doctest.h>

#include <cstring>

#include "lwir/blocks.hpp"
#include "lwir/graph.hpp"

using namespace lwir;

namespace {

Tensor filled(Shape4 s, uint32_t salt) {
    Tensor t(s);
    uint32_t state = salt * 2654435761u + 1;
    for (float& v : t.data) {
        state = state * 1664525u + 1013904223u;
        v = static_cast<float>(static_cast<int32_t>(state >> 8) % 1000) / 500.0f - 1.0f;
    }
    return t;
}

BnAffine identity_bn(int64_t c) {
    return BnAffine{std::vector<float>(static_cast<size_t>(c), 1.0f),
                    std::vector<float>(static_cast<size_t>(c), 0.0f)};
}

ListWeights make_list_weights(const ListConfig& cfg, uint32_t salt) {
    ListWeights w;
    const int64_t red = cfg.reduced();
    w.reduce_w = filled({red, cfg.in_channels, 1, 1}, salt);
    w.reduce_bn = identity_bn(red);
    w.branch1_w = filled({cfg.branch1_out(), red, 1, 1}, salt + 1);
    w.dw_w = filled({red, 1, 3, 3}, salt + 2);
    w.pw_w = filled({cfg.branch3_out(), red, 1, 1}, salt + 3);
    w.out_bn = identity_bn(cfg.out_channels);
    return w;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
    return a.shape == b.shape &&
           std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("LIST parameter count follows the stage-wise closed form") {
    CHECK(list_param_count(ListConfig{64, 64, 4, 2}) == 2192);
    CHECK(list_param_count(ListConfig{64, 64, 4, 2}) == 1024 + 512 + 144 + 512);
    CHECK(list_param_count(ListConfig{64, 128, 4, 2}) == 16 * (64 + 128 + 9));
    // the split between the two branches does not change the total
    CHECK(list_param_count(ListConfig{64, 64, 4, 4}) == 2192);
}

TEST_CASE("separable closed form matches 9M + MN") {
    CHECK(separable_param_count(64, 64) == 4672);
    CHECK(separable_param_count(3, 10) == 27 + 30);
}

TEST_CASE("LIST output carries exactly N channels for a grid of configs") {
    for (int64_t m : {32, 64, 128}) {
        for (int64_t n : {32, 64, 128}) {
            ListConfig cfg{m, n, 4, 2};
            Tensor y = list_forward(filled({1, m, 4, 5}, 40), cfg, make_list_weights(cfg, 41));
            CHECK(y.shape.c == n);
            CHECK(y.shape.h == 4);
            CHECK(y.shape.w == 5);
        }
    }
}

TEST_CASE("LIST config invariants reject bad hyperparameters") {
    CHECK_THROWS_AS((ListConfig{63, 64, 4, 2}.validate()), Error);  // M not divisible by k
    CHECK_THROWS_AS((ListConfig{64, 63, 4, 2}.validate()), Error);  // odd N with n_b = 2
    CHECK_THROWS_AS((ListConfig{64, 64, 1, 2}.validate()), Error);  // k below 2
}

TEST_CASE("LIST concatenates the 1x1 branch first") {
    // zero the depthwise/pointwise branch; the first N/n_b channels must carry
    // the 1x1 branch, the rest must be zero
    ListConfig cfg{8, 8, 4, 2};
    ListWeights w = make_list_weights(cfg, 42);
    w.dw_w = Tensor(Shape4{2, 1, 3, 3}, 0.0f);
    w.pw_w = Tensor(Shape4{4, 2, 1, 1}, 0.0f);
    Tensor y = list_forward(filled({1, 8, 3, 3}, 43), cfg, w);
    bool branch1_nonzero = false;
    for (int64_t c = 0; c < 4; ++c)
        for (int64_t i = 0; i < 9; ++i)
            branch1_nonzero |= y.plane(0, c)[i] != 0.0f;
    CHECK(branch1_nonzero);
    for (int64_t c = 4; c < 8; ++c)
        for (int64_t i = 0; i < 9; ++i) CHECK(y.plane(0, c)[i] == 0.0f);
}

TEST_CASE("GSAT parameter count and savings ratio") {
    CHECK(gsat_param_count(GsatConfig{256, 8, 2}) == 81920);
    // dense dilated conv uses 9 * 256^2 = 589824, ratio 9g/10 = 7.2
    CHECK(9 * 256 * 256 == 589824);
    CHECK(static_cast<double>(589824) / 81920 == doctest::Approx(7.2).epsilon(1e-12));
    CHECK_THROWS_AS((GsatConfig{30, 8, 2}.validate()), Error);
}

TEST_CASE("GSAT preserves channels and spatial dims") {
    GsatConfig cfg{16, 4, 3};
    GsatWeights w;
    w.dil_w = filled({16, 4, 3, 3}, 50);
    w.dil_bn = identity_bn(16);
    w.pw_w = filled({16, 4, 1, 1}, 51);
    w.pw_bn = identity_bn(16);
    Tensor x = filled({1, 16, 7, 9}, 52);
    Tensor y = gsat_forward(x, cfg, w);
    CHECK(y.shape == x.shape);
}

TEST_CASE("upsample modes produce r-scaled outputs with o channels") {
    for (UpsampleMode mode : {UpsampleMode::SubpixelNormal, UpsampleMode::SubpixelSeparable,
                              UpsampleMode::BilinearList}) {
        UpsampleConfig cfg{mode, 2, 4, 4, 2, 4, 2};
        UpsampleWeights w;
        if (mode == UpsampleMode::SubpixelNormal) {
            w.conv_w = filled({16, 4, 2, 2}, 60);
        } else if (mode == UpsampleMode::SubpixelSeparable) {
            w.dw_w = filled({4, 1, 2, 2}, 61);
            w.pw_w = filled({16, 4, 1, 1}, 62);
        } else {
            w.list = make_list_weights(cfg.list_config(), 63);
        }
        Tensor y = upsample_forward(filled({1, 4, 6, 6}, 64), cfg, w);
        CHECK(y.shape == Shape4{1, 4, 12, 12});
    }
}

TEST_CASE("subpixel parameter formulas") {
    CHECK(subpixel_normal_param_count(3, 64, 64, 2) == 9 * 64 * 256);
    CHECK(subpixel_separable_param_count(3, 64, 64, 2) == 9 * 64 + 64 * 256);
    // k=2 matches a 4x4 stride-2 transposed convolution's parameter count
    CHECK(subpixel_normal_param_count(2, 256, 128, 2) == 4 * 4 * 256 * 128);
}

TEST_CASE("downsample is bilinear then LIST") {
    ListConfig cfg{64, 128, 4, 2};
    ListWeights w = make_list_weights(cfg, 70);
    Tensor x = filled({1, 64, 16, 16}, 71);
    Tensor y = downsample_forward(x, 2, cfg, w);
    CHECK(y.shape == Shape4{1, 128, 8, 8});
    // identical to resizing first and applying the block
    Tensor two_step = list_forward(bilinear_resize(x, 8, 8), cfg, w);
    CHECK(bit_equal(y, two_step));
    CHECK_THROWS_AS(downsample_forward(x, 1, cfg, w), Error);
    Tensor tiny = filled({1, 64, 1, 1}, 72);
    CHECK_THROWS_AS(downsample_forward(tiny, 2, cfg, w), Error);
}

TEST_CASE("downsample of a constant input feeds the block a constant") {
    ListConfig cfg{8, 8, 4, 2};
    ListWeights w = make_list_weights(cfg, 73);
    Tensor x(Shape4{1, 8, 9, 9}, 0.42f);
    Tensor via_block = downsample_forward(x, 2, cfg, w);
    Tensor resized = bilinear_resize(x, 5, 5);
    for (float v : resized.data) CHECK(v == 0.42f);
    CHECK(bit_equal(via_block, list_forward(resized, cfg, w)));
}
