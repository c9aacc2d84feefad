#pragma once

#include <string>
#include <vector>

#include "lwir/ops.hpp"
#include "lwir/tensor.hpp"

namespace lwir {

// Replacement for a 3x3 conv: 1x1 bottleneck (ratio k) feeding a 1x1 branch
// (N/n_b channels) and a depthwise-separable 3x3 branch (N - N/n_b channels),
// concatenated to N channels.
struct ListConfig {
    int64_t in_channels = 0;   // M
    int64_t out_channels = 0;  // N
    int64_t compression = 4;   // k
    int64_t branching = 2;     // n_b

    void validate() const {
        if (in_channels < 1 || out_channels < 1) throw Error("list: channel counts must be >= 1");
        if (compression < 2) throw Error("list: compression k must be >= 2");
        if (branching < 1) throw Error("list: branching n_b must be >= 1");
        if (in_channels % compression != 0)
            throw Error("list: in_channels " + std::to_string(in_channels) +
                        " not divisible by k = " + std::to_string(compression));
        if (out_channels % branching != 0)
            throw Error("list: out_channels " + std::to_string(out_channels) +
                        " not divisible by n_b = " + std::to_string(branching));
    }
    int64_t reduced() const { return in_channels / compression; }
    int64_t branch1_out() const { return out_channels / branching; }
    int64_t branch3_out() const { return out_channels - branch1_out(); }
};

// Replacement for a dilated 3x3 conv with equal in/out channels: grouped
// dilated 3x3, channel shuffle, grouped 1x1, residual add.
struct GsatConfig {
    int64_t channels = 0;  // M
    int64_t groups = 8;    // g
    int64_t dilation = 1;  // d

    void validate() const {
        if (channels < 1) throw Error("gsat: channels must be >= 1");
        if (groups < 1) throw Error("gsat: groups must be >= 1");
        if (dilation < 1) throw Error("gsat: dilation must be >= 1");
        if (channels % groups != 0)
            throw Error("gsat: channels " + std::to_string(channels) +
                        " not divisible by groups " + std::to_string(groups));
    }
};

enum class UpsampleMode {
    SubpixelNormal,     // k x k conv to o*r^2 channels, then pixel shuffle
    SubpixelSeparable,  // depthwise k x k, pointwise to o*r^2, then pixel shuffle
    BilinearList,       // bilinear x r, then a LIST block
};

struct UpsampleConfig {
    UpsampleMode mode = UpsampleMode::SubpixelNormal;
    int64_t scale = 2;  // r
    int64_t in_channels = 0;
    int64_t out_channels = 0;
    int64_t kernel = 2;       // sub-pixel conv kernel size
    int64_t compression = 4;  // LIST hyperparameters for BilinearList
    int64_t branching = 2;

    void validate() const {
        if (scale < 1) throw Error("upsample: scale must be >= 1");
        if (in_channels < 1 || out_channels < 1)
            throw Error("upsample: channel counts must be >= 1");
        if (mode != UpsampleMode::BilinearList && kernel < 1)
            throw Error("upsample: kernel must be >= 1");
        if (mode == UpsampleMode::BilinearList) list_config().validate();
    }
    int64_t conv_out_channels() const { return out_channels * scale * scale; }
    ListConfig list_config() const {
        return ListConfig{in_channels, out_channels, compression, branching};
    }
};

struct BnAffine {
    std::vector<float> scale;
    std::vector<float> shift;
};

struct ListWeights {
    Tensor reduce_w;   // [M/k, M, 1, 1]
    BnAffine reduce_bn;
    Tensor branch1_w;  // [N/n_b, M/k, 1, 1]
    Tensor dw_w;       // [M/k, 1, 3, 3]
    Tensor pw_w;       // [N - N/n_b, M/k, 1, 1]
    BnAffine out_bn;
};

struct GsatWeights {
    Tensor dil_w;  // [M, M/g, 3, 3]
    BnAffine dil_bn;
    Tensor pw_w;   // [M, M/g, 1, 1]
    BnAffine pw_bn;
};

struct UpsampleWeights {
    Tensor conv_w;  // SubpixelNormal: [o*r^2, i, k, k]
    Tensor dw_w;    // SubpixelSeparable: [i, 1, k, k]
    Tensor pw_w;    // SubpixelSeparable: [o*r^2, i, 1, 1]
    ListWeights list;
};

// stage-1 1x1 -> BN -> ReLU -> {1x1 branch ; depthwise 3x3 + pointwise 1x1}
// -> concat(1x1 first) -> BN -> ReLU
Tensor list_forward(const Tensor& x, const ListConfig& cfg, const ListWeights& w);

// grouped dilated 3x3 -> BN -> ReLU -> channel shuffle -> grouped 1x1 -> BN
// -> add(input) -> ReLU
Tensor gsat_forward(const Tensor& x, const GsatConfig& cfg, const GsatWeights& w);

Tensor upsample_forward(const Tensor& x, const UpsampleConfig& cfg, const UpsampleWeights& w);

// bilinear to ceil(H/factor) x ceil(W/factor), then a LIST block.
Tensor downsample_forward(const Tensor& x, int64_t factor, const ListConfig& cfg,
                          const ListWeights& w);

// Closed-form trainable parameter counts (biases off, BN affine not included).
int64_t conv_param_count(int64_t kernel, int64_t in_ch, int64_t out_ch, int64_t groups = 1);
int64_t separable_param_count(int64_t in_ch, int64_t out_ch);
int64_t list_param_count(const ListConfig& cfg);
int64_t gsat_param_count(const GsatConfig& cfg);
int64_t subpixel_normal_param_count(int64_t kernel, int64_t in_ch, int64_t out_ch, int64_t scale);
int64_t subpixel_separable_param_count(int64_t kernel, int64_t in_ch, int64_t out_ch, int64_t scale);

}  // namespace lwir
