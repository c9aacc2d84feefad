#include "lwir/blocks.hpp"

namespace lwir {

namespace {

Tensor conv1x1(const Tensor& x, const Tensor& w, int64_t out_ch, int64_t groups = 1) {
    ConvParams p;
    p.kernel_h = p.kernel_w = 1;
    p.in_channels = x.shape.c;
    p.out_channels = out_ch;
    p.groups = groups;
    return conv2d(x, w, p);
}

Tensor bn(const Tensor& x, const BnAffine& a) { return bn_inference(x, a.scale, a.shift); }

}  // namespace

Tensor list_forward(const Tensor& x, const ListConfig& cfg, const ListWeights& w) {
    cfg.validate();
    if (x.shape.c != cfg.in_channels)
        throw Error("list: input has " + std::to_string(x.shape.c) + " channels, config expects " +
                    std::to_string(cfg.in_channels));
    Tensor reduced = relu(bn(conv1x1(x, w.reduce_w, cfg.reduced()), w.reduce_bn));

    Tensor branch1 = conv1x1(reduced, w.branch1_w, cfg.branch1_out());
    Tensor branch3 = depthwise_separable(reduced, w.dw_w, w.pw_w);

    Tensor merged = concat_channels({&branch1, &branch3});
    return relu(bn(merged, w.out_bn));
}

Tensor gsat_forward(const Tensor& x, const GsatConfig& cfg, const GsatWeights& w) {
    cfg.validate();
    if (x.shape.c != cfg.channels)
        throw Error("gsat: input has " + std::to_string(x.shape.c) + " channels, config expects " +
                    std::to_string(cfg.channels));
    ConvParams dil;
    dil.kernel_h = dil.kernel_w = 3;
    dil.in_channels = dil.out_channels = cfg.channels;
    dil.dilation = cfg.dilation;
    dil.groups = cfg.groups;
    Tensor t = relu(bn(conv2d(x, w.dil_w, dil), w.dil_bn));
    t = channel_shuffle(t, cfg.groups);
    t = bn(conv1x1(t, w.pw_w, cfg.channels, cfg.groups), w.pw_bn);
    return relu(add(x, t));
}

Tensor upsample_forward(const Tensor& x, const UpsampleConfig& cfg, const UpsampleWeights& w) {
    cfg.validate();
    if (x.shape.c != cfg.in_channels)
        throw Error("upsample: input has " + std::to_string(x.shape.c) +
                    " channels, config expects " + std::to_string(cfg.in_channels));
    switch (cfg.mode) {
        case UpsampleMode::SubpixelNormal: {
            ConvParams p;
            p.kernel_h = p.kernel_w = cfg.kernel;
            p.in_channels = cfg.in_channels;
            p.out_channels = cfg.conv_out_channels();
            return pixel_shuffle(conv2d(x, w.conv_w, p), cfg.scale);
        }
        case UpsampleMode::SubpixelSeparable: {
            // pointwise runs before the shuffle
            ConvParams dw;
            dw.kernel_h = dw.kernel_w = cfg.kernel;
            dw.in_channels = dw.out_channels = cfg.in_channels;
            dw.groups = cfg.in_channels;
            Tensor mid = conv2d(x, w.dw_w, dw);
            return pixel_shuffle(conv1x1(mid, w.pw_w, cfg.conv_out_channels()), cfg.scale);
        }
        case UpsampleMode::BilinearList: {
            Tensor up = bilinear_resize(x, x.shape.h * cfg.scale, x.shape.w * cfg.scale);
            return list_forward(up, cfg.list_config(), w.list);
        }
    }
    throw Error("upsample: unknown mode");
}

Tensor downsample_forward(const Tensor& x, int64_t factor, const ListConfig& cfg,
                          const ListWeights& w) {
    if (factor < 2) throw Error("downsample: factor must be >= 2");
    if (x.shape.h < factor || x.shape.w < factor)
        throw Error("downsample: spatial dims " + std::to_string(x.shape.h) + "x" +
                    std::to_string(x.shape.w) + " degenerate for factor " +
                    std::to_string(factor));
    const int64_t oh = (x.shape.h + factor - 1) / factor;
    const int64_t ow = (x.shape.w + factor - 1) / factor;
    return list_forward(bilinear_resize(x, oh, ow), cfg, w);
}

int64_t conv_param_count(int64_t kernel, int64_t in_ch, int64_t out_ch, int64_t groups) {
    return kernel * kernel * (in_ch / groups) * out_ch;
}

int64_t separable_param_count(int64_t in_ch, int64_t out_ch) {
    return 9 * in_ch + in_ch * out_ch;
}

int64_t list_param_count(const ListConfig& cfg) {
    const int64_t r = cfg.reduced();
    return cfg.in_channels * r         // stage-1 1x1
           + r * cfg.branch1_out()     // stage-2 1x1 branch
           + 9 * r                     // stage-2 depthwise 3x3
           + r * cfg.branch3_out();    // stage-2 pointwise
}

int64_t gsat_param_count(const GsatConfig& cfg) {
    const int64_t per = cfg.channels / cfg.groups;
    return 9 * per * cfg.channels + per * cfg.channels;
}

int64_t subpixel_normal_param_count(int64_t kernel, int64_t in_ch, int64_t out_ch, int64_t scale) {
    return kernel * kernel * in_ch * out_ch * scale * scale;
}

int64_t subpixel_separable_param_count(int64_t kernel, int64_t in_ch, int64_t out_ch,
                                       int64_t scale) {
    return kernel * kernel * in_ch + in_ch * out_ch * scale * scale;
}

}  // namespace lwir
