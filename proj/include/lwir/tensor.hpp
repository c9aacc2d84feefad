#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace lwir {

// Single error type for the whole library; message carries the context
// (node id, offending dimension, ...).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Dense rank-4 shape, batch/channels/height/width.
struct Shape4 {
    int64_t n = 1;
    int64_t c = 1;
    int64_t h = 1;
    int64_t w = 1;

    int64_t elements() const { return n * c * h * w; }

    bool operator==(const Shape4& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
    bool operator!=(const Shape4& o) const { return !(*this == o); }

    std::string str() const {
        return std::to_string(n) + "x" + std::to_string(c) + "x" +
               std::to_string(h) + "x" + std::to_string(w);
    }

    void validate() const {
        if (n < 1 || c < 1 || h < 1 || w < 1)
            throw Error("shape " + str() + ": all extents must be >= 1");
        // overflow guard: product must fit in int64
        const int64_t lim = std::numeric_limits<int64_t>::max();
        int64_t p = n;
        for (int64_t d : {c, h, w}) {
            if (p > lim / d) throw Error("shape " + str() + ": element count overflows index type");
            p *= d;
        }
    }
};

// Contiguous NCHW float tensor; index = ((b*C + c)*H + y)*W + x.
// Immutable by convention once an op has produced it.
struct Tensor {
    Shape4 shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(Shape4 s, float fill = 0.0f) : shape(s) {
        shape.validate();
        data.assign(static_cast<size_t>(shape.elements()), fill);
    }
    Tensor(Shape4 s, std::vector<float> d) : shape(s), data(std::move(d)) {
        shape.validate();
        if (static_cast<int64_t>(data.size()) != shape.elements())
            throw Error("tensor data length " + std::to_string(data.size()) +
                        " does not match shape " + shape.str());
    }

    int64_t index(int64_t b, int64_t c, int64_t y, int64_t x) const {
        return ((b * shape.c + c) * shape.h + y) * shape.w + x;
    }
    float at(int64_t b, int64_t c, int64_t y, int64_t x) const {
        return data[static_cast<size_t>(index(b, c, y, x))];
    }
    float& at(int64_t b, int64_t c, int64_t y, int64_t x) {
        return data[static_cast<size_t>(index(b, c, y, x))];
    }

    const float* plane(int64_t b, int64_t c) const {
        return data.data() + static_cast<size_t>((b * shape.c + c) * shape.h * shape.w);
    }
    float* plane(int64_t b, int64_t c) {
        return data.data() + static_cast<size_t>((b * shape.c + c) * shape.h * shape.w);
    }
};

enum class PadMode {
    ZeroSame,  // zero padded, output spatial size = ceil(input / stride)
    None,      // valid convolution, no padding
};

// Hyperparameters of a (possibly grouped / dilated / strided) convolution.
struct ConvParams {
    int64_t kernel_h = 3;
    int64_t kernel_w = 3;
    int64_t in_channels = 0;   // M
    int64_t out_channels = 0;  // N
    int64_t stride = 1;
    int64_t dilation = 1;
    int64_t groups = 1;        // g
    PadMode padding = PadMode::ZeroSame;

    void validate() const {
        if (kernel_h < 1 || kernel_w < 1) throw Error("conv: kernel extents must be >= 1");
        if (stride < 1) throw Error("conv: stride must be >= 1");
        if (dilation < 1) throw Error("conv: dilation must be >= 1");
        if (groups < 1) throw Error("conv: groups must be >= 1");
        if (in_channels < 1 || out_channels < 1) throw Error("conv: channel counts must be >= 1");
        if (in_channels % groups != 0)
            throw Error("conv: in_channels " + std::to_string(in_channels) +
                        " not divisible by groups " + std::to_string(groups));
        if (out_channels % groups != 0)
            throw Error("conv: out_channels " + std::to_string(out_channels) +
                        " not divisible by groups " + std::to_string(groups));
    }
};

}  // namespace lwir
