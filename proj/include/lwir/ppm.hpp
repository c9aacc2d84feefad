#pragma once

#include <string>

#include "lwir/tensor.hpp"

namespace lwir {

// Reads an 8-bit binary PGM (P5, one channel) or PPM (P6, three channels)
// into a [1, C, H, W] tensor scaled to [0, 1].
Tensor read_ppm(const std::string& path);

// Writes a [1, 1|3, H, W] tensor as P5/P6, clamping to [0, 1] and rounding.
void write_ppm(const std::string& path, const Tensor& t);

}  // namespace lwir
