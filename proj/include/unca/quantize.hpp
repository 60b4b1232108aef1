#pragma once

#include <cstdint>
#include <vector>

#include "unca/nca.hpp"

namespace unca {

// One signed byte per parameter with per-tensor scales. Dequantized value
// is code * scale; the round-trip error is at most scale/2 elementwise.
// Scales are kept in double precision; the file format narrows them to
// float32 on save.
struct QuantizedModel {
    ModelConfig config;
    std::vector<int8_t> w_q;  // 4C*C codes, same row-major order as Params::w
    std::vector<int8_t> b_q;  // C codes
    double w_scale = 1.0;
    double b_scale = 1.0;
};

// Symmetric per-tensor linear quantization: scale = max|v| / 127, codes
// rounded half away from zero and clamped to [-127, 127]. An all-zero
// tensor gets scale 1. Throws on non-finite parameters.
QuantizedModel quantize(const Params& params, const ModelConfig& config);

Params dequantize(const QuantizedModel& qm);

}  // namespace unca
