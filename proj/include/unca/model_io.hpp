#pragma once

#include <stdexcept>
#include <string>

#include "unca/nca.hpp"
#include "unca/quantize.hpp"

namespace unca {

// Binary model file, little-endian:
//   bytes 0..3   magic "uNCA"
//   byte  4      version (1)
//   byte  5      mode: 0 = float32 parameters, 1 = quantized
//   bytes 6..8   n_lap, n_x, n_y
//   quantized:   w_scale, b_scale as float32, then n_params int8 codes
//                (W row-major over the 4C perception rows, then b)
//   float32:     n_params float32 in the same order
// Loading validates magic, version and the exact file length.

struct BadMagicError : std::runtime_error { using std::runtime_error::runtime_error; };
struct BadVersionError : std::runtime_error { using std::runtime_error::runtime_error; };
struct BadLengthError : std::runtime_error { using std::runtime_error::runtime_error; };

struct ModelFile {
    ModelConfig config;
    bool quantized = false;
    Params params;        // dequantized when quantized == true
    QuantizedModel qm;    // valid only when quantized == true
};

void save_model(const Params& params, const ModelConfig& config, const std::string& path);
void save_model(const QuantizedModel& qm, const std::string& path);
ModelFile load_model(const std::string& path);

// Header bytes preceding the parameter payload for each mode.
constexpr size_t kFloatHeaderBytes = 9;
constexpr size_t kQuantHeaderBytes = 17;

}  // namespace unca
