#pragma once

#include <string>

#include "unca/quantize.hpp"

namespace unca {

// Standalone C99 texture generator: embedded byte codes and scales,
// toroidal grid, xorshift seeding, 32-bit float inference, and a main that
// writes the clamped RGB channels as a 16-bit binary PPM after N steps.
// Compiles with `cc -O2 -std=c99 gen.c -lm`.
std::string emit_c(const QuantizedModel& qm);

// Fragment shader (GLSL ES 3.00) performing one CA update. The C state
// channels live in ceil(C/4) RGBA planes tiled horizontally in one float
// texture; weights are embedded as dequantized constant arrays.
std::string emit_glsl(const QuantizedModel& qm);

}  // namespace unca
