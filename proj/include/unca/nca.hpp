#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "unca/image.hpp"
#include "unca/rng.hpp"

namespace unca {

// Filter configuration. The channel count is the number of depthwise
// filters, the rule itself is a single (4C x C) matrix plus bias.
struct ModelConfig {
    int n_lap = 0;
    int n_x = 0;
    int n_y = 0;
    int channels = 0;  // C = n_lap + n_x + n_y
    int n_params = 0;  // 4*C*C + C
};

// The entire learned rule: W is (4C x C) row-major (perception index k
// outer, output channel j inner), b has length C.
struct Params {
    int channels = 0;
    std::vector<double> w;  // w[k * channels + j], k in [0, 4C)
    std::vector<double> b;  // b[j]

    explicit Params(int c = 0)
        : channels(c), w(static_cast<size_t>(4) * c * c, 0.0), b(c, 0.0) {}

    size_t flat_size() const { return w.size() + b.size(); }
    double& flat(size_t i) { return i < w.size() ? w[i] : b[i - w.size()]; }
    double flat(size_t i) const { return i < w.size() ? w[i] : b[i - w.size()]; }
};

// H x W x C cell-state field, row-major (y, x, c). Toroidal topology.
struct Grid {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> states;

    Grid() = default;
    Grid(int h, int w, int c) : height(h), width(w), channels(c),
        states(static_cast<size_t>(h) * w * c, 0.0) {}

    double& at(int y, int x, int c) {
        return states[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    double at(int y, int x, int c) const {
        return states[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    size_t size() const { return states.size(); }
    bool same_shape(const Grid& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
};

using GridBatch = std::vector<Grid>;

// State concatenated with the per-channel filter responses: 2C channels,
// first C equal the input grid exactly.
struct PerceptionField {
    int height = 0;
    int width = 0;
    int channels = 0;  // 2C
    std::vector<double> values;

    PerceptionField() = default;
    PerceptionField(int h, int w, int c2) : height(h), width(w), channels(c2),
        values(static_cast<size_t>(h) * w * c2, 0.0) {}

    double& at(int y, int x, int c) {
        return values[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    double at(int y, int x, int c) const {
        return values[(static_cast<size_t>(y) * width + x) * channels + c];
    }
};

enum class FilterKind : uint8_t { Laplacian = 0, SobelX = 1, SobelY = 2 };

using Kernel3x3 = std::array<double, 9>;

inline constexpr Kernel3x3 kKernelLap{1, 2, 1, 2, -12, 2, 1, 2, 1};
inline constexpr Kernel3x3 kKernelSobelX{-1, 0, 1, -2, 0, 2, -1, 0, 1};
inline constexpr Kernel3x3 kKernelSobelY{-1, -2, -1, 0, 0, 0, 1, 2, 1};

// Throws std::invalid_argument when n_lap < 1, a count is negative, or the
// resulting channel count is below 4 (RGB plus at least one latent channel).
ModelConfig make_config(int n_lap, int n_x, int n_y);

FilterKind filter_kind(const ModelConfig& config, int channel);
const Kernel3x3& filter_kernel(FilterKind kind);

// One 3x3 kernel per channel: n_lap Laplacians, then n_x Sobel-x, then
// n_y Sobel-y. Kernel i is applied depthwise to channel i only.
std::vector<Kernel3x3> perception_kernels(const ModelConfig& config);

// Fresh state: every entry i.i.d. uniform in [-0.5, 0.5). Rejects sizes
// below the 3x3 kernel support.
Grid seed_grid(int height, int width, const ModelConfig& config, Rng& rng);

// Cross-correlation (no kernel flip) with toroidal wrap, one filter per
// channel; output is [s, K_i * s^i].
PerceptionField perceive(const Grid& grid, const ModelConfig& config);

// One CA update: p = perceive, y = concat(p, |p|), s_next = s + yW + b.
// Deterministic; throws std::runtime_error if the result is non-finite.
Grid step(const Grid& grid, const Params& params, const ModelConfig& config);

// n_steps sequential applications of step.
Grid rollout(const Grid& grid, const Params& params, const ModelConfig& config, int n_steps);

// Channels 0..2 clamped to [0, 1].
Image to_rgb(const Grid& grid);

// Channels 0..2 without clamping; this is what the texture loss sees.
Image rgb_channels(const Grid& grid);

}  // namespace unca
