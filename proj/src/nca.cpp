#include "unca/nca.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "unca/rng.hpp"

namespace unca {

ModelConfig make_config(int n_lap, int n_x, int n_y) {
    if (n_lap < 1) throw std::invalid_argument("make_config: n_lap must be >= 1");
    if (n_x < 0 || n_y < 0) throw std::invalid_argument("make_config: filter counts must be >= 0");
    const int c = n_lap + n_x + n_y;
    if (c < 4) throw std::invalid_argument("make_config: need at least 4 channels, got " + std::to_string(c));
    ModelConfig cfg;
    cfg.n_lap = n_lap;
    cfg.n_x = n_x;
    cfg.n_y = n_y;
    cfg.channels = c;
    cfg.n_params = 4 * c * c + c;
    return cfg;
}

FilterKind filter_kind(const ModelConfig& config, int channel) {
    if (channel < config.n_lap) return FilterKind::Laplacian;
    if (channel < config.n_lap + config.n_x) return FilterKind::SobelX;
    return FilterKind::SobelY;
}

const Kernel3x3& filter_kernel(FilterKind kind) {
    switch (kind) {
        case FilterKind::Laplacian: return kKernelLap;
        case FilterKind::SobelX: return kKernelSobelX;
        default: return kKernelSobelY;
    }
}

std::vector<Kernel3x3> perception_kernels(const ModelConfig& config) {
    std::vector<Kernel3x3> kernels;
    kernels.reserve(config.channels);
    for (int c = 0; c < config.channels; ++c)
        kernels.push_back(filter_kernel(filter_kind(config, c)));
    return kernels;
}

Grid seed_grid(int height, int width, const ModelConfig& config, Rng& rng) {
    if (height < 3 || width < 3)
        throw std::invalid_argument("seed_grid: size must be at least 3x3");
    Grid g(height, width, config.channels);
    for (double& v : g.states) v = rng.uniform_signed();
    return g;
}

PerceptionField perceive(const Grid& grid, const ModelConfig& config) {
    if (grid.channels != config.channels)
        throw std::invalid_argument("perceive: channel mismatch");
    const int h = grid.height, w = grid.width, C = grid.channels;
    PerceptionField p(h, w, 2 * C);
    for (int y = 0; y < h; ++y) {
        const int ym = (y + h - 1) % h, yp = (y + 1) % h;
        const int ys[3] = {ym, y, yp};
        for (int x = 0; x < w; ++x) {
            const int xm = (x + w - 1) % w, xp = (x + 1) % w;
            const int xs[3] = {xm, x, xp};
            for (int c = 0; c < C; ++c) {
                p.at(y, x, c) = grid.at(y, x, c);
                const Kernel3x3& k = filter_kernel(filter_kind(config, c));
                double acc = 0.0;
                for (int dy = 0; dy < 3; ++dy)
                    for (int dx = 0; dx < 3; ++dx)
                        acc += k[dy * 3 + dx] * grid.at(ys[dy], xs[dx], c);
                p.at(y, x, C + c) = acc;
            }
        }
    }
    return p;
}

Grid step(const Grid& grid, const Params& params, const ModelConfig& config) {
    const int C = config.channels;
    if (grid.channels != C || params.channels != C)
        throw std::invalid_argument("step: shape mismatch");
    const PerceptionField p = perceive(grid, config);
    Grid out(grid.height, grid.width, C);
    std::vector<double> y(static_cast<size_t>(4) * C);
    double max_abs = 0.0;
    for (int yy = 0; yy < grid.height; ++yy) {
        for (int xx = 0; xx < grid.width; ++xx) {
            for (int c = 0; c < 2 * C; ++c) {
                const double v = p.at(yy, xx, c);
                y[c] = v;
                y[2 * C + c] = std::abs(v);
            }
            for (int j = 0; j < C; ++j) {
                double acc = grid.at(yy, xx, j) + params.b[j];
                for (int k = 0; k < 4 * C; ++k)
                    acc += y[k] * params.w[static_cast<size_t>(k) * C + j];
                out.at(yy, xx, j) = acc;
                max_abs = std::max(max_abs, std::abs(acc));
            }
        }
    }
    if (!std::isfinite(max_abs))
        throw std::runtime_error("step: non-finite state");
    return out;
}

Grid rollout(const Grid& grid, const Params& params, const ModelConfig& config, int n_steps) {
    if (n_steps < 0) throw std::invalid_argument("rollout: n_steps must be >= 0");
    Grid g = grid;
    for (int i = 0; i < n_steps; ++i) g = step(g, params, config);
    return g;
}

Image to_rgb(const Grid& grid) {
    if (grid.channels < 3) throw std::invalid_argument("to_rgb: need at least 3 channels");
    Image img(grid.height, grid.width, 3);
    for (int y = 0; y < grid.height; ++y)
        for (int x = 0; x < grid.width; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(y, x, c) = std::clamp(grid.at(y, x, c), 0.0, 1.0);
    return img;
}

Image rgb_channels(const Grid& grid) {
    if (grid.channels < 3) throw std::invalid_argument("rgb_channels: need at least 3 channels");
    Image img(grid.height, grid.width, 3);
    for (int y = 0; y < grid.height; ++y)
        for (int x = 0; x < grid.width; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(y, x, c) = grid.at(y, x, c);
    return img;
}

}  // namespace unca
