#include "unca/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "unca/pyramid.hpp"
#include "unca/texture_loss.hpp"

namespace unca {

Pool Pool::init(int n_pool, int grid_size, const ModelConfig& config, Rng& rng) {
    Pool pool;
    pool.states.reserve(n_pool);
    for (int i = 0; i < n_pool; ++i)
        pool.states.push_back(seed_grid(grid_size, grid_size, config, rng));
    pool.ages.assign(n_pool, 0);
    return pool;
}

double Pool::mean_age() const {
    if (ages.empty()) return 0.0;
    return static_cast<double>(std::accumulate(ages.begin(), ages.end(), int64_t{0})) /
           static_cast<double>(ages.size());
}

void AdamState::update(Params& params, const Params& grad, double lr, double beta1,
                       double beta2, double eps) {
    ++step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    auto apply = [&](std::vector<double>& p, const std::vector<double>& g,
                     std::vector<double>& m, std::vector<double>& v) {
        for (size_t i = 0; i < p.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
        }
    };
    apply(params.w, grad.w, m_w, v_w);
    apply(params.b, grad.b, m_b, v_b);
}

double overflow_loss(const GridBatch& batch, GridBatch* grad) {
    double value = 0.0;
    if (grad) {
        grad->clear();
        grad->reserve(batch.size());
    }
    for (const Grid& g : batch) {
        Grid gg(g.height, g.width, g.channels);
        for (size_t i = 0; i < g.states.size(); ++i) {
            const double x = g.states[i];
            if (x > 1.0) {
                value += x - 1.0;
                gg.states[i] = 1.0;
            } else if (x < -1.0) {
                value += -1.0 - x;
                gg.states[i] = -1.0;
            }
        }
        if (grad) grad->push_back(std::move(gg));
    }
    return value;
}

void norm_state_grad(GridBatch& grads) {
    for (Grid& g : grads) {
        double sq = 0.0;
        for (double v : g.states) sq += v * v;
        const double inv = 1.0 / (std::sqrt(sq) + 1e-8);
        for (double& v : g.states) v *= inv;
    }
}

Grid step_backward(const Grid& grid_in, const Params& params, const ModelConfig& config,
                   const Grid& grad_out, Params& grad_params) {
    const int C = config.channels;
    if (!grid_in.same_shape(grad_out) || params.channels != C)
        throw std::invalid_argument("step_backward: shape mismatch");
    const int h = grid_in.height, w = grid_in.width;
    const PerceptionField p = perceive(grid_in, config);

    Grid grad_in(h, w, C);
    // Gradient wrt the filtered half of p, per channel; the raw half folds
    // directly into grad_in.
    std::vector<double> grad_filt(static_cast<size_t>(h) * w * C, 0.0);
    std::vector<double> y(static_cast<size_t>(4) * C), gy(static_cast<size_t>(4) * C);

    for (int yy = 0; yy < h; ++yy) {
        for (int xx = 0; xx < w; ++xx) {
            for (int c = 0; c < 2 * C; ++c) {
                const double v = p.at(yy, xx, c);
                y[c] = v;
                y[2 * C + c] = std::abs(v);
            }
            const double* go = &grad_out.states[(static_cast<size_t>(yy) * w + xx) * C];

            // s_next = s + yW + b
            for (int j = 0; j < C; ++j) {
                grad_in.at(yy, xx, j) += go[j];
                grad_params.b[j] += go[j];
            }
            for (int k = 0; k < 4 * C; ++k) {
                const double* wrow = &params.w[static_cast<size_t>(k) * C];
                double acc = 0.0;
                for (int j = 0; j < C; ++j) {
                    acc += go[j] * wrow[j];
                    grad_params.w[static_cast<size_t>(k) * C + j] += y[k] * go[j];
                }
                gy[k] = acc;
            }

            // y = concat(p, |p|); d|p|/dp = sign(p), sign(0) = 0
            for (int c = 0; c < 2 * C; ++c) {
                const double v = p.at(yy, xx, c);
                const double s = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
                const double gp = gy[c] + gy[2 * C + c] * s;
                if (c < C) grad_in.at(yy, xx, c) += gp;
                else grad_filt[(static_cast<size_t>(yy) * w + xx) * C + (c - C)] = gp;
            }
        }
    }

    // Adjoint of the depthwise toroidal correlation: scatter each output
    // gradient through the kernel taps (equivalent to correlating with the
    // 180-degree rotated kernel).
    for (int yy = 0; yy < h; ++yy) {
        const int ys[3] = {(yy + h - 1) % h, yy, (yy + 1) % h};
        for (int xx = 0; xx < w; ++xx) {
            const int xs[3] = {(xx + w - 1) % w, xx, (xx + 1) % w};
            for (int c = 0; c < C; ++c) {
                const double gf = grad_filt[(static_cast<size_t>(yy) * w + xx) * C + c];
                if (gf == 0.0) continue;
                const Kernel3x3& k = filter_kernel(filter_kind(config, c));
                for (int dy = 0; dy < 3; ++dy)
                    for (int dx = 0; dx < 3; ++dx)
                        grad_in.at(ys[dy], xs[dx], c) += k[dy * 3 + dx] * gf;
            }
        }
    }
    return grad_in;
}

RolloutTape rollout_with_tape(const GridBatch& initial, const Params& params,
                              const ModelConfig& config, int n_steps) {
    RolloutTape tape;
    tape.states.reserve(n_steps + 1);
    tape.states.push_back(initial);
    for (int i = 0; i < n_steps; ++i) {
        GridBatch next;
        next.reserve(initial.size());
        for (const Grid& g : tape.states.back())
            next.push_back(step(g, params, config));
        tape.states.push_back(std::move(next));
    }
    return tape;
}

Params backprop_rollout(const RolloutTape& tape, const Params& params,
                        const ModelConfig& config, const GridBatch& loss_grad_final,
                        bool normalize) {
    const int n_steps = static_cast<int>(tape.states.size()) - 1;
    const size_t batch = loss_grad_final.size();
    if (tape.states.empty() || tape.states[0].size() != batch)
        throw std::invalid_argument("backprop_rollout: batch mismatch");

    Params grad_params(params.channels);
    GridBatch grad = loss_grad_final;
    for (int s = n_steps; s >= 1; --s) {
        // Forward order is step then norm_grad, so the backward pass
        // normalizes before reversing each step.
        if (normalize) norm_state_grad(grad);
        GridBatch prev;
        prev.reserve(batch);
        for (size_t e = 0; e < batch; ++e)
            prev.push_back(step_backward(tape.states[s - 1][e], params, config,
                                         grad[e], grad_params));
        grad = std::move(prev);
    }
    for (double v : grad_params.w)
        if (!std::isfinite(v)) throw std::runtime_error("backprop_rollout: non-finite gradient");
    for (double v : grad_params.b)
        if (!std::isfinite(v)) throw std::runtime_error("backprop_rollout: non-finite gradient");
    return grad_params;
}

Params backprop_rollout(const GridBatch& initial, const Params& params,
                        const ModelConfig& config, int n_steps,
                        const GridBatch& loss_grad_final, bool normalize) {
    return backprop_rollout(rollout_with_tape(initial, params, config, n_steps),
                            params, config, loss_grad_final, normalize);
}

namespace {

double params_norm(const Params& p) {
    double sq = 0.0;
    for (double v : p.w) sq += v * v;
    for (double v : p.b) sq += v * v;
    return std::sqrt(sq);
}

}  // namespace

TrainReport train(const ModelConfig& model_config, const Image& target_image,
                  const TrainConfig& tc, const OTConfig& ot, Rng& rng,
                  const TrainHooks* hooks) {
    if (tc.n_batch < 1 || tc.n_batch > tc.n_pool)
        throw std::invalid_argument("train: need 1 <= n_batch <= n_pool");
    if (tc.seed_rate < 1) throw std::invalid_argument("train: seed_rate must be >= 1");
    if (tc.n_steps_min < 1 || tc.n_steps_min > tc.n_steps_max)
        throw std::invalid_argument("train: bad rollout length range");

    const PatchFeatures target_feats =
        extract_features(target_image, ot.n_levels, ot.patch_size);

    TrainReport report;
    report.params = Params(model_config.channels);  // zero init: identity rule
    report.gradnorm_ablated = tc.disable_step_grad_norm;
    report.overflow_ablated = tc.disable_overflow_loss;

    Pool pool = Pool::init(tc.n_pool, tc.grid_size, model_config, rng);
    AdamState adam(report.params);

    auto abort = [&](int iteration, const std::string& reason) {
        report.completed = false;
        report.abort_iteration = iteration;
        report.abort_reason = reason;
        report.final_pool_mean_age = pool.mean_age();
        if (tc.log_every > 0)
            std::fprintf(stderr, "train: aborted at iteration %d: %s\n", iteration, reason.c_str());
    };

    for (int it = 1; it <= tc.n_train; ++it) {
        // Sample n_batch distinct pool slots.
        std::vector<int> slots = subsample_indices(tc.n_pool, tc.n_batch, rng);
        GridBatch batch;
        batch.reserve(tc.n_batch);
        for (int s : slots) batch.push_back(pool.states[s]);

        const bool inject = it % tc.seed_rate == 0;
        report.seed_injected.push_back(inject ? 1 : 0);
        if (inject) {
            batch[0] = seed_grid(tc.grid_size, tc.grid_size, model_config, rng);
            pool.ages[slots[0]] = 0;
        }
        const int n_steps = static_cast<int>(
            rng.uniform_int(static_cast<uint64_t>(tc.n_steps_min),
                            static_cast<uint64_t>(tc.n_steps_max)));

        RolloutTape tape;
        try {
            tape = rollout_with_tape(batch, report.params, model_config, n_steps);
        } catch (const std::runtime_error& e) {
            abort(it, e.what());
            return report;
        }
        const GridBatch& final_states = tape.final_states();

        std::vector<Image> gen_images;
        gen_images.reserve(final_states.size());
        for (const Grid& g : final_states) gen_images.push_back(rgb_channels(g));

        TextureLossResult tex;
        try {
            tex = texture_loss(gen_images, target_feats, ot, rng.next());
        } catch (const std::runtime_error& e) {
            abort(it, e.what());
            return report;
        }

        GridBatch ovf_grad;
        const double ovf_value = overflow_loss(final_states, &ovf_grad);

        // Loss gradient wrt the final states: texture into RGB channels,
        // overflow into all channels unless ablated.
        GridBatch state_grad;
        state_grad.reserve(final_states.size());
        for (size_t e = 0; e < final_states.size(); ++e) {
            Grid g = tc.disable_overflow_loss
                         ? Grid(final_states[e].height, final_states[e].width,
                                final_states[e].channels)
                         : ovf_grad[e];
            for (int y = 0; y < g.height; ++y)
                for (int x = 0; x < g.width; ++x)
                    for (int c = 0; c < 3; ++c)
                        g.at(y, x, c) += tex.grads[e].at(y, x, c);
            state_grad.push_back(std::move(g));
        }

        Params grad;
        try {
            grad = backprop_rollout(tape, report.params, model_config, state_grad,
                                    !tc.disable_step_grad_norm);
        } catch (const std::runtime_error& e) {
            report.texture_loss.push_back(tex.value);
            report.overflow_loss.push_back(ovf_value);
            abort(it, e.what());
            return report;
        }

        const double gnorm = params_norm(grad);
        if (gnorm > 0.0) {
            for (double& v : grad.w) v /= gnorm;
            for (double& v : grad.b) v /= gnorm;
        }
        adam.update(report.params, grad, tc.learning_rate, tc.adam_beta1,
                    tc.adam_beta2, tc.adam_eps);

        double max_abs = 0.0;
        for (const Grid& g : final_states)
            for (double v : g.states) max_abs = std::max(max_abs, std::abs(v));

        // Evolved states go back to the slots they came from.
        for (size_t e = 0; e < final_states.size(); ++e) {
            pool.states[slots[e]] = final_states[e];
            pool.ages[slots[e]] += n_steps;
        }

        report.texture_loss.push_back(tex.value);
        report.overflow_loss.push_back(ovf_value);
        report.grad_norm.push_back(gnorm);
        report.max_abs_state.push_back(max_abs);

        if (tc.log_every > 0 && (it % tc.log_every == 0 || it == 1))
            std::fprintf(stderr, "iter %5d  L_texture %.6f  L_overflow %.6f  |grad| %.4g  max|x| %.3f\n",
                         it, tex.value, ovf_value, gnorm, max_abs);
        if (hooks && hooks->checkpoint_every > 0 && hooks->on_checkpoint &&
            it % hooks->checkpoint_every == 0)
            hooks->on_checkpoint(it, report.params);
    }

    report.completed = true;
    report.final_pool_mean_age = pool.mean_age();
    return report;
}

PixelOptReport optimize_pixels(const Image& target_image, const OTConfig& ot,
                               int iterations, double learning_rate, Rng& rng,
                               const Image* init) {
    const PatchFeatures target_feats =
        extract_features(target_image, ot.n_levels, ot.patch_size);

    PixelOptReport report;
    if (init) {
        report.image = *init;
    } else {
        report.image = Image(target_image.height, target_image.width, target_image.channels);
        for (double& v : report.image.data) v = rng.uniform();
    }

    std::vector<double> m(report.image.size(), 0.0), v(report.image.size(), 0.0);
    const double beta1 = 0.9, beta2 = 0.99, eps = 1e-8;
    for (int it = 1; it <= iterations; ++it) {
        const TextureLossResult res = texture_loss(report.image, target_feats, ot, rng.next());
        report.losses.push_back(res.value);
        const double bc1 = 1.0 - std::pow(beta1, it);
        const double bc2 = 1.0 - std::pow(beta2, it);
        for (size_t i = 0; i < report.image.size(); ++i) {
            const double g = res.grads[0].data[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            report.image.data[i] -= learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
        }
    }
    return report;
}

}  // namespace unca
