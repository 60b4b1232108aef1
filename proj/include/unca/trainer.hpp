#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "unca/image.hpp"
#include "unca/nca.hpp"
#include "unca/rng.hpp"
#include "unca/sinkhorn.hpp"

namespace unca {

struct TrainConfig {
    int n_train = 4000;
    int n_batch = 4;
    int n_pool = 256;
    int seed_rate = 4;        // fresh seed into batch slot 0 every seed_rate iterations
    int n_steps_min = 32;     // rollout length drawn uniformly per iteration
    int n_steps_max = 64;
    int grid_size = 96;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.99;
    double adam_eps = 1e-8;
    bool disable_step_grad_norm = false;  // ablation switches
    bool disable_overflow_loss = false;
    int log_every = 50;       // 0 silences the line log
};

// Persistent training states plus their age in CA steps.
struct Pool {
    GridBatch states;
    std::vector<int64_t> ages;

    static Pool init(int n_pool, int grid_size, const ModelConfig& config, Rng& rng);
    double mean_age() const;
};

struct AdamState {
    std::vector<double> m_w, v_w, m_b, v_b;
    int64_t step = 0;

    explicit AdamState(const Params& shape)
        : m_w(shape.w.size(), 0.0), v_w(shape.w.size(), 0.0),
          m_b(shape.b.size(), 0.0), v_b(shape.b.size(), 0.0) {}

    void update(Params& params, const Params& grad, double lr, double beta1,
                double beta2, double eps);
};

struct TrainReport {
    std::vector<double> texture_loss;
    std::vector<double> overflow_loss;
    std::vector<double> grad_norm;      // pre-normalization parameter gradient norm
    std::vector<double> max_abs_state;  // max |x| over the batch final states
    std::vector<uint8_t> seed_injected; // 1 when slot 0 got a fresh seed
    Params params;
    bool completed = false;
    int abort_iteration = -1;           // 1-based; -1 when completed
    std::string abort_reason;
    double final_pool_mean_age = 0.0;
    bool gradnorm_ablated = false;
    bool overflow_ablated = false;

    int iterations_run() const { return static_cast<int>(texture_loss.size()); }
};

// Sum of |x - clip(x, -1, 1)| over every cell and channel of the batch.
// Gradient is sign(x - clip(x)): zero inside the box and on its boundary.
double overflow_loss(const GridBatch& batch, GridBatch* grad = nullptr);

// Per batch element g / (||g||_2 + 1e-8), the norm taken over the whole
// H x W x C gradient of that element.
void norm_state_grad(GridBatch& grads);

// Reverse-mode transpose of one CA step. grid_in must be the forward input
// of the step being reversed. Returns the gradient wrt grid_in and adds
// this step's parameter gradient into grad_params.
Grid step_backward(const Grid& grid_in, const Params& params, const ModelConfig& config,
                   const Grid& grad_out, Params& grad_params);

// Forward trajectory of a batch rollout; states[0] is the initial batch,
// states[n] the final one.
struct RolloutTape {
    std::vector<GridBatch> states;
    const GridBatch& final_states() const { return states.back(); }
};

RolloutTape rollout_with_tape(const GridBatch& initial, const Params& params,
                              const ModelConfig& config, int n_steps);

// Backpropagation through the unrolled rollout. The state gradient is
// normalized per element before each backward step (the forward loop
// applies norm_grad after every CA step) unless normalize is false.
Params backprop_rollout(const RolloutTape& tape, const Params& params,
                        const ModelConfig& config, const GridBatch& loss_grad_final,
                        bool normalize = true);

// Convenience form that recomputes the forward trajectory.
Params backprop_rollout(const GridBatch& initial, const Params& params,
                        const ModelConfig& config, int n_steps,
                        const GridBatch& loss_grad_final, bool normalize = true);

// Optional mid-training observer, e.g. for preview frames.
struct TrainHooks {
    int checkpoint_every = 0;  // 0 disables
    std::function<void(int iteration, const Params& params)> on_checkpoint;
};

// Sample-pool training. Starts from the zero rule (identity CA), draws
// batches from the pool, unrolls a random number of steps, applies the
// texture + overflow loss, backpropagates with per-step gradient
// normalization, normalizes the total parameter gradient to unit L2 and
// takes an Adam step. Divergence does not throw: the report carries the
// abort iteration, its reason and the losses seen so far.
TrainReport train(const ModelConfig& model_config, const Image& target_image,
                  const TrainConfig& train_config, const OTConfig& ot_config, Rng& rng,
                  const TrainHooks* hooks = nullptr);

struct PixelOptReport {
    Image image;
    std::vector<double> losses;
};

// Adam directly on image pixels against the texture loss, starting from
// uniform noise in [0, 1] (or `init` when given). Exposes the patch-size /
// pyramid-depth control knobs without any CA in the loop.
PixelOptReport optimize_pixels(const Image& target_image, const OTConfig& ot_config,
                               int iterations, double learning_rate, Rng& rng,
                               const Image* init = nullptr);

}  // namespace unca
