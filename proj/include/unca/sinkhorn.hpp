#pragma once

#include <vector>

namespace unca {

// Entropic OT settings. epsilon is relative: the solver uses
// eps = epsilon * mean(cost matrix) so one value works across patch scales.
struct OTConfig {
    double epsilon = 0.05;      // relative entropic regularization
    int max_iters = 200;        // Sinkhorn iteration cap
    double tolerance = 1e-6;    // L-inf marginal violation stop
    int n_subsample = 2048;     // rows drawn per level by the subsampler
    bool debiased = true;       // OT(x,y) - (OT(x,x) + OT(y,y)) / 2
    int patch_size = 5;         // K
    int n_levels = 4;           // pyramid depth
};

struct SinkhornResult {
    double value = 0.0;
    std::vector<double> grad_x;  // n x d, row-major; same layout as x
    bool converged = true;
    double final_violation = 0.0;
    int iterations = 0;
};

// Divergence between uniform-weight point sets (rows of x and y, both of
// width d) under squared Euclidean cost, solved by log-domain Sinkhorn.
// All terms share eps = cfg.epsilon * mean(C_xy). grad_x holds
// d(value)/dx via the envelope theorem (converged transport plans held
// fixed), including the path through the x-dependent eps, so it matches
// finite differences to solver precision. With cfg.debiased the value is
// OT_eps(x,y) - OT_eps(x,x)/2 - OT_eps(y,y)/2, exactly zero (value and
// gradient) for identical inputs. Throws on empty or non-finite inputs; a
// run that hits max_iters above tolerance is reported through `converged`
// and `final_violation`, not an exception.
SinkhornResult sinkhorn_divergence(const std::vector<double>& x, int n,
                                   const std::vector<double>& y, int m,
                                   int d, const OTConfig& cfg);

// Brute-force OT between equal-size uniform-weight sets:
// min over permutations of (1/n) * sum_i ||x_i - y_sigma(i)||^2.
// Test oracle; rejects n > 8.
double exact_ot_oracle(const std::vector<double>& x, const std::vector<double>& y, int n, int d);

}  // namespace unca
