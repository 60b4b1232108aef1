#include "unca/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace unca {

namespace {

// Row-major n x m squared-distance matrix.
std::vector<double> squared_distances(const std::vector<double>& x, int n,
                                      const std::vector<double>& y, int m, int d) {
    std::vector<double> xn(n), yn(m);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) s += x[i * d + k] * x[i * d + k];
        xn[i] = s;
    }
    for (int j = 0; j < m; ++j) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) s += y[j * d + k] * y[j * d + k];
        yn[j] = s;
    }
    std::vector<double> cost(static_cast<size_t>(n) * m);
    for (int i = 0; i < n; ++i) {
        const double* xi = &x[static_cast<size_t>(i) * d];
        double* row = &cost[static_cast<size_t>(i) * m];
        for (int j = 0; j < m; ++j) {
            const double* yj = &y[static_cast<size_t>(j) * d];
            double dot = 0.0;
            for (int k = 0; k < d; ++k) dot += xi[k] * yj[k];
            // max() guards the tiny negatives cancellation can produce
            row[j] = std::max(0.0, xn[i] + yn[j] - 2.0 * dot);
        }
    }
    return cost;
}

struct Potentials {
    std::vector<double> phi, psi;  // f/eps and g/eps
    double value = 0.0;            // <a,f> + <b,g> - eps*(sum P - 1)
    double dvalue_deps = 0.0;      // partial of the dual value in eps
    bool converged = false;
    double violation = 0.0;
    int iterations = 0;
};

// Balanced log-domain Sinkhorn with uniform marginals a_i = 1/n, b_j = 1/m
// on the pre-scaled cost ceps = C / eps. Plan convention:
// P_ij = a_i * b_j * exp(phi_i + psi_j - ceps_ij). The row-marginal
// violation comes for free from the phi increment: right before phi is
// refreshed, row i of the current plan sums to a_i * exp(phi_i - phi_new_i).
Potentials solve(const std::vector<double>& ceps, int n, int m, double eps,
                 double tolerance, int max_iters) {
    Potentials pot;
    pot.phi.assign(n, 0.0);
    pot.psi.assign(m, 0.0);
    const double log_a = -std::log(static_cast<double>(n));
    const double log_b = -std::log(static_cast<double>(m));
    const double a = std::exp(log_a);
    std::vector<double> col_max(m), col_sum(m);

    for (int it = 1; it <= max_iters; ++it) {
        double viol = 0.0;
        for (int i = 0; i < n; ++i) {
            const double* row = &ceps[static_cast<size_t>(i) * m];
            double mx = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < m; ++j)
                mx = std::max(mx, pot.psi[j] - row[j]);
            double s = 0.0;
            for (int j = 0; j < m; ++j)
                s += std::exp(pot.psi[j] - row[j] - mx);
            const double phi_new = -(log_b + mx + std::log(s));
            viol = std::max(viol, a * std::abs(std::expm1(pot.phi[i] - phi_new)));
            pot.phi[i] = phi_new;
        }
        // psi update, column-wise two-pass over the row-major matrix;
        // afterwards the column marginals are exact.
        std::fill(col_max.begin(), col_max.end(), -std::numeric_limits<double>::infinity());
        for (int i = 0; i < n; ++i) {
            const double* row = &ceps[static_cast<size_t>(i) * m];
            const double phi_i = pot.phi[i];
            for (int j = 0; j < m; ++j)
                col_max[j] = std::max(col_max[j], phi_i - row[j]);
        }
        std::fill(col_sum.begin(), col_sum.end(), 0.0);
        for (int i = 0; i < n; ++i) {
            const double* row = &ceps[static_cast<size_t>(i) * m];
            const double phi_i = pot.phi[i];
            for (int j = 0; j < m; ++j)
                col_sum[j] += std::exp(phi_i - row[j] - col_max[j]);
        }
        for (int j = 0; j < m; ++j)
            pot.psi[j] = -(log_a + col_max[j] + std::log(col_sum[j]));

        pot.violation = viol;
        pot.iterations = it;
        if (!std::isfinite(viol)) throw std::runtime_error("sinkhorn: diverged");
        if (viol < tolerance) {
            pot.converged = true;
            break;
        }
    }

    const double log_ab = log_a + log_b;
    double fa = 0.0, gb = 0.0, mass = 0.0, plan_log = 0.0;
    for (int i = 0; i < n; ++i) fa += pot.phi[i];
    for (int j = 0; j < m; ++j) gb += pot.psi[j];
    for (int i = 0; i < n; ++i) {
        const double* row = &ceps[static_cast<size_t>(i) * m];
        const double phi_i = pot.phi[i];
        for (int j = 0; j < m; ++j) {
            const double log_p = phi_i + pot.psi[j] - row[j];
            const double p = std::exp(log_ab + log_p);
            mass += p;
            plan_log += p * log_p;  // sum P * log(P / (a x b))
        }
    }
    pot.value = eps * (fa / n + gb / m - (mass - 1.0));
    // d/d(eps) of the dual at fixed unscaled potentials.
    pot.dvalue_deps = -(mass - 1.0) + plan_log;
    return pot;
}

// grad_i += sign * 2 * ((P 1)_i * x_i - (P y)_i) with P from the potentials.
void accumulate_plan_gradient(const std::vector<double>& ceps, int n, int m, int d,
                              const Potentials& pot,
                              const std::vector<double>& x, const std::vector<double>& y,
                              double sign, std::vector<double>& grad) {
    const double log_ab = -std::log(static_cast<double>(n)) - std::log(static_cast<double>(m));
    std::vector<double> py(d);
    for (int i = 0; i < n; ++i) {
        const double* row = &ceps[static_cast<size_t>(i) * m];
        const double phi_i = pot.phi[i];
        std::fill(py.begin(), py.end(), 0.0);
        double prow = 0.0;
        for (int j = 0; j < m; ++j) {
            const double p = std::exp(log_ab + phi_i + pot.psi[j] - row[j]);
            prow += p;
            const double* yj = &y[static_cast<size_t>(j) * d];
            for (int k = 0; k < d; ++k) py[k] += p * yj[k];
        }
        double* gi = &grad[static_cast<size_t>(i) * d];
        const double* xi = &x[static_cast<size_t>(i) * d];
        for (int k = 0; k < d; ++k)
            gi[k] += sign * 2.0 * (prow * xi[k] - py[k]);
    }
}

void scale_in_place(std::vector<double>& cost, double inv_eps) {
    for (double& v : cost) v *= inv_eps;
}

// eps = eps_rel * mean(C_xy) moves with x, so the envelope gradient picks
// up coeff * d(eps)/dx_i with d(mean C)/dx_i = (2/(nm)) * (m x_i - sum_j y_j).
void accumulate_eps_gradient(const std::vector<double>& x, int n,
                             const std::vector<double>& y, int m, int d,
                             double coeff, std::vector<double>& grad) {
    std::vector<double> ysum(d, 0.0);
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < d; ++k) ysum[k] += y[j * d + k];
    const double scale = coeff * 2.0 / (static_cast<double>(n) * m);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < d; ++k)
            grad[static_cast<size_t>(i) * d + k] += scale * (m * x[i * d + k] - ysum[k]);
}

}  // namespace

SinkhornResult sinkhorn_divergence(const std::vector<double>& x, int n,
                                   const std::vector<double>& y, int m,
                                   int d, const OTConfig& cfg) {
    if (n < 1 || m < 1 || d < 1) throw std::invalid_argument("sinkhorn: empty input");
    if (cfg.epsilon <= 0.0) throw std::invalid_argument("sinkhorn: epsilon must be > 0");
    for (double v : x)
        if (!std::isfinite(v)) throw std::runtime_error("sinkhorn: non-finite input");
    for (double v : y)
        if (!std::isfinite(v)) throw std::runtime_error("sinkhorn: non-finite input");

    std::vector<double> cost_xy = squared_distances(x, n, y, m, d);
    const double mean_cost = std::accumulate(cost_xy.begin(), cost_xy.end(), 0.0) /
                             static_cast<double>(cost_xy.size());
    SinkhornResult res;
    res.grad_x.assign(static_cast<size_t>(n) * d, 0.0);
    if (mean_cost == 0.0) return res;  // all points coincide

    // One shared eps for all three terms so identical inputs cancel exactly.
    const double eps = cfg.epsilon * mean_cost;
    scale_in_place(cost_xy, 1.0 / eps);
    const Potentials xy = solve(cost_xy, n, m, eps, cfg.tolerance, cfg.max_iters);
    res.converged = xy.converged;
    res.final_violation = xy.violation;
    res.iterations = xy.iterations;

    if (!cfg.debiased) {
        res.value = xy.value;
        accumulate_plan_gradient(cost_xy, n, m, d, xy, x, y, +1.0, res.grad_x);
        accumulate_eps_gradient(x, n, y, m, d, cfg.epsilon * xy.dvalue_deps, res.grad_x);
        return res;
    }

    std::vector<double> cost_xx = squared_distances(x, n, x, n, d);
    std::vector<double> cost_yy = squared_distances(y, m, y, m, d);
    scale_in_place(cost_xx, 1.0 / eps);
    scale_in_place(cost_yy, 1.0 / eps);
    const Potentials xx = solve(cost_xx, n, n, eps, cfg.tolerance, cfg.max_iters);
    const Potentials yy = solve(cost_yy, m, m, eps, cfg.tolerance, cfg.max_iters);
    res.converged = res.converged && xx.converged && yy.converged;
    res.final_violation = std::max({xy.violation, xx.violation, yy.violation});
    res.iterations = std::max({xy.iterations, xx.iterations, yy.iterations});
    res.value = xy.value - 0.5 * xx.value - 0.5 * yy.value;

    // d/dx [OT(x,y) - OT(x,x)/2]: the marginal terms cancel, leaving
    // 2 * ((P_xx x)_i - (P_xy y)_i), plus the shared-eps path through all
    // three dual values. Identical inputs still cancel to an exact zero.
    accumulate_plan_gradient(cost_xy, n, m, d, xy, x, y, +1.0, res.grad_x);
    accumulate_plan_gradient(cost_xx, n, n, d, xx, x, x, -1.0, res.grad_x);
    const double eps_coeff =
        cfg.epsilon * (xy.dvalue_deps - 0.5 * xx.dvalue_deps - 0.5 * yy.dvalue_deps);
    accumulate_eps_gradient(x, n, y, m, d, eps_coeff, res.grad_x);
    return res;
}

double exact_ot_oracle(const std::vector<double>& x, const std::vector<double>& y, int n, int d) {
    if (n > 8) throw std::invalid_argument("exact_ot_oracle: n must be <= 8");
    if (n < 1) throw std::invalid_argument("exact_ot_oracle: empty input");
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            double sq = 0.0;
            for (int k = 0; k < d; ++k) {
                const double diff = x[i * d + k] - y[perm[i] * d + k];
                sq += diff * diff;
            }
            total += sq;
        }
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / n;
}

}  // namespace unca
