#include "unca/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace unca {

namespace {

double tensor_scale(const std::vector<double>& v) {
    double max_abs = 0.0;
    for (double x : v) {
        if (!std::isfinite(x)) throw std::invalid_argument("quantize: non-finite parameter");
        max_abs = std::max(max_abs, std::abs(x));
    }
    return max_abs == 0.0 ? 1.0 : max_abs / 127.0;
}

std::vector<int8_t> encode(const std::vector<double>& v, double scale) {
    std::vector<int8_t> codes(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
        const double q = std::round(v[i] / scale);  // half away from zero
        codes[i] = static_cast<int8_t>(std::clamp(q, -127.0, 127.0));
    }
    return codes;
}

}  // namespace

QuantizedModel quantize(const Params& params, const ModelConfig& config) {
    if (params.channels != config.channels)
        throw std::invalid_argument("quantize: config mismatch");
    QuantizedModel qm;
    qm.config = config;
    qm.w_scale = tensor_scale(params.w);
    qm.b_scale = tensor_scale(params.b);
    qm.w_q = encode(params.w, qm.w_scale);
    qm.b_q = encode(params.b, qm.b_scale);
    return qm;
}

Params dequantize(const QuantizedModel& qm) {
    Params p(qm.config.channels);
    for (size_t i = 0; i < qm.w_q.size(); ++i)
        p.w[i] = static_cast<double>(qm.w_q[i]) * qm.w_scale;
    for (size_t i = 0; i < qm.b_q.size(); ++i)
        p.b[i] = static_cast<double>(qm.b_q[i]) * qm.b_scale;
    return p;
}

}  // namespace unca
