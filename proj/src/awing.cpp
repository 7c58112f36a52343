#include "glenoid/awing.hpp"

#include <cmath>
#include <stdexcept>

namespace glenoid {

void validate(const AWingParams& p) {
    if (p.omega <= 0.0 || p.epsilon <= 0.0 || p.theta <= 0.0)
        throw std::invalid_argument("awing: omega, epsilon, theta must be positive");
    if (p.alpha <= 1.0) throw std::invalid_argument("awing: alpha must exceed 1");
}

AWingConstants awing_constants(double y, const AWingParams& p) {
    validate(p);
    const double e = p.alpha - y;
    const double te = std::pow(p.theta / p.epsilon, e);
    AWingConstants k;
    k.a_slope = p.omega * (1.0 / (1.0 + te)) * e * std::pow(p.theta / p.epsilon, e - 1.0) /
                p.epsilon;
    k.c_offset = p.theta * k.a_slope - p.omega * std::log1p(te);
    return k;
}

double awing_loss(double y, double yhat, const AWingParams& p) {
    validate(p);
    const double d = std::abs(y - yhat);
    if (d < p.theta) return p.omega * std::log1p(std::pow(d / p.epsilon, p.alpha - y));
    const AWingConstants k = awing_constants(y, p);
    return k.a_slope * d - k.c_offset;
}

double awing_grad(double y, double yhat, const AWingParams& p) {
    validate(p);
    const double d = y - yhat;
    const double ad = std::abs(d);
    if (ad == 0.0) return 0.0;
    const double sign = d > 0.0 ? 1.0 : -1.0; // d(|d|)/d(yhat) = -sign
    if (ad < p.theta) {
        const double e = p.alpha - y;
        const double q = std::pow(ad / p.epsilon, e - 1.0);
        const double dloss_dad = p.omega * e * q / (p.epsilon * (1.0 + q * ad / p.epsilon));
        return -sign * dloss_dad;
    }
    return -sign * awing_constants(y, p).a_slope;
}

double awing_batch(const RimHeatmap& y_grid, const RimHeatmap& yhat_grid,
                   const AWingParams& p) {
    if (y_grid.grid.dims != yhat_grid.grid.dims)
        throw std::invalid_argument("awing: grid dims mismatch");
    validate(p);
    double sum = 0.0; // x-fastest storage order; fixed order keeps runs reproducible
    const std::size_t n = y_grid.grid.data.size();
    for (std::size_t i = 0; i < n; ++i)
        sum += awing_loss(y_grid.grid.data[i], yhat_grid.grid.data[i], p);
    return sum / static_cast<double>(n);
}

} // namespace glenoid
