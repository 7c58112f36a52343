#pragma once

#include "glenoid/rim.hpp"

namespace glenoid {

/// Adaptive Wing loss parameters. alpha > 1 keeps the exponent alpha - y
/// above 1 for y in [0,1], so the loss stays smooth at zero error.
struct AWingParams {
    double omega = 16.0;
    double epsilon = 1.0;
    double theta = 0.5;
    double alpha = 2.1;
};

/// Linear-branch slope and offset for a given ground-truth value; chosen so
/// the loss is continuous at |y - yhat| = theta.
struct AWingConstants {
    double a_slope = 0.0;
    double c_offset = 0.0;
};

void validate(const AWingParams& params);

AWingConstants awing_constants(double y, const AWingParams& params = {});

/// Loss: omega*ln(1 + |d/eps|^(alpha-y)) for |d| < theta, else A|d| - C.
double awing_loss(double y, double yhat, const AWingParams& params = {});

/// d(loss)/d(yhat), analytic on both branches; 0 at d == 0.
double awing_grad(double y, double yhat, const AWingParams& params = {});

/// Mean per-voxel loss over two grids of identical dims, accumulated in
/// x-fastest order.
double awing_batch(const RimHeatmap& y_grid, const RimHeatmap& yhat_grid,
                   const AWingParams& params = {});

} // namespace glenoid
