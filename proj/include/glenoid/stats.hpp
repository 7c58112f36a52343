#pragma once

namespace glenoid {

/// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// F distribution CDF with d1, d2 degrees of freedom.
double f_cdf(double x, double d1, double d2);

/// F distribution quantile, inverted numerically by bisection (tol 1e-10).
double f_quantile(double p, double d1, double d2);

/// Two-sided p-value of a t statistic with nu degrees of freedom.
double t_two_sided_p(double t, double nu);

} // namespace glenoid
