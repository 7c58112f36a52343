#include "glenoid/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace glenoid {

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double beta_cf(double a, double b, double x) {
    constexpr int max_iter = 300;
    constexpr double eps = 3e-16;
    constexpr double fpmin = 1e-300;

    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

} // namespace

double incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("incomplete_beta: a, b must be > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double f_cdf(double x, double d1, double d2) {
    if (d1 <= 0.0 || d2 <= 0.0) throw std::invalid_argument("f_cdf: dof must be > 0");
    if (x <= 0.0) return 0.0;
    return incomplete_beta(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2));
}

double f_quantile(double p, double d1, double d2) {
    if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("f_quantile: p must be in (0,1)");
    double lo = 0.0, hi = 1.0;
    while (f_cdf(hi, d1, d2) < p) {
        hi *= 2.0;
        if (hi > 1e12) break;
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (f_cdf(mid, d1, d2) < p)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-10 * std::max(1.0, lo)) break;
    }
    return 0.5 * (lo + hi);
}

double t_two_sided_p(double t, double nu) {
    if (nu <= 0.0) throw std::invalid_argument("t_two_sided_p: dof must be > 0");
    if (!std::isfinite(t)) return 0.0;
    return incomplete_beta(nu / 2.0, 0.5, nu / (nu + t * t));
}

} // namespace glenoid
