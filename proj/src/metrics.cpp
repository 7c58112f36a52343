#include "glenoid/metrics.hpp"

#include "glenoid/geometry.hpp"
#include "glenoid/stats.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace glenoid {

double dice(const VoxelMask& a, const VoxelMask& b) {
    if (a.dims != b.dims) throw std::invalid_argument("dice: dims mismatch");
    std::size_t na = 0, nb = 0, inter = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const bool fa = a.data[i] > 0.5f, fb = b.data[i] > 0.5f;
        if (fa) ++na;
        if (fb) ++nb;
        if (fa && fb) ++inter;
    }
    if (na + nb == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

double angular_error_deg(const Eigen::Vector3d& u, const Eigen::Vector3d& v) {
    const double nu = u.norm(), nv = v.norm();
    if (nu == 0.0 || nv == 0.0) throw std::invalid_argument("angular error of zero vector");
    const double c = std::min(1.0, std::abs(u.dot(v)) / (nu * nv));
    return std::acos(c) * 180.0 / std::numbers::pi;
}

NonInferioritySummary noninferiority_summary(
    const std::vector<std::pair<double, double>>& pairs, double margin_deg) {
    if (pairs.empty()) throw std::invalid_argument("noninferiority: empty list");
    if (margin_deg < 0.0) throw std::invalid_argument("noninferiority: negative margin");
    NonInferioritySummary s;
    for (const auto& [human, algo] : pairs) {
        if (algo <= human) s.below_parity_frac += 1.0;
        if (algo <= human + margin_deg) s.within_margin_frac += 1.0;
    }
    s.below_parity_frac /= static_cast<double>(pairs.size());
    s.within_margin_frac /= static_cast<double>(pairs.size());
    return s;
}

namespace {

void check_pairs(const PairedMeasurements& pairs, std::size_t min_n) {
    if (pairs.rater_a.size() != pairs.rater_b.size())
        throw std::invalid_argument("paired measurements must have equal lengths");
    if (pairs.rater_a.size() < min_n)
        throw std::invalid_argument("not enough paired measurements");
    for (std::size_t i = 0; i < pairs.rater_a.size(); ++i)
        if (!std::isfinite(pairs.rater_a[i]) || !std::isfinite(pairs.rater_b[i]))
            throw std::invalid_argument("non-finite measurement");
}

} // namespace

ReliabilityReport icc_a1(const PairedMeasurements& pairs) {
    check_pairs(pairs, 5);
    const std::size_t n = pairs.size();
    constexpr int k = 2;

    double grand = 0.0;
    for (std::size_t i = 0; i < n; ++i) grand += pairs.rater_a[i] + pairs.rater_b[i];
    grand /= static_cast<double>(n * k);

    double col_a = 0.0, col_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        col_a += pairs.rater_a[i];
        col_b += pairs.rater_b[i];
    }
    col_a /= static_cast<double>(n);
    col_b /= static_cast<double>(n);

    double ssr = 0.0, ssc = 0.0, sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double row = 0.5 * (pairs.rater_a[i] + pairs.rater_b[i]);
        ssr += (row - grand) * (row - grand);
        const double ea = pairs.rater_a[i] - row - col_a + grand;
        const double eb = pairs.rater_b[i] - row - col_b + grand;
        sse += ea * ea + eb * eb;
    }
    ssr *= k;
    ssc = n * ((col_a - grand) * (col_a - grand) + (col_b - grand) * (col_b - grand));

    const double msr = ssr / static_cast<double>(n - 1);
    const double msc = ssc / static_cast<double>(k - 1);
    const double mse = sse / static_cast<double>((n - 1) * (k - 1));

    ReliabilityReport rep;
    const double denom =
        msr + (k - 1) * mse + (static_cast<double>(k) / n) * (msc - mse);
    if (ssr <= 0.0 || denom <= 0.0) {
        rep.icc = std::numeric_limits<double>::quiet_NaN();
        rep.icc_ci_low = rep.icc_ci_high = rep.icc;
        rep.icc_defined = false;
        rep.icc_diagnostic = "zero between-subject variance; ICC undefined";
        return rep;
    }
    rep.icc = (msr - mse) / denom;

    if (mse <= 0.0 && msc <= 0.0) {
        // perfect agreement; the F interval degenerates
        rep.icc_ci_low = rep.icc_ci_high = rep.icc;
        return rep;
    }

    // McGraw-Wong F-based 95 % interval for ICC(A,1)
    const double r = rep.icc;
    const double nn = static_cast<double>(n);
    const double a = k * r / (nn * (1.0 - r));
    const double b = 1.0 + k * r * (nn - 1.0) / (nn * (1.0 - r));
    const double v_num = (a * msc + b * mse) * (a * msc + b * mse);
    const double v_den =
        (a * msc) * (a * msc) / (k - 1.0) + (b * mse) * (b * mse) / (nn - 1.0);
    const double v = v_num / v_den;
    const double f_l = f_quantile(0.975, nn - 1.0, v);
    const double f_u = f_quantile(0.975, v, nn - 1.0);
    rep.icc_ci_low = nn * (msr - f_l * mse) /
                     (f_l * (k * msc + (k * nn - k - nn) * mse) + nn * msr);
    rep.icc_ci_high = nn * (f_u * msr - mse) /
                      (k * msc + (k * nn - k - nn) * mse + nn * f_u * msr);
    return rep;
}

double pearson(const PairedMeasurements& pairs) {
    check_pairs(pairs, 2);
    const std::size_t n = pairs.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += pairs.rater_a[i];
        mb += pairs.rater_b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = pairs.rater_a[i] - ma, db = pairs.rater_b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0)
        throw std::invalid_argument("pearson undefined for zero variance");
    return sab / std::sqrt(saa * sbb);
}

double pearson_p_value(const PairedMeasurements& pairs) {
    const double r = pearson(pairs);
    const double n = static_cast<double>(pairs.size());
    if (n < 3) return 1.0;
    if (std::abs(r) >= 1.0) return 0.0;
    const double t = r * std::sqrt((n - 2.0) / (1.0 - r * r));
    return t_two_sided_p(t, n - 2.0);
}

double mean_absolute_error(const PairedMeasurements& pairs) {
    check_pairs(pairs, 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i)
        sum += std::abs(pairs.rater_a[i] - pairs.rater_b[i]);
    return sum / static_cast<double>(pairs.size());
}

BlandAltman bland_altman(const PairedMeasurements& pairs) {
    check_pairs(pairs, 2);
    const std::size_t n = pairs.size();
    BlandAltman ba;
    for (std::size_t i = 0; i < n; ++i) ba.bias += pairs.rater_a[i] - pairs.rater_b[i];
    ba.bias /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = pairs.rater_a[i] - pairs.rater_b[i] - ba.bias;
        ss += d * d;
    }
    ba.sd_diff = std::sqrt(ss / static_cast<double>(n - 1));
    ba.loa_low = ba.bias - 1.96 * ba.sd_diff;
    ba.loa_high = ba.bias + 1.96 * ba.sd_diff;
    ba.loa_width = ba.loa_high - ba.loa_low;
    return ba;
}

ReliabilityReport reliability(const PairedMeasurements& pairs) {
    ReliabilityReport rep = icc_a1(pairs);
    rep.pearson_r = pearson(pairs);
    rep.pearson_p = pearson_p_value(pairs);
    rep.mae = mean_absolute_error(pairs);
    rep.bland_altman = bland_altman(pairs);
    return rep;
}

ConfusionMatrix confusion_matrix(const std::vector<double>& pred_pct,
                                 const std::vector<double>& truth_pct, double cutoff_low,
                                 double cutoff_high) {
    if (pred_pct.size() != truth_pct.size())
        throw std::invalid_argument("confusion_matrix: length mismatch");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < pred_pct.size(); ++i) {
        const int t = static_cast<int>(classify_severity(truth_pct[i], cutoff_low, cutoff_high));
        const int p = static_cast<int>(classify_severity(pred_pct[i], cutoff_low, cutoff_high));
        ++cm.counts[t][p];
        ++cm.total;
    }
    for (int t = 0; t < 3; ++t) {
        const int row = cm.counts[t][0] + cm.counts[t][1] + cm.counts[t][2];
        cm.recall[t] = row > 0 ? static_cast<double>(cm.counts[t][t]) / row
                               : std::numeric_limits<double>::quiet_NaN();
    }
    return cm;
}

} // namespace glenoid
