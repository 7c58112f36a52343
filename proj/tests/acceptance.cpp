// Acceptance gate: every release-blocking criterion in one binary.
// Prints one PASS/FAIL line per criterion and exits nonzero on any failure.

#include "glenoid/awing.hpp"
#include "glenoid/geometry.hpp"
#include "glenoid/metrics.hpp"
#include "glenoid/phantom.hpp"
#include "glenoid/report.hpp"
#include "glenoid/rim.hpp"

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <numbers>
#include <random>
#include <vector>

using namespace glenoid;

namespace {

int g_failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
    std::printf("%-34s %s  (%s)\n", name, ok ? "PASS" : "FAIL", detail.c_str());
    if (!ok) ++g_failures;
}

std::string fmt(const char* f, ...) {
    char buf[256];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

// shared 100-phantom cohort: seed 42, 0.5 mm spacing, defects U[0, 35] %
struct Cohort {
    std::vector<PhantomCase> cases;
    std::vector<MeasurementReport> reports;
    double gen_plus_measure_s = 0.0;
};

Cohort run_cohort() {
    Cohort c;
    const auto t0 = std::chrono::steady_clock::now();
    RandomPhantomOptions opts; // count 100, seed 42, spacing 0.5, defect max 35
    for (const auto& spec : random_specs(opts)) c.cases.push_back(generate(spec));
    for (const auto& pc : c.cases)
        c.reports.push_back(measure_bone_loss(pc.mask, pc.rim_truth));
    c.gen_plus_measure_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return c;
}

void criterion_1_end_to_end(const Cohort& c) {
    double mae = 0.0, worst = 0.0;
    for (std::size_t i = 0; i < c.cases.size(); ++i) {
        const double err =
            std::abs(c.reports[i].bone_loss_pct - c.cases[i].bone_loss_truth_pct);
        mae += err;
        worst = std::max(worst, err);
    }
    mae /= static_cast<double>(c.cases.size());
    report("1 end-to-end phantom oracle",
           mae < 1.0 && worst < 2.5 && c.gen_plus_measure_s < 60.0,
           fmt("MAE %.3f%% max %.3f%% in %.1fs", mae, worst, c.gen_plus_measure_s));
}

void criterion_2_en_face(const Cohort& c) {
    int under_1deg = 0;
    for (std::size_t i = 0; i < c.cases.size(); ++i)
        if (angular_error_deg(c.reports[i].normal, c.cases[i].normal_truth) < 1.0)
            ++under_1deg;

    RandomPhantomOptions cup_opts;
    cup_opts.count = 20;
    cup_opts.seed = 42;
    cup_opts.cup_depth_mm = 1.5;
    int pca_worse = 0;
    for (const auto& spec : random_specs(cup_opts)) {
        const NormalComparison cmp = pca_vs_rim_normal(generate(spec));
        if (cmp.pca_angular_err_deg > cmp.rim_angular_err_deg) ++pca_worse;
    }
    report("2 en-face normal recovery", under_1deg >= 95 && pca_worse >= 18,
           fmt("rim <1deg on %d/100, pca worse on %d/20", under_1deg, pca_worse));
}

void criterion_3_circle_exactness() {
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> rad(5.0, 25.0);
    std::uniform_real_distribution<double> span(90.0, 359.0);
    std::uniform_real_distribution<double> off(-15.0, 15.0);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const Eigen::Vector2d center(off(rng), off(rng));
        const double r = rad(rng);
        std::vector<Eigen::Vector2d> pts;
        const double start = off(rng) * 24.0, s = span(rng);
        for (int i = 0; i < 16; ++i) {
            const double a = (start + s * i / 15.0) * std::numbers::pi / 180.0;
            pts.push_back(center + r * Eigen::Vector2d(std::cos(a), std::sin(a)));
        }
        const FittedCircle c = fit_circle_unconstrained(pts);
        worst = std::max(worst, (c.center - center).norm());
        worst = std::max(worst, std::abs(c.radius - r));
    }

    // constrained fit vs 0.01 mm grid-search oracle
    std::vector<Eigen::Vector2d> arc;
    for (int i = 0; i < 20; ++i) {
        const double a = std::numbers::pi * i / 19.0;
        arc.push_back(10.0 * Eigen::Vector2d(std::cos(a), std::sin(a)));
    }
    const FittedCircle cc = fit_circle_constrained(arc, 8.0);
    double best_j = std::numeric_limits<double>::max();
    Eigen::Vector2d best_c = Eigen::Vector2d::Zero();
    for (double u = -3.0; u <= 3.0; u += 0.01)
        for (double v = -3.0; v <= 3.0; v += 0.01) {
            const double j = circle_objective(arc, {u, v}, 8.0);
            if (j < best_j) {
                best_j = j;
                best_c = {u, v};
            }
        }
    const double grid_gap = (cc.center - best_c).norm();
    report("3 circle-fit exactness", worst < 1e-6 && grid_gap <= 0.01 * std::numbers::sqrt2,
           fmt("free-fit worst %.2e mm, constrained vs grid %.4f mm", worst, grid_gap));
}

void criterion_4_awing() {
    double max_jump = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double y = i / 100.0;
        for (double sign : {-1.0, 1.0}) {
            const double lo = awing_loss(y, y + sign * (0.5 - 1e-9));
            const double hi = awing_loss(y, y + sign * (0.5 + 1e-9));
            max_jump = std::max(max_jump, std::abs(hi - lo));
        }
    }

    std::mt19937 rng(3);
    std::uniform_real_distribution<double> uy(0.0, 1.0);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    double max_rel = 0.0;
    const double h = 1e-6;
    for (int i = 0; i < 1000; ++i) {
        const double y = uy(rng);
        double d = ud(rng);
        if (std::abs(std::abs(d) - 0.5) < 1e-4) d += 2e-4;
        if (std::abs(d) < 1e-4) d = 1e-4;
        const double g = awing_grad(y, y + d);
        const double fd = (awing_loss(y, y + d + h) - awing_loss(y, y + d - h)) / (2 * h);
        max_rel = std::max(max_rel, std::abs(g - fd) / std::max(1.0, std::abs(g)));
    }

    bool zero_ok = true;
    for (double y : {0.0, 0.31, 0.5, 0.99, 1.0})
        zero_ok = zero_ok && awing_loss(y, y) == 0.0;

    report("4 adaptive wing loss", max_jump < 1e-6 && max_rel < 1e-5 && zero_ok,
           fmt("branch jump %.2e, grad rel err %.2e", max_jump, max_rel));
}

void criterion_5_gt_chain(const Cohort& c) {
    double worst = 0.0;
    int checked = 0;
    for (const auto& pc : c.cases) {
        const PointSet3 res = resample_polyline(pc.rim_truth, 30);
        const VoxelMask tube = spline_tube(res, 1.0, pc.mask);
        const PointSet3 skel = skeletonize(tube);
        const PointSet3 rec = skeletonize(binarize_heatmap(gaussian_heatmap(skel, 1.0, pc.mask), 0.3));
        worst = std::max(worst, chamfer_distance(skel, rec));
        ++checked;
    }
    const double diag = std::sqrt(3.0) * 0.5;
    report("5 ground-truth chain round-trip", worst < diag,
           fmt("worst Chamfer %.3f mm < %.3f on %d phantoms", worst, diag, checked));
}

void criterion_6_statistics() {
    // fixed fixture, brute-force ANOVA recomputation in this test
    const std::vector<double> a = {20.92, 8.0,  10.66, 24.39, 29.88, 5.98,
                                   4.2,   7.06, 12.07, 6.75,  18.49, 19.27};
    const std::vector<double> b = {19.5, 11.77, 11.56, 26.81, 27.93, 5.91,
                                   2.42, 6.31,  14.68, 4.59,  18.22, 20.4};
    PairedMeasurements pairs;
    pairs.rater_a = a;
    pairs.rater_b = b;
    pairs.case_ids.resize(a.size());
    const ReliabilityReport rel = reliability(pairs);

    const int n = static_cast<int>(a.size()), k = 2;
    double grand = 0.0;
    for (int i = 0; i < n; ++i) grand += a[i] + b[i];
    grand /= 2.0 * n;
    double ca = 0.0, cb = 0.0, ssr = 0.0, sst = 0.0;
    for (int i = 0; i < n; ++i) {
        ca += a[i] / n;
        cb += b[i] / n;
    }
    for (int i = 0; i < n; ++i) {
        const double row = (a[i] + b[i]) / 2.0;
        ssr += k * (row - grand) * (row - grand);
        sst += (a[i] - grand) * (a[i] - grand) + (b[i] - grand) * (b[i] - grand);
    }
    const double ssc = n * ((ca - grand) * (ca - grand) + (cb - grand) * (cb - grand));
    const double msr = ssr / (n - 1), msc = ssc / (k - 1);
    const double mse = (sst - ssr - ssc) / ((n - 1) * (k - 1));
    const double icc_bf =
        (msr - mse) / (msr + (k - 1) * mse + static_cast<double>(k) / n * (msc - mse));

    double ma = 0.0, mb = 0.0;
    for (int i = 0; i < n; ++i) {
        ma += a[i] / n;
        mb += b[i] / n;
    }
    double sab = 0.0, saa = 0.0, sbb = 0.0, mae_bf = 0.0, bias = 0.0;
    for (int i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
        mae_bf += std::abs(a[i] - b[i]) / n;
        bias += (a[i] - b[i]) / n;
    }
    const double r_bf = sab / std::sqrt(saa * sbb);
    double sd = 0.0;
    for (int i = 0; i < n; ++i) sd += (a[i] - b[i] - bias) * (a[i] - b[i] - bias);
    sd = std::sqrt(sd / (n - 1));

    const double d_icc = std::abs(rel.icc - icc_bf);
    const double d_r = std::abs(rel.pearson_r - r_bf);
    const double d_mae = std::abs(rel.mae - mae_bf);
    const double d_ba = std::abs(rel.bland_altman.bias - bias) +
                        std::abs(rel.bland_altman.sd_diff - sd) +
                        std::abs(rel.bland_altman.loa_low - (bias - 1.96 * sd)) +
                        std::abs(rel.bland_altman.loa_high - (bias + 1.96 * sd));

    // bias sensitivity: a constant added to one rater strictly lowers ICC
    std::vector<double> biased = b;
    for (auto& v : biased) v += 4.0;
    PairedMeasurements pb = pairs;
    pb.rater_b = biased;
    const bool bias_drops = icc_a1(pb).icc < rel.icc;

    // Chamfer vs the O(n^2) double loop on 100 random sets
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(-25.0, 25.0);
    std::uniform_int_distribution<int> size(1, 500);
    double worst_cd = 0.0;
    for (int t = 0; t < 100; ++t) {
        PointSet3 pa, pbs;
        const int na = size(rng), nb = size(rng);
        for (int i = 0; i < na; ++i) pa.points.push_back({u(rng), u(rng), u(rng)});
        for (int i = 0; i < nb; ++i) pbs.points.push_back({u(rng), u(rng), u(rng)});
        double suma = 0.0, sumb = 0.0;
        for (const auto& p : pa.points) {
            double best = std::numeric_limits<double>::max();
            for (const auto& q : pbs.points) best = std::min(best, (p - q).norm());
            suma += best;
        }
        for (const auto& q : pbs.points) {
            double best = std::numeric_limits<double>::max();
            for (const auto& p : pa.points) best = std::min(best, (q - p).norm());
            sumb += best;
        }
        worst_cd = std::max(
            worst_cd, std::abs(chamfer_distance(pa, pbs) - (suma / na + sumb / nb)));
    }

    report("6 statistics oracle",
           d_icc < 1e-6 && d_r < 1e-6 && d_mae < 1e-6 && d_ba < 1e-6 && bias_drops &&
               worst_cd < 1e-9,
           fmt("icc|r|mae|ba drift %.1e, chamfer drift %.1e",
               std::max(std::max(d_icc, d_r), std::max(d_mae, d_ba)), worst_cd));
}

void criterion_7_classification() {
    std::vector<double> truth, pred;
    auto add = [&](double t, double p) {
        truth.push_back(t);
        pred.push_back(p);
    };
    for (int i = 0; i < 5; ++i) add(8.0 + i, 9.0 + i); // Low kept
    add(12.0, 14.0);
    add(13.0, 15.5);   // Low -> Moderate
    add(15.0, 16.0);
    add(18.0, 17.0);   // Moderate kept
    add(14.0, 11.0);
    add(15.5, 12.0);
    add(16.0, 13.0);   // Moderate -> Low
    add(19.0, 22.0);
    add(19.5, 24.0);   // Moderate -> High
    for (int i = 0; i < 6; ++i) add(24.0 + i, 25.0 + i); // High kept
    add(21.0, 18.0);   // High -> Moderate

    const ConfusionMatrix cm = confusion_matrix(pred, truth);
    const bool ok = cm.total == 21 && cm.counts[0][0] == 5 && cm.counts[0][1] == 2 &&
                    cm.counts[0][2] == 0 && cm.counts[1][1] == 2 && cm.counts[2][0] == 0 &&
                    cm.counts[2][1] == 1 && cm.counts[2][2] == 6 &&
                    std::abs(cm.recall[0] - 5.0 / 7.0) < 1e-12 &&
                    std::abs(cm.recall[1] - 2.0 / 7.0) < 1e-12 &&
                    std::abs(cm.recall[2] - 6.0 / 7.0) < 1e-12;
    report("7 classification fixture", ok,
           fmt("recalls %d/7 %d/7 %d/7, no Low<->High", cm.counts[0][0], cm.counts[1][1],
               cm.counts[2][2]));
}

void criterion_8_determinism() {
    PhantomSpec spec;
    spec.defect_pct = 18.0;
    spec.orientation = random_rotation(6);
    const PhantomCase c = generate(spec);

    const RunConfig config;
    const MeasurementReport r1 = measure_bone_loss(c.mask, c.rim_truth);
    const MeasurementReport r2 = measure_bone_loss(c.mask, c.rim_truth);
    const bool bytes_equal = to_json(r1, config).dump() == to_json(r2, config).dump();

    // rotate mask + rim rigidly and compare
    const Eigen::Matrix3d rot = random_rotation(123);
    PhantomSpec rotated_spec = spec;
    rotated_spec.orientation = rot * spec.orientation;
    const PhantomCase cr = generate(rotated_spec);
    const MeasurementReport rr = measure_bone_loss(cr.mask, cr.rim_truth);

    const double d_loss = std::abs(rr.bone_loss_pct - r1.bone_loss_pct);
    const double d_norm = angular_error_deg(rr.normal, rot * r1.normal);
    report("8 determinism + equivariance",
           bytes_equal && d_loss < 0.5 && d_norm < 0.5,
           fmt("byte-identical %s, dloss %.3f%%, dnormal %.3fdeg",
               bytes_equal ? "yes" : "no", d_loss, d_norm));
}

void criterion_9_ratio_tuning() {
    RandomPhantomOptions opts;
    opts.count = 15;
    opts.seed = 7;
    opts.height_ratio = 0.70;
    opts.defect_min_pct = 5.0;
    std::vector<PhantomCase> cases;
    for (const auto& spec : random_specs(opts)) cases.push_back(generate(spec));
    std::vector<TuneCase> tune_cases;
    for (const auto& c : cases)
        tune_cases.push_back({&c.mask, &c.rim_truth, c.bone_loss_truth_pct});
    const TuneResult res = tune_diameter_ratio(tune_cases, default_ratio_grid());
    report("9 ratio tuning recovery", std::abs(res.best_ratio - 0.70) < 0.011,
           fmt("best_ratio %.2f (target 0.70 +- 0.01)", res.best_ratio));
}

} // namespace

int main() {
    const Cohort cohort = run_cohort();
    criterion_1_end_to_end(cohort);
    criterion_2_en_face(cohort);
    criterion_3_circle_exactness();
    criterion_4_awing();
    criterion_5_gt_chain(cohort);
    criterion_6_statistics();
    criterion_7_classification();
    criterion_8_determinism();
    criterion_9_ratio_tuning();
    std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
