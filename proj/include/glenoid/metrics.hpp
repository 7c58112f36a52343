#pragma once

#include "glenoid/volume.hpp"

#include <array>
#include <string>
#include <vector>

namespace glenoid {

/// Per-case measurements from two raters (percent bone loss).
struct PairedMeasurements {
    std::vector<std::string> case_ids;
    std::vector<double> rater_a;
    std::vector<double> rater_b;

    std::size_t size() const { return rater_a.size(); }
};

struct BlandAltman {
    double bias = 0.0;     // mean of rater_a - rater_b
    double sd_diff = 0.0;  // sample SD of differences
    double loa_low = 0.0;  // bias - 1.96 sd
    double loa_high = 0.0; // bias + 1.96 sd
    double loa_width = 0.0;
};

struct ReliabilityReport {
    double icc = 0.0;
    double icc_ci_low = 0.0;
    double icc_ci_high = 0.0;
    bool icc_defined = true;
    std::string icc_diagnostic;
    double pearson_r = 0.0;
    double pearson_p = 1.0;
    double mae = 0.0;
    BlandAltman bland_altman;
};

struct ConfusionMatrix {
    std::array<std::array<int, 3>, 3> counts{}; // [truth band][predicted band]
    std::array<double, 3> recall{};             // diagonal / row sum (NaN for empty row)
    int total = 0;
};

/// Dice similarity coefficient 2|A∩B| / (|A|+|B|); 1 when both empty.
double dice(const VoxelMask& a, const VoxelMask& b);

/// Axis-like angular error arccos(|u.v|) in degrees, range [0, 90].
double angular_error_deg(const Eigen::Vector3d& u, const Eigen::Vector3d& v);

struct NonInferioritySummary {
    double below_parity_frac = 0.0; // algo error <= human error
    double within_margin_frac = 0.0;
};

NonInferioritySummary noninferiority_summary(
    const std::vector<std::pair<double, double>>& human_algo_err_deg, double margin_deg);

/// ICC(A,1): two-way absolute-agreement single-measure, with the F-based
/// 95 % confidence interval. Requires n >= 5 subjects.
ReliabilityReport icc_a1(const PairedMeasurements& pairs);

double pearson(const PairedMeasurements& pairs);
double pearson_p_value(const PairedMeasurements& pairs);
double mean_absolute_error(const PairedMeasurements& pairs);
BlandAltman bland_altman(const PairedMeasurements& pairs);

/// Full battery on one pair of raters (ICC requires n >= 5).
ReliabilityReport reliability(const PairedMeasurements& pairs);

ConfusionMatrix confusion_matrix(const std::vector<double>& pred_pct,
                                 const std::vector<double>& truth_pct,
                                 double cutoff_low = 13.5, double cutoff_high = 20.0);

} // namespace glenoid
