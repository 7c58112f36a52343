#pragma once

#include "glenoid/geometry.hpp"
#include "glenoid/metrics.hpp"

#include <nlohmann/json.hpp>

namespace glenoid {

/// Run-wide configuration echoed into every serialized report.
struct RunConfig {
    double diameter_ratio = 0.6955;
    double heatmap_threshold = 0.3;
    double angular_step_deg = 0.5;
    double sigma_mm = 1.0;
    double tube_radius_mm = 1.0;
    int resample_n = 30;
    double cutoff_low_pct = 13.5;
    double cutoff_high_pct = 20.0;
    bool constrained = true;
    std::string laterality = "Left"; // "Left" | "Right"

    MeasureConfig measure_config() const;
};

inline constexpr int kReportSchemaVersion = 1;

nlohmann::ordered_json to_json(const RunConfig& config);
nlohmann::ordered_json to_json(const MeasurementReport& report, const RunConfig& config,
                               double elapsed_ms = 0.0);
nlohmann::ordered_json to_json(const ReliabilityReport& report);
nlohmann::ordered_json to_json(const ConfusionMatrix& cm);

void write_json_atomic(const nlohmann::ordered_json& j, const std::string& path);

} // namespace glenoid
