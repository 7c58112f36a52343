#include "glenoid/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace glenoid {

using json = nlohmann::ordered_json;

MeasureConfig RunConfig::measure_config() const {
    MeasureConfig mc;
    mc.diameter_ratio = diameter_ratio;
    mc.constrained = constrained;
    mc.angular_step_deg = angular_step_deg;
    mc.cutoff_low_pct = cutoff_low_pct;
    mc.cutoff_high_pct = cutoff_high_pct;
    return mc;
}

json to_json(const RunConfig& c) {
    json j;
    j["diameter_ratio"] = c.diameter_ratio;
    j["heatmap_threshold"] = c.heatmap_threshold;
    j["angular_step_deg"] = c.angular_step_deg;
    j["sigma_mm"] = c.sigma_mm;
    j["tube_radius_mm"] = c.tube_radius_mm;
    j["resample_n"] = c.resample_n;
    j["cutoffs_pct"] = {c.cutoff_low_pct, c.cutoff_high_pct};
    j["constrained"] = c.constrained;
    j["laterality"] = c.laterality;
    return j;
}

json to_json(const MeasurementReport& r, const RunConfig& config, double elapsed_ms) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["bone_loss_pct"] = r.bone_loss_pct;
    j["defect_B_mm"] = r.defect_B_mm;
    j["diameter_A_mm"] = r.diameter_A_mm;
    j["defect_angle_deg"] = r.defect_angle_deg;
    j["normal"] = {r.normal.x(), r.normal.y(), r.normal.z()};
    j["circle"] = {{"center_mm", {r.circle.center.x(), r.circle.center.y()}},
                   {"radius_mm", r.circle.radius},
                   {"constrained", r.circle.constrained}};
    j["glenoid_height_mm"] = r.glenoid_height_mm;
    j["severity"] = severity_name(r.severity);
    json intermediates;
    intermediates["projected_mask"] = r.projected_mask_path;
    intermediates["projected_rim"] = r.projected_rim_path;
    intermediates["plane"] = r.plane_path;
    j["intermediates"] = std::move(intermediates);
    j["config"] = to_json(config);
    // timings kept apart from the measurement payload so repeated runs stay
    // byte-comparable on the payload fields
    j["timing_ms"] = elapsed_ms;
    return j;
}

json to_json(const ReliabilityReport& r) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    if (r.icc_defined) {
        j["icc"] = r.icc;
        j["icc_ci_95"] = {r.icc_ci_low, r.icc_ci_high};
    } else {
        j["icc"] = nullptr;
        j["icc_ci_95"] = nullptr;
        j["icc_diagnostic"] = r.icc_diagnostic;
    }
    j["pearson_r"] = r.pearson_r;
    j["pearson_p"] = r.pearson_p;
    j["mae"] = r.mae;
    j["bland_altman"] = {{"bias", r.bland_altman.bias},
                         {"sd_diff", r.bland_altman.sd_diff},
                         {"loa_low", r.bland_altman.loa_low},
                         {"loa_high", r.bland_altman.loa_high},
                         {"loa_width", r.bland_altman.loa_width}};
    return j;
}

json to_json(const ConfusionMatrix& cm) {
    json j;
    j["classes"] = {"Low", "Moderate", "High"};
    json counts = json::array();
    for (const auto& row : cm.counts) counts.push_back({row[0], row[1], row[2]});
    j["counts"] = std::move(counts);
    json recall = json::array();
    for (double r : cm.recall) {
        if (std::isnan(r))
            recall.push_back(nullptr);
        else
            recall.push_back(r);
    }
    j["recall"] = std::move(recall);
    j["total"] = cm.total;
    return j;
}

void write_json_atomic(const json& j, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << j.dump(2) << "\n";
    }
    std::rename(tmp.c_str(), path.c_str());
}

} // namespace glenoid
