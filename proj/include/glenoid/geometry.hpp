#pragma once

#include "glenoid/volume.hpp"

#include <optional>
#include <string>
#include <vector>

namespace glenoid {

/// Error from a named pipeline stage.
class PipelineError : public std::runtime_error {
public:
    PipelineError(std::string stage, const std::string& message)
        : std::runtime_error(stage + ": " + message), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

/// En-face viewing plane: centroid origin, unit normal, right-handed in-plane
/// basis (u x v == normal).
struct EnFacePlane {
    Eigen::Vector3d origin = Eigen::Vector3d::Zero();
    Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
    Eigen::Vector3d basis_u = Eigen::Vector3d::UnitX();
    Eigen::Vector3d basis_v = Eigen::Vector3d::UnitY();
};

/// Circle in (u,v) plane coordinates, mm.
struct FittedCircle {
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    double radius = 0.0;
    bool constrained = false;

    double diameter() const { return 2.0 * radius; }
};

/// 2-D binary raster in plane coordinates. Cell (0,0) center sits at
/// (origin_u, origin_v); cells are square with side `cell_mm`.
struct Raster2 {
    int nx = 0, ny = 0;
    double cell_mm = 0.0;
    double origin_u = 0.0, origin_v = 0.0;
    std::vector<std::uint8_t> data;

    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * nx + i;
    }
    bool in_bounds(int i, int j) const { return i >= 0 && i < nx && j >= 0 && j < ny; }
    bool foreground(int i, int j) const { return data[index(i, j)] != 0; }
    bool foreground_at_mm(double u, double v) const {
        const int i = static_cast<int>(std::lround((u - origin_u) / cell_mm));
        const int j = static_cast<int>(std::lround((v - origin_v) / cell_mm));
        return in_bounds(i, j) && foreground(i, j);
    }
    Eigen::Vector2d cell_center_mm(int i, int j) const {
        return {origin_u + i * cell_mm, origin_v + j * cell_mm};
    }
    std::size_t foreground_count() const;
};

enum class Severity { Low, Moderate, High };

std::string severity_name(Severity s);
Severity classify_severity(double bone_loss_pct, double cutoff_low = 13.5,
                           double cutoff_high = 20.0);

struct MeasurementReport {
    double bone_loss_pct = 0.0;
    double defect_B_mm = 0.0;
    double diameter_A_mm = 0.0;
    double defect_angle_deg = 0.0;
    Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
    FittedCircle circle;
    double glenoid_height_mm = 0.0;
    Severity severity = Severity::Low;
    // intermediate artifact paths, filled by the CLI when requested
    std::string projected_mask_path;
    std::string projected_rim_path;
    std::string plane_path;
};

struct MeasureConfig {
    double diameter_ratio = 0.6955; // fitted diameter / glenoid height
    bool constrained = true;        // false: free-radius fit
    double angular_step_deg = 0.5;
    double cutoff_low_pct = 13.5;
    double cutoff_high_pct = 20.0;
    // projection raster: resolution min(spacing)/2 with radius-1 closing
    double raster_cell_factor = 0.5;
};

// --- Operations ----------------------------------------------------------

/// Least-variance SVD plane through >= 3 non-collinear points. The normal
/// sign is chosen toward +z of the input frame.
EnFacePlane fit_plane(const PointSet3& rim);

std::vector<Eigen::Vector2d> project(const PointSet3& points, const EnFacePlane& plane);

/// Rasterizes the projected foreground voxel centers at min(spacing)/2
/// resolution, then applies a radius-1 morphological closing.
Raster2 project_mask(const VoxelMask& mask, const EnFacePlane& plane,
                     double cell_factor = 0.5);

/// Maximum extent of the projected foreground along its first principal axis.
double glenoid_height(const Raster2& projected_mask);

FittedCircle fit_circle_unconstrained(const std::vector<Eigen::Vector2d>& rim2d);
FittedCircle fit_circle_constrained(const std::vector<Eigen::Vector2d>& rim2d,
                                    double radius_mm);

/// Radial least-squares objective J(c,r) = sum_i (|p_i - c| - r)^2.
double circle_objective(const std::vector<Eigen::Vector2d>& pts, const Eigen::Vector2d& c,
                        double r);

struct DefectResult {
    double B_mm = 0.0;
    double angle_deg = 0.0;
};

/// Scans radial rays from the circle center; for each direction takes the
/// distance d to the outermost foreground boundary and the gap max(0, r-d).
/// Returns the largest gap and its direction.
DefectResult defect_length(const Raster2& projected_mask, const FittedCircle& circle,
                           double angular_step_deg);

MeasurementReport measure_bone_loss(const VoxelMask& mask, const PointSet3& rim,
                                    const MeasureConfig& config = {});

struct TuneCase {
    const VoxelMask* mask;
    const PointSet3* rim;
    double truth_pct;
};

struct TuneResult {
    double best_ratio = 0.0;
    std::vector<std::pair<double, double>> mae_curve; // (ratio, MAE %)
};

std::vector<double> default_ratio_grid(); // 11 values, 0.65 .. 0.75

TuneResult tune_diameter_ratio(const std::vector<TuneCase>& cases,
                               const std::vector<double>& grid,
                               const MeasureConfig& config = {});

} // namespace glenoid
