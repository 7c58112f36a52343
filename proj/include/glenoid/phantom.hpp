#pragma once

#include "glenoid/volume.hpp"

#include <cstdint>
#include <vector>

namespace glenoid {

/// Synthetic glenoid plate with analytically known bone loss. The local
/// frame has the pear profile in (x,y) with the superior lobe toward +y,
/// extrusion along z, and the articular face at z = thickness.
struct PhantomSpec {
    double radius_mm = 12.0;        // inferior circle radius, [10, 16]
    double defect_pct = 0.0;        // [0, 40); chord defect B = pct/100 * 2R
    double defect_angle_deg = 0.0;  // in-plane, 0 = +x (anterior)
    double plate_thickness_mm = 2.0;
    double cup_depth_mm = 0.0;      // cavitary erosion carved from the top face
    double cup_offset_mm = 0.0;     // cup center offset along the defect direction
    double height_ratio = 0.6955;   // circle diameter / total height
    Eigen::Matrix3d orientation = Eigen::Matrix3d::Identity();
    double spacing_mm = 0.5;
    std::uint64_t rng_seed = 0;
};

struct PhantomCase {
    VoxelMask mask;
    PointSet3 rim_truth;
    Eigen::Vector3d normal_truth = Eigen::Vector3d::UnitZ();
    double bone_loss_truth_pct = 0.0;
    double height_truth_mm = 0.0;
};

PhantomCase generate(const PhantomSpec& spec);

/// Deterministic per-case stream from a master seed.
std::uint64_t splitmix64(std::uint64_t& state);

/// Uniformly random rotation (quaternion method) from the seed.
Eigen::Matrix3d random_rotation(std::uint64_t seed);

struct RandomPhantomOptions {
    int count = 100;
    std::uint64_t seed = 42;
    double spacing_mm = 0.5;
    double defect_min_pct = 0.0;
    double defect_max_pct = 35.0;
    double cup_depth_mm = 0.0;     // > 0: offset-cup phantoms
    double height_ratio = 0.6955;
};

std::vector<PhantomSpec> random_specs(const RandomPhantomOptions& opts);

struct NormalComparison {
    double pca_angular_err_deg = 0.0; // least-variance axis of all mask voxels
    double rim_angular_err_deg = 0.0; // SVD plane on the rim points
};

/// Appendix-style baseline comparison: whole-mask PCA normal vs rim-SVD
/// normal, each against the generator truth.
NormalComparison pca_vs_rim_normal(const PhantomCase& c);

} // namespace glenoid
