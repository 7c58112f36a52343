#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace glenoid {

/// Ordered or unordered list of 3-D points in millimeters.
struct PointSet3 {
    std::vector<Eigen::Vector3d> points;
    bool ordered = false;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

/// Binary 3-D occupancy grid (or scalar heatmap) with anisotropic physical
/// spacing. Voxel (i,j,k) sits at physical coordinate (i*sx, j*sy, k*sz);
/// there is no world-origin offset. Data is stored x-fastest (i innermost).
struct VoxelMask {
    std::array<int, 3> dims{0, 0, 0};
    std::array<double, 3> spacing_mm{1.0, 1.0, 1.0};
    std::vector<float> data;      // 0/1 for binary masks, [0,1] for heatmaps
    bool binary = true;
    std::string frame = "native"; // "native" | "reoriented"

    static VoxelMask zeros(std::array<int, 3> dims, std::array<double, 3> spacing,
                           bool binary = true, std::string frame = "native");

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }
    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims[0]) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * k);
    }
    bool in_bounds(int i, int j, int k) const {
        return i >= 0 && i < dims[0] && j >= 0 && j < dims[1] && k >= 0 && k < dims[2];
    }
    float at(int i, int j, int k) const { return data[index(i, j, k)]; }
    float& at(int i, int j, int k) { return data[index(i, j, k)]; }
    bool foreground(int i, int j, int k) const { return data[index(i, j, k)] > 0.5f; }

    Eigen::Vector3d voxel_center_mm(int i, int j, int k) const {
        return {i * spacing_mm[0], j * spacing_mm[1], k * spacing_mm[2]};
    }
    double min_spacing() const {
        return std::min(spacing_mm[0], std::min(spacing_mm[1], spacing_mm[2]));
    }

    std::size_t foreground_count() const;
    /// Centers (mm) of all foreground voxels, unordered.
    PointSet3 foreground_points() const;

    bool operator==(const VoxelMask& other) const;
};

/// Proper rigid motion: p -> R*p + t. Rotation is orthonormal, det +1.
struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }
    RigidTransform inverse() const;
    RigidTransform compose(const RigidTransform& inner) const; // this after inner
};

// --- Mask I/O: sidecar pair <name>.json + <name>.raw ---------------------

/// Reads a mask from its JSON header path (or base path without extension).
VoxelMask read_mask(const std::string& path);
/// Writes <base>.json and <base>.raw; `path` may carry a .json suffix.
void write_mask(const VoxelMask& mask, const std::string& path);

PointSet3 read_point_set(const std::string& path);
void write_point_set(const PointSet3& points, const std::string& path);

// --- Operations ----------------------------------------------------------

/// Mirror across the sagittal plane: voxel (i,j,k) -> (nx-1-i, j, k).
VoxelMask flip_sagittal(const VoxelMask& mask);

/// Mirror of a point set living on `grid`, matching flip_sagittal.
PointSet3 flip_sagittal_points(const PointSet3& points, const VoxelMask& grid);

/// Resamples the mask (nearest neighbor) so the minimal-variance principal
/// axis of the foreground aligns with +z. The returned transform maps
/// reoriented mm-coordinates back to native mm-coordinates.
std::pair<VoxelMask, RigidTransform> pca_reorient(const VoxelMask& mask);

/// Crops/pads to target dims with the foreground centroid centered.
/// Throws if cropping would discard foreground.
VoxelMask crop_pad(const VoxelMask& mask, std::array<int, 3> target_dims);

PointSet3 apply_transform(const PointSet3& points, const RigidTransform& t);

} // namespace glenoid
