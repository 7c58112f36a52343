#pragma once

#include "glenoid/volume.hpp"

namespace glenoid {

/// Scalar heatmap on a voxel grid, values in [0,1].
struct RimHeatmap {
    VoxelMask grid;     // real variant
    double sigma_mm = 1.0;
};

/// Resamples an ordered polyline to n points equally spaced by arc length.
/// Endpoints are preserved exactly.
PointSet3 resample_polyline(const PointSet3& landmarks, int n);

/// Rasterizes a cardinal-spline (Catmull-Rom, tension 0.5) tube of the given
/// radius through the landmarks onto the template grid.
VoxelMask spline_tube(const PointSet3& landmarks, double radius_mm,
                      const VoxelMask& grid_template);

/// Thins a binary mask to a 1-voxel-wide 26-connected curve (Lee-1994
/// template, sub-iteration order -x,+x,-y,+y,-z,+z) and returns the surviving
/// voxel centers in mm. Also available in mask form for chained processing.
VoxelMask skeletonize_mask(const VoxelMask& mask);
PointSet3 skeletonize(const VoxelMask& mask);

/// Number of 26-connected foreground components.
int connected_components_26(const VoxelMask& mask);

/// Per-voxel max over skeleton points of exp(-|v-s|^2 / (2 sigma^2)).
RimHeatmap gaussian_heatmap(const PointSet3& skeleton, double sigma_mm,
                            const VoxelMask& grid_template);

/// Foreground iff heatmap value >= threshold (default 0.3).
VoxelMask binarize_heatmap(const RimHeatmap& h, double threshold = 0.3);

/// Symmetric Chamfer distance in mm:
/// (1/|A|) sum_a min_b |a-b| + (1/|B|) sum_b min_a |b-a|.
double chamfer_distance(const PointSet3& a, const PointSet3& b);

} // namespace glenoid
