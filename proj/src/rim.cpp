#include "glenoid/rim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace glenoid {

// --- resample_polyline ---------------------------------------------------

PointSet3 resample_polyline(const PointSet3& landmarks, int n) {
    if (!landmarks.ordered) throw std::invalid_argument("landmarks must be ordered");
    if (landmarks.size() < 2) throw std::invalid_argument("need at least 2 landmarks");
    if (n < 2) throw std::invalid_argument("resample count must be >= 2");

    const auto& pts = landmarks.points;
    std::vector<double> cum(pts.size(), 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i)
        cum[i] = cum[i - 1] + (pts[i] - pts[i - 1]).norm();
    const double total = cum.back();
    if (total <= 0.0) throw std::invalid_argument("zero-length polyline");

    PointSet3 out;
    out.ordered = true;
    out.points.reserve(n);
    out.points.push_back(pts.front());
    std::size_t seg = 0;
    for (int k = 1; k < n - 1; ++k) {
        const double target = total * k / (n - 1);
        while (seg + 2 < pts.size() && cum[seg + 1] < target) ++seg;
        const double len = cum[seg + 1] - cum[seg];
        const double t = len > 0.0 ? (target - cum[seg]) / len : 0.0;
        out.points.push_back(pts[seg] + t * (pts[seg + 1] - pts[seg]));
    }
    out.points.push_back(pts.back());
    return out;
}

// --- spline_tube ---------------------------------------------------------

namespace {

// Catmull-Rom segment between p1 and p2 with clamped end tangents.
Eigen::Vector3d catmull_rom(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1,
                            const Eigen::Vector3d& p2, const Eigen::Vector3d& p3, double t) {
    const double t2 = t * t, t3 = t2 * t;
    return 0.5 * ((2.0 * p1) + (-p0 + p2) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                  (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3);
}

std::vector<Eigen::Vector3d> sample_spline(const PointSet3& landmarks, double step_mm) {
    const auto& p = landmarks.points;
    const std::size_t n = p.size();
    std::vector<Eigen::Vector3d> out;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const Eigen::Vector3d& a = p[i == 0 ? 0 : i - 1];
        const Eigen::Vector3d& b = p[i];
        const Eigen::Vector3d& c = p[i + 1];
        const Eigen::Vector3d& d = p[std::min(i + 2, n - 1)];
        const double chord = (c - b).norm();
        const int steps = std::max(1, static_cast<int>(std::ceil(chord / step_mm)));
        for (int s = 0; s < steps; ++s)
            out.push_back(catmull_rom(a, b, c, d, static_cast<double>(s) / steps));
    }
    out.push_back(p.back());
    return out;
}

} // namespace

VoxelMask spline_tube(const PointSet3& landmarks, double radius_mm,
                      const VoxelMask& grid_template) {
    if (!landmarks.ordered) throw std::invalid_argument("landmarks must be ordered");
    if (landmarks.size() < 2) throw std::invalid_argument("need at least 2 landmarks");
    if (radius_mm <= 0.0) throw std::invalid_argument("tube radius must be positive");
    const double max_sp = *std::max_element(grid_template.spacing_mm.begin(),
                                            grid_template.spacing_mm.end());
    if (max_sp > radius_mm) throw std::invalid_argument("tube undersampled");

    double total = 0.0;
    for (std::size_t i = 1; i < landmarks.size(); ++i)
        total += (landmarks.points[i] - landmarks.points[i - 1]).norm();
    if (total <= 0.0) throw std::invalid_argument("zero-length polyline");

    VoxelMask out = VoxelMask::zeros(grid_template.dims, grid_template.spacing_mm, true,
                                     grid_template.frame);
    const auto sp = out.spacing_mm;
    const double r2 = radius_mm * radius_mm;
    for (const auto& q : sample_spline(landmarks, 0.25 * grid_template.min_spacing())) {
        const int i0 = std::max(0, static_cast<int>(std::ceil((q.x() - radius_mm) / sp[0])));
        const int i1 = std::min(out.dims[0] - 1,
                                static_cast<int>(std::floor((q.x() + radius_mm) / sp[0])));
        const int j0 = std::max(0, static_cast<int>(std::ceil((q.y() - radius_mm) / sp[1])));
        const int j1 = std::min(out.dims[1] - 1,
                                static_cast<int>(std::floor((q.y() + radius_mm) / sp[1])));
        const int k0 = std::max(0, static_cast<int>(std::ceil((q.z() - radius_mm) / sp[2])));
        const int k1 = std::min(out.dims[2] - 1,
                                static_cast<int>(std::floor((q.z() + radius_mm) / sp[2])));
        for (int k = k0; k <= k1; ++k)
            for (int j = j0; j <= j1; ++j)
                for (int i = i0; i <= i1; ++i)
                    if ((out.voxel_center_mm(i, j, k) - q).squaredNorm() <= r2)
                        out.at(i, j, k) = 1.0f;
    }
    return out;
}

// --- skeletonize (Lee 1994 thinning) -------------------------------------

namespace {

// Euler characteristic deltas per octant configuration [Lee94].
const int* euler_lut() {
    static int lut[256] = {0};
    static bool init = false;
    if (!init) {
        const int idx[] = {1,   3,   5,   7,   9,   11,  13,  15,  17,  19,  21,  23,  25,
                           27,  29,  31,  33,  35,  37,  39,  41,  43,  45,  47,  49,  51,
                           53,  55,  57,  59,  61,  63,  65,  67,  69,  71,  73,  75,  77,
                           79,  81,  83,  85,  87,  89,  91,  93,  95,  97,  99,  101, 103,
                           105, 107, 109, 111, 113, 115, 117, 119, 121, 123, 125, 127, 129,
                           131, 133, 135, 137, 139, 141, 143, 145, 147, 149, 151, 153, 155,
                           157, 159, 161, 163, 165, 167, 169, 171, 173, 175, 177, 179, 181,
                           183, 185, 187, 189, 191, 193, 195, 197, 199, 201, 203, 205, 207,
                           209, 211, 213, 215, 217, 219, 221, 223, 225, 227, 229, 231, 233,
                           235, 237, 239, 241, 243, 245, 247, 249, 251, 253, 255};
        const int val[] = {1,  -1, -1, 1,  -3, -1, -1, 1,  -1, 1,  1,  -1, 3,  1,  1,  -1,
                           -3, -1, 3,  1,  1,  -1, 3,  1,  -1, 1,  1,  -1, 3,  1,  1,  -1,
                           -3, 3,  -1, 1,  1,  3,  -1, 1,  -1, 1,  1,  -1, 3,  1,  1,  -1,
                           1,  3,  3,  1,  5,  3,  3,  1,  -1, 1,  1,  -1, 3,  1,  1,  -1,
                           -7, -1, -1, 1,  -3, -1, -1, 1,  -1, 1,  1,  -1, 3,  1,  1,  -1,
                           -3, -1, 3,  1,  1,  -1, 3,  1,  -1, 1,  1,  -1, 3,  1,  1,  -1,
                           -3, 3,  -1, 1,  1,  3,  -1, 1,  -1, 1,  1,  -1, 3,  1,  1,  -1,
                           1,  3,  3,  1,  5,  3,  3,  1,  -1, 1,  1,  -1, 3,  1,  1,  -1};
        for (int i = 0; i < 128; ++i) lut[idx[i]] = val[i];
        init = true;
    }
    return lut;
}

// nbrs layout: index (dz+1)*9 + (dy+1)*3 + (dx+1); out-of-bounds -> 0.
bool is_euler_invariant(const int* nbrs) {
    static const int octants[8][7] = {
        {24, 25, 15, 16, 21, 22, 12}, // SWU
        {26, 23, 17, 14, 25, 22, 16}, // SEU
        {18, 21, 9, 12, 19, 22, 10},  // NWU
        {20, 23, 19, 22, 11, 14, 10}, // NEU
        {6, 15, 7, 16, 3, 12, 4},     // SWB
        {8, 7, 17, 16, 5, 4, 14},     // SEB
        {0, 9, 3, 12, 1, 10, 4},      // NWB
        {2, 1, 11, 10, 5, 4, 14},     // NEB
    };
    const int* lut = euler_lut();
    int euler = 0;
    for (const auto& oct : octants) {
        unsigned char n = 1;
        for (int b = 0; b < 7; ++b)
            if (nbrs[oct[b]] == 1) n |= static_cast<unsigned char>(128 >> b);
        euler += lut[n];
    }
    return euler == 0;
}

void octree_labeling(int octant, int label, int* cube);

void label_point(int i, int label, int* cube) {
    // start recursion with any octant that contains point i
    switch (i) {
        case 0: case 1: case 3: case 4: case 9: case 10: case 12:
            octree_labeling(1, label, cube); break;
        case 2: case 5: case 11: case 13:
            octree_labeling(2, label, cube); break;
        case 6: case 7: case 14: case 15:
            octree_labeling(3, label, cube); break;
        case 8: case 16:
            octree_labeling(4, label, cube); break;
        case 17: case 18: case 20: case 21:
            octree_labeling(5, label, cube); break;
        case 19: case 22:
            octree_labeling(6, label, cube); break;
        case 23: case 24:
            octree_labeling(7, label, cube); break;
        case 25:
            octree_labeling(8, label, cube); break;
        default: break;
    }
}

void octree_labeling(int octant, int label, int* cube) {
    struct Link { int point; int octants[3]; int n; };
    // adjacency of each octant's 7 cube cells to neighboring octants [Lee94]
    static const Link links[8][7] = {
        {{0,{},0},{1,{2},1},{3,{3},1},{4,{2,3,4},3},{9,{5},1},{10,{2,5,6},3},{12,{3,5,7},3}},
        {{1,{1},1},{4,{1,3,4},3},{10,{1,5,6},3},{2,{},0},{5,{4},1},{11,{6},1},{13,{4,6,8},3}},
        {{3,{1},1},{4,{1,2,4},3},{12,{1,5,7},3},{6,{},0},{7,{4},1},{14,{7},1},{15,{4,7,8},3}},
        {{4,{1,2,3},3},{5,{2},1},{13,{2,6,8},3},{7,{3},1},{15,{3,7,8},3},{8,{},0},{16,{8},1}},
        {{9,{1},1},{10,{1,2,6},3},{12,{1,3,7},3},{17,{},0},{18,{6},1},{20,{7},1},{21,{6,7,8},3}},
        {{10,{1,2,5},3},{11,{2},1},{13,{2,4,8},3},{18,{5},1},{21,{5,7,8},3},{19,{},0},{22,{8},1}},
        {{12,{1,3,5},3},{14,{3},1},{15,{3,4,8},3},{20,{5},1},{21,{5,6,8},3},{23,{},0},{24,{8},1}},
        {{13,{2,4,6},3},{15,{3,4,7},3},{16,{4},1},{21,{5,6,7},3},{22,{6},1},{24,{7},1},{25,{},0}},
    };
    for (const Link& link : links[octant - 1]) {
        if (cube[link.point] != 1) continue;
        cube[link.point] = label;
        for (int a = 0; a < link.n; ++a) octree_labeling(link.octants[a], label, cube);
    }
}

// True when removing the center voxel keeps its 26-neighborhood connected.
bool is_simple_point(const int* nbrs) {
    int cube[26];
    for (int i = 0; i < 13; ++i) cube[i] = nbrs[i];
    for (int i = 14; i < 27; ++i) cube[i - 1] = nbrs[i];
    int label = 2;
    for (int i = 0; i < 26; ++i) {
        if (cube[i] != 1) continue;
        label_point(i, label, cube);
        ++label;
        if (label - 2 >= 2) return false;
    }
    return true;
}

struct ThinGrid {
    const VoxelMask* mask;
    std::vector<std::uint8_t> v;

    explicit ThinGrid(const VoxelMask& m) : mask(&m), v(m.voxel_count()) {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = m.data[i] > 0.5f ? 1 : 0;
    }
    std::uint8_t get(int x, int y, int z) const {
        return mask->in_bounds(x, y, z) ? v[mask->index(x, y, z)] : 0;
    }
    void neighborhood(int x, int y, int z, int* nbrs) const {
        int n = 0;
        for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) nbrs[n++] = get(x + dx, y + dy, z + dz);
    }
    int neighbor_count(int x, int y, int z) const {
        int n = -1; // exclude center
        for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                    if (get(x + dx, y + dy, z + dz)) ++n;
        return n;
    }
};

} // namespace

VoxelMask skeletonize_mask(const VoxelMask& mask) {
    if (!mask.binary) throw std::invalid_argument("skeletonize expects a binary mask");
    ThinGrid g(mask);

    std::vector<std::array<int, 3>> fg;
    for (int k = 0; k < mask.dims[2]; ++k)
        for (int j = 0; j < mask.dims[1]; ++j)
            for (int i = 0; i < mask.dims[0]; ++i)
                if (g.v[mask.index(i, j, k)]) fg.push_back({i, j, k});

    static const int dirs[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0},
                                   {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};
    int nbrs[27];
    std::vector<std::array<int, 3>> candidates;
    int unchanged = 0;
    while (unchanged < 6) {
        unchanged = 0;
        for (const auto& d : dirs) {
            candidates.clear();
            for (const auto& p : fg) {
                const int x = p[0], y = p[1], z = p[2];
                if (!g.v[mask.index(x, y, z)]) continue;
                if (g.get(x + d[0], y + d[1], z + d[2])) continue; // not this border
                if (g.neighbor_count(x, y, z) == 1) continue;      // arc endpoint
                g.neighborhood(x, y, z, nbrs);
                if (!is_euler_invariant(nbrs)) continue;
                if (!is_simple_point(nbrs)) continue;
                candidates.push_back(p);
            }
            // sequential recheck: parallel candidates may stop being simple
            bool changed = false;
            for (const auto& p : candidates) {
                g.v[mask.index(p[0], p[1], p[2])] = 0;
                g.neighborhood(p[0], p[1], p[2], nbrs);
                if (!is_simple_point(nbrs))
                    g.v[mask.index(p[0], p[1], p[2])] = 1;
                else
                    changed = true;
            }
            if (!changed) ++unchanged;
        }
        std::erase_if(fg, [&](const auto& p) { return !g.v[mask.index(p[0], p[1], p[2])]; });
    }

    VoxelMask out = VoxelMask::zeros(mask.dims, mask.spacing_mm, true, mask.frame);
    for (const auto& p : fg) out.at(p[0], p[1], p[2]) = 1.0f;
    return out;
}

PointSet3 skeletonize(const VoxelMask& mask) {
    return skeletonize_mask(mask).foreground_points();
}

int connected_components_26(const VoxelMask& mask) {
    std::vector<std::uint8_t> seen(mask.voxel_count(), 0);
    int components = 0;
    std::vector<std::array<int, 3>> stack;
    for (int k = 0; k < mask.dims[2]; ++k)
        for (int j = 0; j < mask.dims[1]; ++j)
            for (int i = 0; i < mask.dims[0]; ++i) {
                if (!mask.foreground(i, j, k) || seen[mask.index(i, j, k)]) continue;
                ++components;
                stack.push_back({i, j, k});
                seen[mask.index(i, j, k)] = 1;
                while (!stack.empty()) {
                    const auto p = stack.back();
                    stack.pop_back();
                    for (int dz = -1; dz <= 1; ++dz)
                        for (int dy = -1; dy <= 1; ++dy)
                            for (int dx = -1; dx <= 1; ++dx) {
                                const int x = p[0] + dx, y = p[1] + dy, z = p[2] + dz;
                                if (!mask.in_bounds(x, y, z)) continue;
                                if (!mask.foreground(x, y, z)) continue;
                                if (seen[mask.index(x, y, z)]) continue;
                                seen[mask.index(x, y, z)] = 1;
                                stack.push_back({x, y, z});
                            }
                }
            }
    return components;
}

// --- gaussian_heatmap ----------------------------------------------------

RimHeatmap gaussian_heatmap(const PointSet3& skeleton, double sigma_mm,
                            const VoxelMask& grid_template) {
    if (sigma_mm <= 0.0) throw std::invalid_argument("sigma must be positive");
    RimHeatmap h;
    h.sigma_mm = sigma_mm;
    h.grid = VoxelMask::zeros(grid_template.dims, grid_template.spacing_mm, false,
                              grid_template.frame);
    const double cutoff = 6.0 * sigma_mm; // exp(-18) ~ 1.5e-8, below any tolerance used
    const auto sp = h.grid.spacing_mm;
    for (const auto& s : skeleton.points) {
        const int i0 = std::max(0, static_cast<int>(std::ceil((s.x() - cutoff) / sp[0])));
        const int i1 = std::min(h.grid.dims[0] - 1,
                                static_cast<int>(std::floor((s.x() + cutoff) / sp[0])));
        const int j0 = std::max(0, static_cast<int>(std::ceil((s.y() - cutoff) / sp[1])));
        const int j1 = std::min(h.grid.dims[1] - 1,
                                static_cast<int>(std::floor((s.y() + cutoff) / sp[1])));
        const int k0 = std::max(0, static_cast<int>(std::ceil((s.z() - cutoff) / sp[2])));
        const int k1 = std::min(h.grid.dims[2] - 1,
                                static_cast<int>(std::floor((s.z() + cutoff) / sp[2])));
        for (int k = k0; k <= k1; ++k)
            for (int j = j0; j <= j1; ++j)
                for (int i = i0; i <= i1; ++i) {
                    const double d2 = (h.grid.voxel_center_mm(i, j, k) - s).squaredNorm();
                    const float v =
                        static_cast<float>(std::exp(-d2 / (2.0 * sigma_mm * sigma_mm)));
                    float& cell = h.grid.at(i, j, k);
                    if (v > cell) cell = v;
                }
    }
    return h;
}

VoxelMask binarize_heatmap(const RimHeatmap& h, double threshold) {
    if (threshold <= 0.0 || threshold >= 1.0)
        throw std::invalid_argument("binarization threshold must be in (0,1)");
    VoxelMask out = VoxelMask::zeros(h.grid.dims, h.grid.spacing_mm, true, h.grid.frame);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = h.grid.data[i] >= static_cast<float>(threshold) ? 1.0f : 0.0f;
    return out;
}

// --- chamfer_distance ----------------------------------------------------

namespace {

constexpr std::size_t kBruteForceLimit = 256;

// Minimal 3-D k-d tree for nearest-neighbor queries.
class KdTree3 {
public:
    explicit KdTree3(const std::vector<Eigen::Vector3d>& pts) : pts_(pts) {
        order_.resize(pts.size());
        std::iota(order_.begin(), order_.end(), 0u);
        build(0, order_.size(), 0);
    }

    double nearest_dist(const Eigen::Vector3d& q) const {
        double best = std::numeric_limits<double>::max();
        search(q, 0, order_.size(), 0, best);
        return std::sqrt(best);
    }

private:
    void build(std::size_t lo, std::size_t hi, int axis) {
        if (hi - lo <= 1) return;
        const std::size_t mid = (lo + hi) / 2;
        std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                         [&](std::size_t a, std::size_t b) {
                             return pts_[a](axis) < pts_[b](axis);
                         });
        build(lo, mid, (axis + 1) % 3);
        build(mid + 1, hi, (axis + 1) % 3);
    }

    void search(const Eigen::Vector3d& q, std::size_t lo, std::size_t hi, int axis,
                double& best) const {
        if (lo >= hi) return;
        const std::size_t mid = (lo + hi) / 2;
        const Eigen::Vector3d& p = pts_[order_[mid]];
        best = std::min(best, (p - q).squaredNorm());
        const double delta = q(axis) - p(axis);
        const int next = (axis + 1) % 3;
        if (delta < 0) {
            search(q, lo, mid, next, best);
            if (delta * delta < best) search(q, mid + 1, hi, next, best);
        } else {
            search(q, mid + 1, hi, next, best);
            if (delta * delta < best) search(q, lo, mid, next, best);
        }
    }

    const std::vector<Eigen::Vector3d>& pts_;
    std::vector<std::size_t> order_;
};

double mean_nearest(const std::vector<Eigen::Vector3d>& from,
                    const std::vector<Eigen::Vector3d>& to) {
    double sum = 0.0;
    if (from.size() <= kBruteForceLimit && to.size() <= kBruteForceLimit) {
        for (const auto& a : from) {
            double best = std::numeric_limits<double>::max();
            for (const auto& b : to) best = std::min(best, (a - b).squaredNorm());
            sum += std::sqrt(best);
        }
    } else {
        KdTree3 tree(to);
        for (const auto& a : from) sum += tree.nearest_dist(a);
    }
    return sum / static_cast<double>(from.size());
}

} // namespace

double chamfer_distance(const PointSet3& a, const PointSet3& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("chamfer undefined on empty set");
    return mean_nearest(a.points, b.points) + mean_nearest(b.points, a.points);
}

} // namespace glenoid
