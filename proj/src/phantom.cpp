#include "glenoid/phantom.hpp"

#include "glenoid/geometry.hpp"
#include "glenoid/metrics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace glenoid {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Signed distance to the convex sweep between the inferior circle
// (origin, r1) and the superior lobe (distance h along +y, r2); r1 >= r2.
double profile_sdf(double x, double y, double r1, double r2, double h) {
    const double qx = std::abs(x);
    const double b = (r1 - r2) / h;
    const double a = std::sqrt(1.0 - b * b);
    const double k = -b * qx + a * y;
    if (k < 0.0) return std::hypot(qx, y) - r1;
    if (k > a * h) return std::hypot(qx, y - h) - r2;
    return a * qx + b * y - r1;
}

} // namespace

PhantomCase generate(const PhantomSpec& spec) {
    if (spec.spacing_mm <= 0.0 || spec.spacing_mm > spec.radius_mm / 10.0)
        throw std::invalid_argument("spacing too coarse for phantom radius");
    if (spec.defect_pct < 0.0 || spec.defect_pct >= 50.0)
        throw std::invalid_argument("defect_pct must be in [0, 50)");
    if (spec.plate_thickness_mm <= 0.0)
        throw std::invalid_argument("plate thickness must be positive");
    if (std::abs(spec.orientation.determinant() - 1.0) > 1e-9)
        throw std::invalid_argument("orientation must be a proper rotation");

    const double radius = spec.radius_mm;
    const double height = 2.0 * radius / spec.height_ratio;
    const double lobe_r = 0.75 * radius;
    const double lobe_c = height - radius - lobe_r; // lobe top at height - R
    if (lobe_c <= 0.26 * radius)
        throw std::invalid_argument("height ratio leaves no room for the superior lobe");
    const double defect_b = spec.defect_pct / 100.0 * 2.0 * radius;
    const double chord = radius - defect_b; // signed distance of the cut plane
    const Eigen::Vector2d dir(std::cos(spec.defect_angle_deg * kDegToRad),
                              std::sin(spec.defect_angle_deg * kDegToRad));
    const double thickness = spec.plate_thickness_mm;
    const double cup_r = 0.6 * radius;
    const Eigen::Vector2d cup_center = spec.cup_offset_mm * dir;

    // world-frame bounding box of the rotated local solid
    const Eigen::Vector3d lo_local(-radius, -radius, 0.0);
    const Eigen::Vector3d hi_local(radius, height - radius, thickness);
    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::max());
    Eigen::Vector3d hi = Eigen::Vector3d::Constant(std::numeric_limits<double>::lowest());
    for (int corner = 0; corner < 8; ++corner) {
        Eigen::Vector3d c;
        for (int a = 0; a < 3; ++a)
            c(a) = (corner >> a) & 1 ? hi_local(a) : lo_local(a);
        const Eigen::Vector3d w = spec.orientation * c;
        lo = lo.cwiseMin(w);
        hi = hi.cwiseMax(w);
    }
    const double margin = 2.0;
    const Eigen::Vector3d shift = Eigen::Vector3d::Constant(margin) - lo;

    PhantomCase out;
    std::array<int, 3> dims;
    for (int a = 0; a < 3; ++a)
        dims[a] =
            static_cast<int>(std::ceil((hi(a) - lo(a) + 2.0 * margin) / spec.spacing_mm)) + 1;
    out.mask = VoxelMask::zeros(dims, {spec.spacing_mm, spec.spacing_mm, spec.spacing_mm});

    const Eigen::Matrix3d inv = spec.orientation.transpose();
    for (int k = 0; k < dims[2]; ++k)
        for (int j = 0; j < dims[1]; ++j)
            for (int i = 0; i < dims[0]; ++i) {
                const Eigen::Vector3d p =
                    inv * (out.mask.voxel_center_mm(i, j, k) - shift);
                if (p.z() < 0.0 || p.z() > thickness) continue;
                if (profile_sdf(p.x(), p.y(), radius, lobe_r, lobe_c) > 0.0) continue;
                const Eigen::Vector2d p2(p.x(), p.y());
                if (p2.dot(dir) > chord) continue; // chord defect
                if (spec.cup_depth_mm > 0.0) {
                    const double s = 1.0 - (p2 - cup_center).squaredNorm() / (cup_r * cup_r);
                    const double depth = spec.cup_depth_mm * std::max(0.0, s);
                    if (p.z() > thickness - depth) continue;
                }
                out.mask.at(i, j, k) = 1.0f;
            }

    // rim landmarks: intact inferior arc (3 to 9 o'clock), 2 degree steps
    out.rim_truth.ordered = true;
    for (int deg = 180; deg <= 360; deg += 2) {
        const Eigen::Vector2d p2(radius * std::cos(deg * kDegToRad),
                                 radius * std::sin(deg * kDegToRad));
        if (p2.dot(dir) > chord + 1e-9) continue; // lost to the defect
        const Eigen::Vector3d local(p2.x(), p2.y(), thickness / 2.0);
        out.rim_truth.points.push_back(spec.orientation * local + shift);
    }

    out.normal_truth = spec.orientation.col(2);
    out.bone_loss_truth_pct = spec.defect_pct;
    out.height_truth_mm = height;
    return out;
}

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

namespace {

double uniform01(std::uint64_t& state) {
    return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

} // namespace

Eigen::Matrix3d random_rotation(std::uint64_t seed) {
    std::uint64_t state = seed;
    // Gaussian 4-vector via Box-Muller, normalized to a unit quaternion
    double g[4];
    for (int i = 0; i < 4; i += 2) {
        const double u1 = std::max(uniform01(state), 1e-300);
        const double u2 = uniform01(state);
        const double r = std::sqrt(-2.0 * std::log(u1));
        g[i] = r * std::cos(2.0 * std::numbers::pi * u2);
        g[i + 1] = r * std::sin(2.0 * std::numbers::pi * u2);
    }
    Eigen::Quaterniond q(g[0], g[1], g[2], g[3]);
    q.normalize();
    return q.toRotationMatrix();
}

std::vector<PhantomSpec> random_specs(const RandomPhantomOptions& opts) {
    if (opts.count <= 0) throw std::invalid_argument("phantom count must be positive");
    std::vector<PhantomSpec> specs;
    specs.reserve(opts.count);
    std::uint64_t master = opts.seed;
    for (int i = 0; i < opts.count; ++i) {
        std::uint64_t case_seed = splitmix64(master);
        std::uint64_t state = case_seed;
        PhantomSpec s;
        s.radius_mm = 10.0 + 6.0 * uniform01(state);
        s.defect_pct =
            opts.defect_min_pct + (opts.defect_max_pct - opts.defect_min_pct) * uniform01(state);
        s.defect_angle_deg = -30.0 + 60.0 * uniform01(state);
        s.plate_thickness_mm = 2.0 + 1.0 * uniform01(state);
        s.height_ratio = opts.height_ratio;
        s.spacing_mm = opts.spacing_mm;
        s.orientation = random_rotation(splitmix64(state));
        if (opts.cup_depth_mm > 0.0) {
            s.cup_depth_mm = opts.cup_depth_mm;
            s.cup_offset_mm = 0.3 * s.radius_mm;
        }
        s.rng_seed = case_seed;
        specs.push_back(s);
    }
    return specs;
}

NormalComparison pca_vs_rim_normal(const PhantomCase& c) {
    const PointSet3 fg = c.mask.foreground_points();
    if (fg.size() < 4) throw std::invalid_argument("phantom mask too small for PCA");

    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& p : fg.points) mean += p;
    mean /= static_cast<double>(fg.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : fg.points) {
        const Eigen::Vector3d d = p - mean;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const Eigen::Vector3d pca_normal = eig.eigenvectors().col(0);

    NormalComparison cmp;
    cmp.pca_angular_err_deg = angular_error_deg(pca_normal, c.normal_truth);
    cmp.rim_angular_err_deg =
        angular_error_deg(fit_plane(c.rim_truth).normal, c.normal_truth);
    return cmp;
}

} // namespace glenoid
