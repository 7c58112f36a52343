#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "glenoid/geometry.hpp"
#include "glenoid/metrics.hpp"
#include "glenoid/phantom.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace glenoid;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Eigen::Vector2d> circle_points(Eigen::Vector2d center, double radius,
                                           double span_deg, int n,
                                           double start_deg = 0.0) {
    std::vector<Eigen::Vector2d> pts;
    for (int i = 0; i < n; ++i) {
        const double t = (start_deg + span_deg * i / (n - 1)) * kPi / 180.0;
        pts.push_back(center + radius * Eigen::Vector2d(std::cos(t), std::sin(t)));
    }
    return pts;
}

// filled disc raster with an optional half-plane cut at signed distance
// `cut` from the center along +x (cells with x > cut removed)
Raster2 disc_raster(double radius, double cell, double cut = 1e9) {
    Raster2 r;
    r.cell_mm = cell;
    const int half = static_cast<int>(std::ceil(radius / cell)) + 4;
    r.nx = r.ny = 2 * half + 1;
    r.origin_u = -half * cell;
    r.origin_v = -half * cell;
    r.data.assign(static_cast<std::size_t>(r.nx) * r.ny, 0);
    for (int j = 0; j < r.ny; ++j)
        for (int i = 0; i < r.nx; ++i) {
            const Eigen::Vector2d p = r.cell_center_mm(i, j);
            if (p.norm() <= radius && p.x() <= cut) r.data[r.index(i, j)] = 1;
        }
    return r;
}

} // namespace

TEST_CASE("severity bands use closed-interval Moderate") {
    CHECK(classify_severity(13.49) == Severity::Low);
    CHECK(classify_severity(13.5) == Severity::Moderate);
    CHECK(classify_severity(20.0) == Severity::Moderate);
    CHECK(classify_severity(20.01) == Severity::High);
    CHECK(severity_name(Severity::High) == "High");
}

TEST_CASE("fit_plane recovers an exact horizontal plane") {
    PointSet3 rim;
    for (int i = 0; i < 12; ++i) {
        const double t = 2.0 * kPi * i / 12.0;
        rim.points.push_back({10 * std::cos(t), 10 * std::sin(t), 5.0});
    }
    const EnFacePlane p = fit_plane(rim);
    CHECK((p.normal - Eigen::Vector3d::UnitZ()).norm() < 1e-12);
    CHECK(p.origin.z() == doctest::Approx(5.0).epsilon(1e-12));
    // basis is right-handed and orthonormal
    CHECK(std::abs(p.basis_u.norm() - 1.0) < 1e-9);
    CHECK(std::abs(p.basis_v.norm() - 1.0) < 1e-9);
    CHECK(std::abs(p.basis_u.dot(p.basis_v)) < 1e-9);
    CHECK((p.basis_u.cross(p.basis_v) - p.normal).norm() < 1e-9);
}

TEST_CASE("fit_plane tolerates noise on a tilted plane") {
    const Eigen::Vector3d n =
        Eigen::AngleAxisd(25.0 * kPi / 180.0, Eigen::Vector3d::UnitX()) *
        Eigen::Vector3d::UnitZ();
    const Eigen::Vector3d u = n.cross(Eigen::Vector3d::UnitX()).normalized();
    const Eigen::Vector3d v = n.cross(u);

    std::mt19937 rng(5);
    std::normal_distribution<double> noise(0.0, 0.1);
    PointSet3 rim;
    for (int i = 0; i < 60; ++i) {
        const double t = 2.0 * kPi * i / 60.0;
        rim.points.push_back(12.0 * std::cos(t) * u + 12.0 * std::sin(t) * v +
                             noise(rng) * n);
    }
    CHECK(angular_error_deg(fit_plane(rim).normal, n) < 1.0);
}

TEST_CASE("fit_plane rejects collinear points") {
    PointSet3 rim;
    rim.points = {{0, 0, 0}, {1, 1, 1}, {2, 2, 2}};
    CHECK_THROWS_WITH(fit_plane(rim), "rim points collinear");
    rim.points.resize(2);
    CHECK_THROWS(fit_plane(rim));
}

TEST_CASE("project maps plane coordinates exactly") {
    EnFacePlane plane;
    plane.origin = {1.0, 2.0, 3.0};
    plane.normal = Eigen::Vector3d::UnitZ();
    plane.basis_u = Eigen::Vector3d::UnitX();
    plane.basis_v = Eigen::Vector3d::UnitY();

    PointSet3 pts;
    pts.points = {plane.origin,
                  plane.origin + 3.0 * plane.basis_u + 4.0 * plane.basis_v +
                      7.0 * plane.normal};
    const auto uv = project(pts, plane);
    CHECK(uv[0].norm() == 0.0);
    CHECK((uv[1] - Eigen::Vector2d(3, 4)).norm() < 1e-12);
}

TEST_CASE("project_mask area matches the phantom plate footprint") {
    PhantomSpec spec; // no defect, axis aligned
    const PhantomCase c = generate(spec);
    const EnFacePlane plane = fit_plane(c.rim_truth);
    const Raster2 r = project_mask(c.mask, plane);

    // analytic footprint: convex hull of the inferior circle (radius R at 0)
    // and the lobe (radius r2 at distance h) = two sectors + tangency trapezoid
    const double R = spec.radius_mm, r2 = 0.75 * R;
    const double h = c.height_truth_mm - R - r2;
    const double sin_phi = (R - r2) / h; // external-tangent taper angle
    const double phi = std::asin(sin_phi);
    const double area = (kPi / 2.0 + phi) * R * R + (kPi / 2.0 - phi) * r2 * r2 +
                        (R + r2) * std::cos(phi) * (h + (R - r2) * sin_phi);
    const double measured = static_cast<double>(r.foreground_count()) * r.cell_mm * r.cell_mm;
    CHECK(measured == doctest::Approx(area).epsilon(0.03));
}

TEST_CASE("glenoid_height of an axis-aligned and a rotated ellipse") {
    for (double tilt_deg : {0.0, 40.0}) {
        Raster2 r;
        r.cell_mm = 0.25;
        r.nx = r.ny = 180;
        r.origin_u = -180 * 0.25 / 2;
        r.origin_v = -180 * 0.25 / 2;
        r.data.assign(static_cast<std::size_t>(r.nx) * r.ny, 0);
        const double c = std::cos(tilt_deg * kPi / 180.0);
        const double s = std::sin(tilt_deg * kPi / 180.0);
        for (int j = 0; j < r.ny; ++j)
            for (int i = 0; i < r.nx; ++i) {
                const Eigen::Vector2d p = r.cell_center_mm(i, j);
                const double x = c * p.x() + s * p.y();
                const double y = -s * p.x() + c * p.y();
                if (x * x / (15.0 * 15.0) + y * y / (10.0 * 10.0) <= 1.0)
                    r.data[r.index(i, j)] = 1;
            }
        CHECK(glenoid_height(r) == doctest::Approx(30.0).epsilon(0.02));
    }
}

TEST_CASE("glenoid_height of an empty raster throws") {
    Raster2 r;
    r.nx = r.ny = 4;
    r.cell_mm = 1.0;
    r.data.assign(16, 0);
    CHECK_THROWS_WITH(glenoid_height(r), "empty projection");
}

TEST_CASE("unconstrained fit recovers exact circles to 1e-6") {
    const auto pts = circle_points({3.0, -2.0}, 12.0, 315.0, 8);
    const FittedCircle c = fit_circle_unconstrained(pts);
    CHECK((c.center - Eigen::Vector2d(3, -2)).norm() < 1e-6);
    CHECK(std::abs(c.radius - 12.0) < 1e-6);
    CHECK_FALSE(c.constrained);
}

TEST_CASE("unconstrained fit sweeps radii and arc spans") {
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> rad(5.0, 25.0);
    std::uniform_real_distribution<double> span(90.0, 360.0);
    std::uniform_real_distribution<double> off(-10.0, 10.0);
    for (int t = 0; t < 40; ++t) {
        const Eigen::Vector2d center(off(rng), off(rng));
        const double r = rad(rng);
        const auto pts = circle_points(center, r, span(rng), 24, off(rng) * 7);
        const FittedCircle c = fit_circle_unconstrained(pts);
        CHECK((c.center - center).norm() < 1e-6);
        CHECK(std::abs(c.radius - r) < 1e-6);
    }
}

TEST_CASE("noisy unconstrained fit beats the generator parameters on J") {
    std::mt19937 rng(21);
    std::normal_distribution<double> noise(0.0, 0.1);
    auto pts = circle_points({3.0, -2.0}, 12.0, 300.0, 40);
    for (auto& p : pts) {
        const Eigen::Vector2d dir = (p - Eigen::Vector2d(3, -2)).normalized();
        p += noise(rng) * dir;
    }
    const FittedCircle c = fit_circle_unconstrained(pts);
    CHECK(circle_objective(pts, c.center, c.radius) <=
          circle_objective(pts, {3.0, -2.0}, 12.0) + 1e-12);
}

TEST_CASE("unconstrained fit rejects collinear points") {
    std::vector<Eigen::Vector2d> line = {{0, 0}, {1, 1}, {2, 2}, {3, 3}};
    CHECK_THROWS_WITH(fit_circle_unconstrained(line), "circle underdetermined");
}

TEST_CASE("constrained fit keeps the radius and matches a grid-search oracle") {
    const auto pts = circle_points({0.0, 0.0}, 10.0, 180.0, 20);

    SUBCASE("matching radius recovers the center exactly") {
        const FittedCircle c = fit_circle_constrained(pts, 10.0);
        CHECK(c.radius == 10.0);
        CHECK(c.constrained);
        CHECK(c.center.norm() < 1e-6);
    }

    SUBCASE("mismatched radius still minimizes J") {
        const FittedCircle c = fit_circle_constrained(pts, 8.0);
        CHECK(c.radius == 8.0);

        // 0.01 mm grid search around the optimizer's answer
        double best = std::numeric_limits<double>::max();
        Eigen::Vector2d best_c = c.center;
        for (double du = -0.25; du <= 0.25; du += 0.01)
            for (double dv = -0.25; dv <= 0.25; dv += 0.01) {
                const Eigen::Vector2d cand = c.center + Eigen::Vector2d(du, dv);
                const double j = circle_objective(pts, cand, 8.0);
                if (j < best) {
                    best = j;
                    best_c = cand;
                }
            }
        CHECK((c.center - best_c).norm() <= 0.01 * std::numbers::sqrt2 + 1e-12);
        CHECK(circle_objective(pts, c.center, 8.0) <= best + 1e-9);
    }
}

TEST_CASE("constrained fit validates input") {
    std::vector<Eigen::Vector2d> one = {{1, 2}};
    CHECK_THROWS(fit_circle_constrained(one, 5.0));
    std::vector<Eigen::Vector2d> two = {{1, 2}, {3, 4}};
    CHECK_THROWS(fit_circle_constrained(two, -1.0));
}

TEST_CASE("defect_length on a full disc is zero") {
    const Raster2 r = disc_raster(10.0, 0.25);
    FittedCircle c;
    c.center = {0.0, 0.0};
    c.radius = 9.0;
    CHECK(defect_length(r, c, 0.5).B_mm == 0.0);
}

TEST_CASE("defect_length recovers a chord cut analytically") {
    // half-plane cut at x = +2: B = r - 2 = 8 toward the cut
    const Raster2 r = disc_raster(10.0, 0.1, 2.0);
    FittedCircle c;
    c.center = {0.0, 0.0};
    c.radius = 10.0;
    const DefectResult d = defect_length(r, c, 0.5);
    CHECK(d.B_mm == doctest::Approx(8.0).epsilon(0.02));
    // toward +x (theta near 0 or 360)
    const double wrapped = std::min(d.angle_deg, 360.0 - d.angle_deg);
    CHECK(wrapped < 2.0);
}

TEST_CASE("defect_length with material entirely behind the center") {
    // cut past the center (x <= -2): the boundary coordinate along the scan
    // direction goes negative, so the gap exceeds the radius but stays <= 2r
    const Raster2 r = disc_raster(10.0, 0.1, -2.0);
    FittedCircle c;
    c.center = {0.0, 0.0};
    c.radius = 10.0;
    const DefectResult d = defect_length(r, c, 0.5);
    CHECK(d.B_mm >= 12.0 - 0.2); // at least r - (-2) along the cut axis
    CHECK(d.B_mm <= 2.0 * c.radius);

    // a 30-degree empty sector forces gap == r in that sector
    Raster2 sector = disc_raster(10.0, 0.1);
    for (int j = 0; j < sector.ny; ++j)
        for (int i = 0; i < sector.nx; ++i) {
            const Eigen::Vector2d p = sector.cell_center_mm(i, j);
            const double ang = std::atan2(p.y(), p.x()) * 180.0 / kPi;
            if (std::abs(ang) <= 15.0) sector.data[sector.index(i, j)] = 0;
        }
    const DefectResult ds = defect_length(sector, c, 0.5);
    CHECK(ds.B_mm == doctest::Approx(10.0).epsilon(0.01));
}

TEST_CASE("defect_length monotonicity: deeper cuts never shrink B") {
    FittedCircle c;
    c.center = {0.0, 0.0};
    c.radius = 10.0;
    double prev = -1.0;
    for (double cut : {6.0, 3.0, 0.0, -3.0}) {
        const Raster2 r = disc_raster(10.0, 0.2, cut);
        const double B = defect_length(r, c, 0.5).B_mm;
        CHECK(B >= prev);
        prev = B;
    }
}

TEST_CASE("defect_length input validation") {
    const Raster2 r = disc_raster(5.0, 0.25);
    FittedCircle c;
    c.center = {0.0, 0.0};
    c.radius = 5.0;
    CHECK_THROWS(defect_length(r, c, 0.0));
    CHECK_THROWS(defect_length(r, c, 1.5));

    FittedCircle far;
    far.center = {100.0, 100.0};
    far.radius = 2.0;
    CHECK_THROWS_WITH(defect_length(r, far, 0.5), "circle placement invalid");
}

TEST_CASE("measure_bone_loss on planted-defect phantoms") {
    PhantomSpec spec;
    spec.defect_pct = 25.0;
    spec.orientation = random_rotation(3);
    const PhantomCase c = generate(spec);
    const MeasurementReport rep = measure_bone_loss(c.mask, c.rim_truth);
    CHECK(std::abs(rep.bone_loss_pct - 25.0) < 1.5);
    CHECK(rep.severity == Severity::High);
    CHECK(rep.bone_loss_pct ==
          doctest::Approx(100.0 * rep.defect_B_mm / rep.diameter_A_mm).epsilon(1e-9));

    PhantomSpec intact;
    const PhantomCase c0 = generate(intact);
    CHECK(measure_bone_loss(c0.mask, c0.rim_truth).bone_loss_pct < 1.5);
}

TEST_CASE("measure_bone_loss tags stage failures") {
    PhantomSpec spec;
    const PhantomCase c = generate(spec);
    PointSet3 bad;
    bad.points = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    try {
        measure_bone_loss(c.mask, bad);
        FAIL("expected a stage error");
    } catch (const PipelineError& e) {
        CHECK(e.stage() == "plane");
    }
}

TEST_CASE("scaling all coordinates leaves bone loss nearly unchanged") {
    PhantomSpec spec;
    spec.defect_pct = 18.0;
    spec.spacing_mm = 0.4;
    const PhantomCase c = generate(spec);

    // scale every physical coordinate by 1.5: same voxel data, relabeled
    // spacing, rim points stretched to match
    VoxelMask scaled = c.mask;
    for (double& s : scaled.spacing_mm) s *= 1.5;
    PointSet3 rim = c.rim_truth;
    for (auto& p : rim.points) p *= 1.5;

    const double a = measure_bone_loss(c.mask, c.rim_truth).bone_loss_pct;
    const double b = measure_bone_loss(scaled, rim).bone_loss_pct;
    CHECK(std::abs(a - b) < 0.5);
}

TEST_CASE("default ratio grid has 11 equally spaced values") {
    const auto grid = default_ratio_grid();
    REQUIRE(grid.size() == 11);
    CHECK(grid.front() == doctest::Approx(0.65).epsilon(1e-12));
    CHECK(grid.back() == doctest::Approx(0.75).epsilon(1e-12));
    for (std::size_t i = 1; i < grid.size(); ++i)
        CHECK(grid[i] - grid[i - 1] == doctest::Approx(0.01).epsilon(1e-9));
}

TEST_CASE("tune_diameter_ratio on a single case reports that case's error") {
    PhantomSpec spec;
    spec.defect_pct = 20.0;
    const PhantomCase c = generate(spec);
    const std::vector<TuneCase> cases = {{&c.mask, &c.rim_truth, 20.0}};
    const TuneResult res = tune_diameter_ratio(cases, {0.6955});
    REQUIRE(res.mae_curve.size() == 1);
    const MeasurementReport rep = measure_bone_loss(c.mask, c.rim_truth);
    CHECK(res.mae_curve[0].second ==
          doctest::Approx(std::abs(rep.bone_loss_pct - 20.0)).epsilon(1e-9));
    CHECK(res.best_ratio == 0.6955);
}
