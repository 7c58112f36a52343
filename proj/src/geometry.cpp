#include "glenoid/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace glenoid {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

std::size_t Raster2::foreground_count() const {
    std::size_t n = 0;
    for (auto v : data)
        if (v) ++n;
    return n;
}

std::string severity_name(Severity s) {
    switch (s) {
        case Severity::Low: return "Low";
        case Severity::Moderate: return "Moderate";
        case Severity::High: return "High";
    }
    return "Low";
}

Severity classify_severity(double bone_loss_pct, double cutoff_low, double cutoff_high) {
    // boundary values belong to Moderate (closed interval)
    if (bone_loss_pct < cutoff_low) return Severity::Low;
    if (bone_loss_pct > cutoff_high) return Severity::High;
    return Severity::Moderate;
}

// --- fit_plane -----------------------------------------------------------

EnFacePlane fit_plane(const PointSet3& rim) {
    if (rim.size() < 3) throw std::invalid_argument("need at least 3 rim points");

    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& p : rim.points) centroid += p;
    centroid /= static_cast<double>(rim.size());

    Eigen::MatrixXd centered(rim.size(), 3);
    for (std::size_t i = 0; i < rim.size(); ++i)
        centered.row(i) = (rim.points[i] - centroid).transpose();

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    const Eigen::Vector3d sv = svd.singularValues();
    const double scale = std::max(sv(0), 1.0);
    if (sv(1) <= 1e-9 * scale) throw std::invalid_argument("rim points collinear");

    Eigen::Vector3d normal = svd.matrixV().col(2); // least-variance direction
    if (normal.z() < 0 ||
        (normal.z() == 0 && (normal.y() < 0 || (normal.y() == 0 && normal.x() < 0))))
        normal = -normal;

    EnFacePlane plane;
    plane.origin = centroid;
    plane.normal = normal;
    const Eigen::Vector3d seed =
        std::abs(normal.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
    plane.basis_u = (seed - seed.dot(normal) * normal).normalized();
    plane.basis_v = normal.cross(plane.basis_u); // u x v == normal
    return plane;
}

// --- projection ----------------------------------------------------------

std::vector<Eigen::Vector2d> project(const PointSet3& points, const EnFacePlane& plane) {
    std::vector<Eigen::Vector2d> out;
    out.reserve(points.size());
    for (const auto& p : points.points) {
        const Eigen::Vector3d d = p - plane.origin;
        out.emplace_back(d.dot(plane.basis_u), d.dot(plane.basis_v));
    }
    return out;
}

namespace {

void morph_3x3(Raster2& r, bool dilate) {
    std::vector<std::uint8_t> src = r.data;
    for (int j = 0; j < r.ny; ++j)
        for (int i = 0; i < r.nx; ++i) {
            bool hit = dilate ? false : true;
            for (int dj = -1; dj <= 1 && (dilate ? !hit : hit); ++dj)
                for (int di = -1; di <= 1; ++di) {
                    const int x = i + di, y = j + dj;
                    const bool v = r.in_bounds(x, y) && src[r.index(x, y)];
                    if (dilate && v) { hit = true; break; }
                    if (!dilate && !v) { hit = false; break; }
                }
            r.data[r.index(i, j)] = hit ? 1 : 0;
        }
}

} // namespace

Raster2 project_mask(const VoxelMask& mask, const EnFacePlane& plane, double cell_factor) {
    const auto fg = mask.foreground_points();
    if (fg.empty()) throw std::invalid_argument("empty projection");
    const auto pts = project(fg, plane);

    Raster2 r;
    r.cell_mm = cell_factor * mask.min_spacing();
    double lo_u = pts[0].x(), hi_u = pts[0].x(), lo_v = pts[0].y(), hi_v = pts[0].y();
    for (const auto& p : pts) {
        lo_u = std::min(lo_u, p.x());
        hi_u = std::max(hi_u, p.x());
        lo_v = std::min(lo_v, p.y());
        hi_v = std::max(hi_v, p.y());
    }
    // each voxel center is stamped with a half-voxel footprint so the raster
    // silhouette follows the physical surface rather than the center lattice
    const double stamp_mm = 0.5 * mask.min_spacing();
    const int stamp_cells = static_cast<int>(std::ceil(stamp_mm / r.cell_mm));
    const int margin = 3 + stamp_cells; // room for stamp + closing element
    r.origin_u = lo_u - margin * r.cell_mm;
    r.origin_v = lo_v - margin * r.cell_mm;
    r.nx = static_cast<int>(std::ceil((hi_u - r.origin_u) / r.cell_mm)) + margin + 1;
    r.ny = static_cast<int>(std::ceil((hi_v - r.origin_v) / r.cell_mm)) + margin + 1;
    r.data.assign(static_cast<std::size_t>(r.nx) * r.ny, 0);

    for (const auto& p : pts) {
        const int i = static_cast<int>(std::lround((p.x() - r.origin_u) / r.cell_mm));
        const int j = static_cast<int>(std::lround((p.y() - r.origin_v) / r.cell_mm));
        for (int dj = -stamp_cells; dj <= stamp_cells; ++dj)
            for (int di = -stamp_cells; di <= stamp_cells; ++di) {
                if (!r.in_bounds(i + di, j + dj)) continue;
                const Eigen::Vector2d cc = r.cell_center_mm(i + di, j + dj);
                if ((cc - p).norm() <= stamp_mm) r.data[r.index(i + di, j + dj)] = 1;
            }
    }
    morph_3x3(r, true);  // close: seal aliasing gaps between projected centers
    morph_3x3(r, false);
    return r;
}

double glenoid_height(const Raster2& projected_mask) {
    std::vector<Eigen::Vector2d> cells;
    for (int j = 0; j < projected_mask.ny; ++j)
        for (int i = 0; i < projected_mask.nx; ++i)
            if (projected_mask.foreground(i, j))
                cells.push_back(projected_mask.cell_center_mm(i, j));
    if (cells.empty()) throw std::invalid_argument("empty projection");

    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& c : cells) mean += c;
    mean /= static_cast<double>(cells.size());
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& c : cells) {
        const Eigen::Vector2d d = c - mean;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    const Eigen::Vector2d axis = eig.eigenvectors().col(1); // max variance

    double lo = std::numeric_limits<double>::max(), hi = std::numeric_limits<double>::lowest();
    for (const auto& c : cells) {
        const double t = axis.dot(c);
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    }
    return hi - lo; // extremes already sit on the stamped silhouette boundary
}

// --- circle fitting ------------------------------------------------------

double circle_objective(const std::vector<Eigen::Vector2d>& pts, const Eigen::Vector2d& c,
                        double r) {
    double sum = 0.0;
    for (const auto& p : pts) {
        const double d = (p - c).norm() - r;
        sum += d * d;
    }
    return sum;
}

namespace {

// Quasi-Newton (inverse-Hessian BFGS update) with backtracking line search.
Eigen::VectorXd minimize_bfgs(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
    Eigen::VectorXd x, int max_iter = 200, double grad_tol = 1e-8) {
    const auto n = x.size();
    Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
    double fx = f(x);
    Eigen::VectorXd g = grad(x);
    for (int iter = 0; iter < max_iter; ++iter) {
        if (g.norm() < grad_tol) return x;
        Eigen::VectorXd dir = -h_inv * g;
        if (dir.dot(g) >= 0) { // safeguard against a spoiled approximation
            h_inv.setIdentity();
            dir = -g;
        }
        double step = 1.0;
        const double slope = g.dot(dir);
        double f_new = fx;
        Eigen::VectorXd x_new = x;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = x + step * dir;
            f_new = f(x_new);
            if (f_new <= fx + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        if (!(f_new < fx)) return x_new; // no strict decrease: at rounding floor
        const Eigen::VectorXd g_new = grad(x_new);
        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-14) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd iden = Eigen::MatrixXd::Identity(n, n);
            h_inv = (iden - rho * s * y.transpose()) * h_inv *
                        (iden - rho * y * s.transpose()) +
                    rho * s * s.transpose();
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }
    if (g.norm() >= grad_tol) throw std::runtime_error("optimizer failed");
    return x;
}

void check_not_collinear(const std::vector<Eigen::Vector2d>& pts) {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& p : pts) mean += p;
    mean /= static_cast<double>(pts.size());
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    double scale = 0.0;
    for (const auto& p : pts) {
        const Eigen::Vector2d d = p - mean;
        cov += d * d.transpose();
        scale = std::max(scale, d.squaredNorm());
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    if (eig.eigenvalues()(0) <= 1e-12 * std::max(scale, 1.0))
        throw std::invalid_argument("circle underdetermined");
}

// Gradient of J; points closer than 1e-12 to the center contribute no
// center term for this step.
Eigen::VectorXd circle_grad(const std::vector<Eigen::Vector2d>& pts,
                            const Eigen::Vector2d& c, double r, bool with_radius) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(with_radius ? 3 : 2);
    for (const auto& p : pts) {
        const Eigen::Vector2d diff = c - p;
        const double dist = diff.norm();
        const double resid = dist - r;
        if (dist >= 1e-12) g.head<2>() += 2.0 * resid * diff / dist;
        if (with_radius) g(2) += -2.0 * resid;
    }
    return g;
}

} // namespace

FittedCircle fit_circle_unconstrained(const std::vector<Eigen::Vector2d>& rim2d) {
    if (rim2d.size() < 3) throw std::invalid_argument("need at least 3 points");
    check_not_collinear(rim2d);

    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto& p : rim2d) centroid += p;
    centroid /= static_cast<double>(rim2d.size());
    double mean_dist = 0.0;
    for (const auto& p : rim2d) mean_dist += (p - centroid).norm();
    mean_dist /= static_cast<double>(rim2d.size());

    Eigen::VectorXd x0(3);
    x0 << centroid.x(), centroid.y(), mean_dist;
    const auto x = minimize_bfgs(
        [&](const Eigen::VectorXd& v) {
            return circle_objective(rim2d, v.head<2>(), v(2));
        },
        [&](const Eigen::VectorXd& v) { return circle_grad(rim2d, v.head<2>(), v(2), true); },
        x0);

    FittedCircle c;
    c.center = x.head<2>();
    c.radius = x(2);
    c.constrained = false;
    return c;
}

FittedCircle fit_circle_constrained(const std::vector<Eigen::Vector2d>& rim2d,
                                    double radius_mm) {
    if (rim2d.size() < 2) throw std::invalid_argument("need at least 2 points");
    if (radius_mm <= 0.0) throw std::invalid_argument("radius must be positive");

    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto& p : rim2d) centroid += p;
    centroid /= static_cast<double>(rim2d.size());

    Eigen::VectorXd x0(2);
    x0 << centroid.x(), centroid.y();
    const auto x = minimize_bfgs(
        [&](const Eigen::VectorXd& v) {
            return circle_objective(rim2d, v.head<2>(), radius_mm);
        },
        [&](const Eigen::VectorXd& v) {
            return circle_grad(rim2d, v.head<2>(), radius_mm, false);
        },
        x0);

    FittedCircle c;
    c.center = x.head<2>();
    c.radius = radius_mm;
    c.constrained = true;
    return c;
}

// --- defect_length -------------------------------------------------------

DefectResult defect_length(const Raster2& projected_mask, const FittedCircle& circle,
                           double angular_step_deg) {
    if (angular_step_deg <= 0.0 || angular_step_deg > 1.0)
        throw std::invalid_argument("angular step must be in (0, 1] degrees");

    // circle must overlap foreground
    bool overlaps = false;
    for (int j = 0; j < projected_mask.ny && !overlaps; ++j)
        for (int i = 0; i < projected_mask.nx; ++i)
            if (projected_mask.foreground(i, j) &&
                (projected_mask.cell_center_mm(i, j) - circle.center).norm() <=
                    circle.radius) {
                overlaps = true;
                break;
            }
    if (!overlaps) throw std::invalid_argument("circle placement invalid");

    const double step = projected_mask.cell_mm * 0.5;
    const double corner_u = std::max(std::abs(projected_mask.origin_u - circle.center.x()),
                                     std::abs(projected_mask.origin_u +
                                              (projected_mask.nx - 1) * projected_mask.cell_mm -
                                              circle.center.x()));
    const double corner_v = std::max(std::abs(projected_mask.origin_v - circle.center.y()),
                                     std::abs(projected_mask.origin_v +
                                              (projected_mask.ny - 1) * projected_mask.cell_mm -
                                              circle.center.y()));
    const double t_max = std::hypot(corner_u, corner_v);

    DefectResult best;
    for (double theta = 0.0; theta < 360.0; theta += angular_step_deg) {
        const double cu = std::cos(theta * kDegToRad);
        const double cv = std::sin(theta * kDegToRad);
        // signed coordinate of the outermost foreground boundary along this
        // direction; negative when the defect has eaten past the center
        double d = -t_max;
        bool seen = false;
        for (double t = -t_max; t <= t_max; t += step) {
            if (projected_mask.foreground_at_mm(circle.center.x() + t * cu,
                                                circle.center.y() + t * cv)) {
                d = t;
                seen = true;
            }
        }
        if (!seen) d = 0.0; // nothing anywhere on this line
        const double gap = std::max(0.0, circle.radius - d);
        if (gap > best.B_mm) {
            best.B_mm = gap;
            best.angle_deg = theta;
        }
    }
    best.B_mm = std::min(best.B_mm, 2.0 * circle.radius);
    return best;
}

// --- measure_bone_loss ---------------------------------------------------

namespace {

template <typename F>
auto stage(const char* name, F&& fn) {
    try {
        return fn();
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(name, e.what());
    }
}

} // namespace

MeasurementReport measure_bone_loss(const VoxelMask& mask, const PointSet3& rim,
                                    const MeasureConfig& config) {
    MeasurementReport report;

    const EnFacePlane plane = stage("plane", [&] { return fit_plane(rim); });
    const auto rim2d = project(rim, plane);
    const Raster2 raster = stage("projection", [&] {
        return project_mask(mask, plane, config.raster_cell_factor);
    });
    const double height = stage("height", [&] { return glenoid_height(raster); });

    const FittedCircle circle = stage("circle", [&] {
        if (config.constrained)
            return fit_circle_constrained(rim2d, config.diameter_ratio * height / 2.0);
        return fit_circle_unconstrained(rim2d);
    });

    const DefectResult defect = stage("defect", [&] {
        return defect_length(raster, circle, config.angular_step_deg);
    });

    report.glenoid_height_mm = height;
    report.normal = plane.normal;
    report.circle = circle;
    report.defect_B_mm = defect.B_mm;
    report.defect_angle_deg = defect.angle_deg;
    report.diameter_A_mm = circle.diameter();
    report.bone_loss_pct = 100.0 * defect.B_mm / circle.diameter();
    report.severity =
        classify_severity(report.bone_loss_pct, config.cutoff_low_pct, config.cutoff_high_pct);
    return report;
}

// --- tune_diameter_ratio -------------------------------------------------

std::vector<double> default_ratio_grid() {
    std::vector<double> grid;
    for (int i = 0; i < 11; ++i) grid.push_back(0.65 + 0.01 * i);
    return grid;
}

TuneResult tune_diameter_ratio(const std::vector<TuneCase>& cases,
                               const std::vector<double>& grid,
                               const MeasureConfig& config) {
    if (cases.empty()) throw std::invalid_argument("need at least one case");
    if (grid.empty()) throw std::invalid_argument("ratio grid is empty");

    TuneResult result;
    double best_mae = std::numeric_limits<double>::max();
    for (double ratio : grid) {
        MeasureConfig c = config;
        c.diameter_ratio = ratio;
        c.constrained = true;
        double mae = 0.0;
        for (const auto& tc : cases) {
            const auto report = measure_bone_loss(*tc.mask, *tc.rim, c);
            mae += std::abs(report.bone_loss_pct - tc.truth_pct);
        }
        mae /= static_cast<double>(cases.size());
        result.mae_curve.emplace_back(ratio, mae);
        if (mae < best_mae || (mae == best_mae && ratio < result.best_ratio)) {
            best_mae = mae; // ties resolve to the smaller ratio
            result.best_ratio = ratio;
        }
    }
    return result;
}

} // namespace glenoid
