#include "glenoid/volume.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace glenoid {

using json = nlohmann::ordered_json;

VoxelMask VoxelMask::zeros(std::array<int, 3> dims, std::array<double, 3> spacing,
                           bool binary, std::string frame) {
    for (int d : dims)
        if (d <= 0) throw std::invalid_argument("mask dims must be positive");
    for (double s : spacing)
        if (s <= 0.0) throw std::invalid_argument("mask spacing must be positive");
    VoxelMask m;
    m.dims = dims;
    m.spacing_mm = spacing;
    m.binary = binary;
    m.frame = std::move(frame);
    m.data.assign(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 0.0f);
    return m;
}

std::size_t VoxelMask::foreground_count() const {
    std::size_t n = 0;
    for (float v : data)
        if (v > 0.5f) ++n;
    return n;
}

PointSet3 VoxelMask::foreground_points() const {
    PointSet3 out;
    out.ordered = false;
    for (int k = 0; k < dims[2]; ++k)
        for (int j = 0; j < dims[1]; ++j)
            for (int i = 0; i < dims[0]; ++i)
                if (foreground(i, j, k)) out.points.push_back(voxel_center_mm(i, j, k));
    return out;
}

bool VoxelMask::operator==(const VoxelMask& other) const {
    return dims == other.dims && spacing_mm == other.spacing_mm && binary == other.binary &&
           frame == other.frame && data == other.data;
}

RigidTransform RigidTransform::inverse() const {
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(rotation.transpose() * translation);
    return inv;
}

RigidTransform RigidTransform::compose(const RigidTransform& inner) const {
    RigidTransform out;
    out.rotation = rotation * inner.rotation;
    out.translation = rotation * inner.translation + translation;
    return out;
}

// --- I/O -----------------------------------------------------------------

namespace {

std::string base_path(const std::string& path) {
    if (path.size() > 5 && path.substr(path.size() - 5) == ".json")
        return path.substr(0, path.size() - 5);
    if (path.size() > 4 && path.substr(path.size() - 4) == ".raw")
        return path.substr(0, path.size() - 4);
    return path;
}

} // namespace

VoxelMask read_mask(const std::string& path) {
    const std::string base = base_path(path);
    std::ifstream hdr(base + ".json");
    if (!hdr) throw std::runtime_error("cannot open mask header: " + base + ".json");
    json j;
    try {
        hdr >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed mask header: " + std::string(e.what()));
    }
    if (!j.contains("dims") || !j.contains("spacing_mm") || !j.contains("dtype"))
        throw std::runtime_error("malformed mask header: missing required field");

    VoxelMask m;
    auto dims = j.at("dims");
    auto spc = j.at("spacing_mm");
    if (dims.size() != 3 || spc.size() != 3)
        throw std::runtime_error("malformed mask header: dims/spacing must have 3 entries");
    for (int a = 0; a < 3; ++a) {
        m.dims[a] = dims[a].get<int>();
        m.spacing_mm[a] = spc[a].get<double>();
        if (m.dims[a] <= 0) throw std::runtime_error("malformed mask header: non-positive dim");
        if (m.spacing_mm[a] <= 0.0)
            throw std::runtime_error("malformed mask header: non-positive spacing");
    }
    const std::string dtype = j.at("dtype").get<std::string>();
    if (dtype == "u8")
        m.binary = true;
    else if (dtype == "f32le")
        m.binary = false;
    else
        throw std::runtime_error("malformed mask header: unknown dtype " + dtype);
    m.frame = j.value("frame", "native");
    if (j.value("order", "x-fastest") != "x-fastest")
        throw std::runtime_error("malformed mask header: unsupported voxel order");

    std::ifstream raw(base + ".raw", std::ios::binary);
    if (!raw) throw std::runtime_error("cannot open mask payload: " + base + ".raw");
    raw.seekg(0, std::ios::end);
    const std::size_t bytes = static_cast<std::size_t>(raw.tellg());
    raw.seekg(0);

    const std::size_t n = m.voxel_count();
    const std::size_t expected = n * (m.binary ? 1 : 4);
    if (bytes != expected) throw std::runtime_error("payload size mismatch");

    m.data.resize(n);
    if (m.binary) {
        std::vector<std::uint8_t> buf(n);
        raw.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
        for (std::size_t i = 0; i < n; ++i) {
            if (buf[i] > 1) throw std::runtime_error("non-binary value in binary mask");
            m.data[i] = static_cast<float>(buf[i]);
        }
    } else {
        raw.read(reinterpret_cast<char*>(m.data.data()), static_cast<std::streamsize>(4 * n));
    }
    return m;
}

void write_mask(const VoxelMask& mask, const std::string& path) {
    const std::string base = base_path(path);
    json j;
    j["dims"] = mask.dims;
    j["spacing_mm"] = mask.spacing_mm;
    j["dtype"] = mask.binary ? "u8" : "f32le";
    j["frame"] = mask.frame;
    j["order"] = "x-fastest";

    // write-temp-then-rename so partially written files are never observed
    const std::string hdr_tmp = base + ".json.tmp";
    {
        std::ofstream out(hdr_tmp);
        if (!out) throw std::runtime_error("cannot write mask header: " + base + ".json");
        out << j.dump(2) << "\n";
    }
    const std::string raw_tmp = base + ".raw.tmp";
    {
        std::ofstream out(raw_tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write mask payload: " + base + ".raw");
        if (mask.binary) {
            std::vector<std::uint8_t> buf(mask.data.size());
            for (std::size_t i = 0; i < mask.data.size(); ++i) {
                const float v = mask.data[i];
                if (v != 0.0f && v != 1.0f)
                    throw std::runtime_error("non-binary value in binary mask");
                buf[i] = static_cast<std::uint8_t>(v);
            }
            out.write(reinterpret_cast<const char*>(buf.data()),
                      static_cast<std::streamsize>(buf.size()));
        } else {
            out.write(reinterpret_cast<const char*>(mask.data.data()),
                      static_cast<std::streamsize>(4 * mask.data.size()));
        }
    }
    std::rename(hdr_tmp.c_str(), (base + ".json").c_str());
    std::rename(raw_tmp.c_str(), (base + ".raw").c_str());
}

PointSet3 read_point_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open point set: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed point set: " + std::string(e.what()));
    }
    PointSet3 ps;
    ps.ordered = j.value("ordered", false);
    for (const auto& row : j.at("points_mm")) {
        if (row.size() != 3) throw std::runtime_error("malformed point set: non-3D point");
        ps.points.emplace_back(row[0].get<double>(), row[1].get<double>(), row[2].get<double>());
    }
    return ps;
}

void write_point_set(const PointSet3& points, const std::string& path) {
    json j;
    j["ordered"] = points.ordered;
    json rows = json::array();
    for (const auto& p : points.points) rows.push_back({p.x(), p.y(), p.z()});
    j["points_mm"] = std::move(rows);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot write point set: " + path);
        out << j.dump(2) << "\n";
    }
    std::rename(tmp.c_str(), path.c_str());
}

// --- Operations ----------------------------------------------------------

VoxelMask flip_sagittal(const VoxelMask& mask) {
    if (!mask.binary) throw std::invalid_argument("flip_sagittal expects a binary mask");
    VoxelMask out = mask;
    const int nx = mask.dims[0];
    for (int k = 0; k < mask.dims[2]; ++k)
        for (int j = 0; j < mask.dims[1]; ++j)
            for (int i = 0; i < nx; ++i)
                out.at(nx - 1 - i, j, k) = mask.at(i, j, k);
    return out;
}

PointSet3 flip_sagittal_points(const PointSet3& points, const VoxelMask& grid) {
    const double w = (grid.dims[0] - 1) * grid.spacing_mm[0];
    PointSet3 out = points;
    for (auto& p : out.points) p.x() = w - p.x();
    return out;
}

std::pair<VoxelMask, RigidTransform> pca_reorient(const VoxelMask& mask) {
    const PointSet3 fg = mask.foreground_points();
    if (fg.size() < 4) throw std::invalid_argument("degenerate principal axes");

    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& p : fg.points) centroid += p;
    centroid /= static_cast<double>(fg.size());

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : fg.points) {
        const Eigen::Vector3d d = p - centroid;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(fg.size());

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    if (eig.eigenvalues()(0) <= 1e-9) throw std::invalid_argument("degenerate principal axes");

    // Eigenvalues ascending: max variance -> new x, mid -> new y, min -> new z.
    Eigen::Vector3d ax = eig.eigenvectors().col(2);
    Eigen::Vector3d ay = eig.eigenvectors().col(1);
    if (ax.x() < 0 || (ax.x() == 0 && (ax.y() < 0 || (ax.y() == 0 && ax.z() < 0)))) ax = -ax;
    if (ay.y() < 0 || (ay.y() == 0 && (ay.x() < 0 || (ay.x() == 0 && ay.z() < 0)))) ay = -ay;
    const Eigen::Vector3d az = ax.cross(ay); // right-handed, det +1

    Eigen::Matrix3d axes; // rows: reoriented = axes * (native - centroid)
    axes.row(0) = ax.transpose();
    axes.row(1) = ay.transpose();
    axes.row(2) = az.transpose();

    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::max());
    Eigen::Vector3d hi = Eigen::Vector3d::Constant(std::numeric_limits<double>::lowest());
    for (const auto& p : fg.points) {
        const Eigen::Vector3d q = axes * (p - centroid);
        lo = lo.cwiseMin(q);
        hi = hi.cwiseMax(q);
    }

    const std::array<double, 3> sp = mask.spacing_mm;
    const Eigen::Vector3d margin(2 * sp[0], 2 * sp[1], 2 * sp[2]);
    const Eigen::Vector3d offset = lo - margin; // reoriented mm of output voxel (0,0,0)

    std::array<int, 3> dims;
    for (int a = 0; a < 3; ++a)
        dims[a] = static_cast<int>(std::ceil((hi(a) - lo(a) + 2 * margin(a)) / sp[a])) + 1;

    VoxelMask out = VoxelMask::zeros(dims, sp, true, "reoriented");

    RigidTransform to_native; // reoriented mm -> native mm
    to_native.rotation = axes.transpose();
    to_native.translation = axes.transpose() * offset + centroid;

    for (int k = 0; k < dims[2]; ++k)
        for (int j = 0; j < dims[1]; ++j)
            for (int i = 0; i < dims[0]; ++i) {
                const Eigen::Vector3d native =
                    to_native.apply({i * sp[0], j * sp[1], k * sp[2]});
                const int si = static_cast<int>(std::lround(native.x() / sp[0]));
                const int sj = static_cast<int>(std::lround(native.y() / sp[1]));
                const int sk = static_cast<int>(std::lround(native.z() / sp[2]));
                if (mask.in_bounds(si, sj, sk) && mask.foreground(si, sj, sk))
                    out.at(i, j, k) = 1.0f;
            }
    return {std::move(out), to_native};
}

VoxelMask crop_pad(const VoxelMask& mask, std::array<int, 3> target_dims) {
    for (int d : target_dims)
        if (d <= 0) throw std::invalid_argument("target dims must be positive");

    std::array<int, 3> lo{0, 0, 0}, hi{-1, -1, -1};
    std::array<double, 3> centroid{0, 0, 0};
    std::size_t count = 0;
    for (int k = 0; k < mask.dims[2]; ++k)
        for (int j = 0; j < mask.dims[1]; ++j)
            for (int i = 0; i < mask.dims[0]; ++i)
                if (mask.foreground(i, j, k)) {
                    const int idx[3] = {i, j, k};
                    for (int a = 0; a < 3; ++a) {
                        if (count == 0 || idx[a] < lo[a]) lo[a] = idx[a];
                        if (count == 0 || idx[a] > hi[a]) hi[a] = idx[a];
                        centroid[a] += idx[a];
                    }
                    ++count;
                }

    std::array<int, 3> start;
    for (int a = 0; a < 3; ++a) {
        if (count == 0) {
            start[a] = (mask.dims[a] - target_dims[a]) / 2;
            continue;
        }
        if (hi[a] - lo[a] + 1 > target_dims[a])
            throw std::invalid_argument("foreground exceeds target window");
        const double c = centroid[a] / static_cast<double>(count);
        int s = static_cast<int>(std::lround(c - (target_dims[a] - 1) / 2.0));
        s = std::min(s, lo[a]);                          // never crop foreground
        s = std::max(s, hi[a] + 1 - target_dims[a]);
        start[a] = s;
    }

    VoxelMask out = VoxelMask::zeros(target_dims, mask.spacing_mm, mask.binary, mask.frame);
    for (int k = 0; k < target_dims[2]; ++k)
        for (int j = 0; j < target_dims[1]; ++j)
            for (int i = 0; i < target_dims[0]; ++i) {
                const int si = i + start[0], sj = j + start[1], sk = k + start[2];
                if (mask.in_bounds(si, sj, sk)) out.at(i, j, k) = mask.at(si, sj, sk);
            }
    return out;
}

PointSet3 apply_transform(const PointSet3& points, const RigidTransform& t) {
    PointSet3 out = points;
    for (auto& p : out.points) p = t.apply(p);
    return out;
}

} // namespace glenoid
