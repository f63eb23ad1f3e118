#pragma once

#include "camgen/image.hpp"
#include "camgen/pointcloud.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <span>
#include <vector>

namespace camgen {

/// Points closer than this (camera-frame z) are never visible.
inline constexpr double kZNear = 1e-4;

/// Rigid world->camera transform: x_cam = rotation * x_world + translation.
/// Camera frame is right-handed with +x right, +y down, +z forward.
struct CameraPose {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    static CameraPose identity() { return {}; }
    /// Projects `rotation` onto SO(3) before storing it.
    static CameraPose from_rotation(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);
    static CameraPose from_quaternion(const Eigen::Quaterniond& q, const Eigen::Vector3d& translation);
    /// Camera at `eye` looking toward `target`; `up` is a world direction (commonly -y).
    static CameraPose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                              const Eigen::Vector3d& up = Eigen::Vector3d(0, -1, 0));

    Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const { return rotation * world + translation; }
    Eigen::Vector3d to_world(const Eigen::Vector3d& cam) const { return rotation.transpose() * (cam - translation); }
    /// Camera center in world coordinates.
    Eigen::Vector3d center() const { return -(rotation.transpose() * translation); }
    CameraPose inverse() const;
    Eigen::Quaterniond quaternion() const;

    bool operator==(const CameraPose& o) const { return rotation == o.rotation && translation == o.translation; }
};

/// (a ∘ b)(x) = a(b(x)).
CameraPose compose(const CameraPose& a, const CameraPose& b);

/// Geodesic angle of a rotation matrix, radians in [0, pi].
double rotation_angle(const Eigen::Matrix3d& r);
/// max |R^T R - I|.
double orthonormality_error(const Eigen::Matrix3d& r);

struct Intrinsics {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;

    /// Throws std::invalid_argument if the invariants do not hold.
    void validate() const;
    /// Centered principal point with fx = fy = width.
    static Intrinsics centered(int width, int height);

    bool operator==(const Intrinsics&) const = default;
};

struct Trajectory {
    std::vector<CameraPose> poses;

    size_t size() const { return poses.size(); }
    const CameraPose& operator[](size_t i) const { return poses[i]; }
    const CameraPose& front() const { return poses.front(); }
    const CameraPose& back() const { return poses.back(); }
};

/// Uniformly spaced poses: linear translation, shortest-arc quaternion slerp.
/// Endpoints are copied verbatim.
Trajectory interpolate_trajectory(const CameraPose& start, const CameraPose& end, int n);

struct Projection {
    double u = 0, v = 0;
    double depth = 0;
    bool visible = false;
};

/// Pixel (x, y) covers [x, x+1) x [y, y+1); its center is at (x+0.5, y+0.5).
Projection project(const Eigen::Vector3d& point, const CameraPose& pose, const Intrinsics& k);
std::vector<Projection> project(std::span<const Eigen::Vector3d> points, const CameraPose& pose,
                                const Intrinsics& k);

/// One world point per pixel with positive depth, taken at the pixel center.
PointCloud unproject(const DepthMap& depth, const CameraPose& pose, const Intrinsics& k, const Image& colors);

} // namespace camgen
