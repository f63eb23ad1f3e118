#include "camgen/camera.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>
#include <string>

namespace camgen {

namespace {

Eigen::Quaterniond canonical(Eigen::Quaterniond q) {
    q.normalize();
    if (q.w() < 0) q.coeffs() = -q.coeffs();
    return q;
}

Eigen::Quaterniond slerp(const Eigen::Quaterniond& q0, Eigen::Quaterniond q1, double s) {
    double d = q0.dot(q1);
    // Exact antipodes (d == 0 after canonicalization) keep q1 as given.
    if (d < 0) {
        q1.coeffs() = -q1.coeffs();
        d = -d;
    }
    if (d > 1.0 - 1e-12) {
        Eigen::Quaterniond q;
        q.coeffs() = (1.0 - s) * q0.coeffs() + s * q1.coeffs();
        return q.normalized();
    }
    const double theta = std::acos(std::min(d, 1.0));
    const double sin_theta = std::sin(theta);
    const double a = std::sin((1.0 - s) * theta) / sin_theta;
    const double b = std::sin(s * theta) / sin_theta;
    Eigen::Quaterniond q;
    q.coeffs() = a * q0.coeffs() + b * q1.coeffs();
    return q.normalized();
}

} // namespace

CameraPose CameraPose::from_rotation(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d u = svd.matrixU();
    const Eigen::Matrix3d v = svd.matrixV();
    if ((u * v.transpose()).determinant() < 0) u.col(2) = -u.col(2);
    CameraPose pose;
    pose.rotation = u * v.transpose();
    pose.translation = translation;
    return pose;
}

CameraPose CameraPose::from_quaternion(const Eigen::Quaterniond& q, const Eigen::Vector3d& translation) {
    CameraPose pose;
    pose.rotation = q.normalized().toRotationMatrix();
    pose.translation = translation;
    return pose;
}

CameraPose CameraPose::look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up) {
    const Eigen::Vector3d forward = (target - eye).normalized();
    const Eigen::Vector3d down = -up;
    Eigen::Vector3d right = down.cross(forward);
    if (right.norm() < 1e-12) throw std::invalid_argument("look_at: up is parallel to the view direction");
    right.normalize();
    const Eigen::Vector3d cam_down = forward.cross(right);
    Eigen::Matrix3d r;
    r.row(0) = right.transpose();
    r.row(1) = cam_down.transpose();
    r.row(2) = forward.transpose();
    CameraPose pose;
    pose.rotation = r;
    pose.translation = -(r * eye);
    return pose;
}

CameraPose CameraPose::inverse() const {
    CameraPose inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(rotation.transpose() * translation);
    return inv;
}

Eigen::Quaterniond CameraPose::quaternion() const { return canonical(Eigen::Quaterniond(rotation)); }

CameraPose compose(const CameraPose& a, const CameraPose& b) {
    CameraPose out;
    out.rotation = a.rotation * b.rotation;
    out.translation = a.rotation * b.translation + a.translation;
    return out;
}

double rotation_angle(const Eigen::Matrix3d& r) {
    // atan2 form stays accurate near 0 and pi, unlike acos of the trace.
    const Eigen::Vector3d axis_sin(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
    const double s = 0.5 * axis_sin.norm();
    const double c = 0.5 * (r.trace() - 1.0);
    return std::atan2(s, c);
}

double orthonormality_error(const Eigen::Matrix3d& r) {
    return (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

void Intrinsics::validate() const {
    if (!(fx > 0) || !(fy > 0)) throw std::invalid_argument("intrinsics: focal lengths must be positive");
    if (width <= 0 || height <= 0) throw std::invalid_argument("intrinsics: image size must be positive");
    if (!(cx >= 0 && cx < width) || !(cy >= 0 && cy < height))
        throw std::invalid_argument("intrinsics: principal point outside the image");
}

Intrinsics Intrinsics::centered(int width, int height) {
    Intrinsics k;
    k.width = width;
    k.height = height;
    k.fx = width;
    k.fy = width;
    k.cx = 0.5 * width;
    k.cy = 0.5 * height;
    k.validate();
    return k;
}

Trajectory interpolate_trajectory(const CameraPose& start, const CameraPose& end, int n) {
    if (n < 2) throw std::invalid_argument("interpolate_trajectory: n must be >= 2, got " + std::to_string(n));
    const Eigen::Quaterniond q0 = start.quaternion();
    const Eigen::Quaterniond q1 = end.quaternion();
    Trajectory traj;
    traj.poses.reserve(n);
    traj.poses.push_back(start);
    for (int i = 1; i < n - 1; ++i) {
        const double s = static_cast<double>(i) / (n - 1);
        const Eigen::Vector3d t = (1.0 - s) * start.translation + s * end.translation;
        traj.poses.push_back(CameraPose::from_quaternion(slerp(q0, q1, s), t));
    }
    traj.poses.push_back(end);
    return traj;
}

Projection project(const Eigen::Vector3d& point, const CameraPose& pose, const Intrinsics& k) {
    const Eigen::Vector3d c = pose.to_camera(point);
    Projection p;
    p.depth = c.z();
    if (!(c.z() > kZNear)) return p;
    p.u = k.cx + k.fx * c.x() / c.z();
    p.v = k.cy + k.fy * c.y() / c.z();
    p.visible = p.u >= 0 && p.u < k.width && p.v >= 0 && p.v < k.height;
    return p;
}

std::vector<Projection> project(std::span<const Eigen::Vector3d> points, const CameraPose& pose,
                                const Intrinsics& k) {
    std::vector<Projection> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(project(p, pose, k));
    return out;
}

PointCloud unproject(const DepthMap& depth, const CameraPose& pose, const Intrinsics& k, const Image& colors) {
    if (depth.width != k.width || depth.height != k.height)
        throw std::invalid_argument("unproject: depth map shape does not match intrinsics");
    if (colors.width != k.width || colors.height != k.height)
        throw std::invalid_argument("unproject: color image shape does not match intrinsics");
    PointCloud cloud;
    for (int y = 0; y < depth.height; ++y) {
        for (int x = 0; x < depth.width; ++x) {
            const double d = depth.at(y, x);
            if (!(d > 0)) continue;
            const Eigen::Vector3d cam((x + 0.5 - k.cx) / k.fx * d, (y + 0.5 - k.cy) / k.fy * d, d);
            cloud.push_back(pose.to_world(cam),
                            Eigen::Vector3f(colors.at(y, x, 0), colors.at(y, x, 1), colors.at(y, x, 2)));
        }
    }
    return cloud;
}

} // namespace camgen
