#include "camgen/camera.hpp"
#include "camgen/random.hpp"

#include <gtest/gtest.h>

#include <Eigen/Geometry>
#include <cmath>
#include <numbers>

using namespace camgen;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Matrix3d rot_y(double deg) { return Eigen::AngleAxisd(deg * kPi / 180.0, Eigen::Vector3d::UnitY()).toRotationMatrix(); }

CameraPose random_pose(Rng& rng) {
    Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    q.normalize();
    return CameraPose::from_quaternion(q, Eigen::Vector3d(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)));
}

Intrinsics k64() { return Intrinsics{64, 64, 32, 32, 64, 64}; }

} // namespace

TEST(Interpolation, MidpointTranslation) {
    CameraPose end;
    end.translation = Eigen::Vector3d(0, 0, 2);
    const Trajectory tr = interpolate_trajectory(CameraPose::identity(), end, 5);
    ASSERT_EQ(tr.size(), 5u);
    EXPECT_NEAR((tr[2].translation - Eigen::Vector3d(0, 0, 1)).norm(), 0.0, 1e-15);
    EXPECT_NEAR((tr[2].rotation - Eigen::Matrix3d::Identity()).norm(), 0.0, 1e-15);
}

TEST(Interpolation, IdenticalEndpoints) {
    const Trajectory tr = interpolate_trajectory(CameraPose::identity(), CameraPose::identity(), 3);
    for (const auto& p : tr.poses) EXPECT_EQ(p, CameraPose::identity());
}

TEST(Interpolation, QuarterTurnMidpointIsEighthTurn) {
    const CameraPose end = CameraPose::from_rotation(rot_y(90), Eigen::Vector3d::Zero());
    const Trajectory tr = interpolate_trajectory(CameraPose::identity(), end, 3);
    // Closed form slerp: half the angle about the same axis.
    EXPECT_LT((tr[1].rotation - rot_y(45)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(rotation_angle(tr[1].rotation), kPi / 4, 1e-12);
}

TEST(Interpolation, EndpointsAreExact) {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const CameraPose a = random_pose(rng), b = random_pose(rng);
        const Trajectory tr = interpolate_trajectory(a, b, 2 + trial % 7);
        EXPECT_EQ(tr.front(), a);
        EXPECT_EQ(tr.back(), b);
    }
}

TEST(Interpolation, ConstantAngularVelocity) {
    Rng rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        const Trajectory tr = interpolate_trajectory(random_pose(rng), random_pose(rng), 9);
        for (int i = 0; i < 9; ++i)
            for (int j = i + 1; j < 9; ++j)
                for (int k = j + 1; k < 9; ++k) {
                    const double ij = rotation_angle(tr[j].rotation * tr[i].rotation.transpose());
                    const double jk = rotation_angle(tr[k].rotation * tr[j].rotation.transpose());
                    const double ik = rotation_angle(tr[k].rotation * tr[i].rotation.transpose());
                    EXPECT_NEAR(ik, ij + jk, 1e-5);
                }
    }
}

TEST(Interpolation, AntipodalEndsStayDeterministic) {
    const CameraPose end = CameraPose::from_rotation(rot_y(180), Eigen::Vector3d::Zero());
    const Trajectory a = interpolate_trajectory(CameraPose::identity(), end, 5);
    const Trajectory b = interpolate_trajectory(CameraPose::identity(), end, 5);
    for (int i = 0; i < 5; ++i) {
        EXPECT_EQ(a[i], b[i]);
        EXPECT_LT(orthonormality_error(a[i].rotation), 1e-12);
    }
    EXPECT_NEAR(rotation_angle(a[2].rotation), kPi / 2, 1e-9);
}

TEST(Interpolation, RejectsShortTrajectories) {
    EXPECT_THROW(interpolate_trajectory(CameraPose::identity(), CameraPose::identity(), 1), std::invalid_argument);
    EXPECT_THROW(interpolate_trajectory(CameraPose::identity(), CameraPose::identity(), 0), std::invalid_argument);
}

TEST(Pose, ComposeWithInverseIsIdentity) {
    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const CameraPose p = random_pose(rng);
        const CameraPose id = compose(p, p.inverse());
        EXPECT_LT((id.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-6);
        EXPECT_LT(id.translation.cwiseAbs().maxCoeff(), 1e-6);
        EXPECT_NEAR(p.rotation.determinant(), 1.0, 1e-6);
    }
}

TEST(Pose, LongCompositionChainsStayOrthonormal) {
    Rng rng(14);
    CameraPose acc;
    for (int i = 0; i < 100; ++i) {
        acc = compose(random_pose(rng), acc);
        EXPECT_LT(orthonormality_error(acc.rotation), 1e-6);
    }
}

TEST(Pose, FromRotationProjectsOntoSO3) {
    Eigen::Matrix3d noisy = rot_y(30);
    noisy(0, 1) += 1e-3;
    const CameraPose p = CameraPose::from_rotation(noisy, Eigen::Vector3d::Zero());
    EXPECT_LT(orthonormality_error(p.rotation), 1e-12);
    EXPECT_NEAR(p.rotation.determinant(), 1.0, 1e-12);
}

TEST(Pose, LookAtPlacesTargetOnOpticalAxis) {
    const CameraPose p = CameraPose::look_at(Eigen::Vector3d(1, -2, -5), Eigen::Vector3d(0, 0, 0));
    const Eigen::Vector3d c = p.to_camera(Eigen::Vector3d::Zero());
    EXPECT_NEAR(c.x(), 0.0, 1e-12);
    EXPECT_NEAR(c.y(), 0.0, 1e-12);
    EXPECT_GT(c.z(), 0.0);
    EXPECT_LT((p.center() - Eigen::Vector3d(1, -2, -5)).norm(), 1e-12);
}

TEST(Intrinsics, Validation) {
    EXPECT_NO_THROW(k64().validate());
    EXPECT_THROW((Intrinsics{0, 64, 32, 32, 64, 64}.validate()), std::invalid_argument);
    EXPECT_THROW((Intrinsics{64, 64, 64, 32, 64, 64}.validate()), std::invalid_argument);
    EXPECT_THROW((Intrinsics{64, 64, 32, -1, 64, 64}.validate()), std::invalid_argument);
}

TEST(Projection, OpticalAxisHitsPrincipalPoint) {
    const Projection p = project(Eigen::Vector3d(0, 0, 1), CameraPose::identity(), k64());
    EXPECT_DOUBLE_EQ(p.u, 32.0);
    EXPECT_DOUBLE_EQ(p.v, 32.0);
    EXPECT_DOUBLE_EQ(p.depth, 1.0);
    EXPECT_TRUE(p.visible);
}

TEST(Projection, BehindCameraIsInvisible) {
    EXPECT_FALSE(project(Eigen::Vector3d(0, 0, -1), CameraPose::identity(), k64()).visible);
    EXPECT_FALSE(project(Eigen::Vector3d(0, 0, 0.5 * kZNear), CameraPose::identity(), k64()).visible);
}

TEST(Projection, RightEdgeIsExclusive) {
    const Projection p = project(Eigen::Vector3d(0.5, 0, 1), CameraPose::identity(), k64());
    EXPECT_DOUBLE_EQ(p.u, 64.0);
    EXPECT_FALSE(p.visible);
    EXPECT_TRUE(project(Eigen::Vector3d(-0.5, -0.5, 1), CameraPose::identity(), k64()).visible);
}

TEST(Unproject, UniformDepthGivesFrontoparallelPlane) {
    DepthMap d(8, 8, 1.0f);
    const Intrinsics k{8, 8, 4, 4, 8, 8};
    const PointCloud pc = unproject(d, CameraPose::identity(), k, Image(8, 8, 0.5f));
    ASSERT_EQ(pc.size(), 64u);
    for (const auto& p : pc.positions) EXPECT_DOUBLE_EQ(p.z(), 1.0);
}

TEST(Unproject, PrincipalPointPixel) {
    // Pixel (x, y) has its center at (x + 0.5, y + 0.5); put the principal point there.
    const Intrinsics k{10, 10, 3.5, 2.5, 8, 8};
    DepthMap d(8, 8);
    d.at(2, 3) = 2.0f;
    const PointCloud pc = unproject(d, CameraPose::identity(), k, Image(8, 8));
    ASSERT_EQ(pc.size(), 1u);
    EXPECT_LT((pc.positions[0] - Eigen::Vector3d(0, 0, 2)).norm(), 1e-15);
}

TEST(Unproject, RoundTripThroughProject) {
    Rng rng(15);
    const Intrinsics k{9, 7, 4, 3.5, 8, 8};
    for (int trial = 0; trial < 20; ++trial) {
        const CameraPose pose = random_pose(rng);
        DepthMap d(8, 8);
        for (auto& z : d.depth) z = static_cast<float>(rng.uniform(0.5, 6.0));
        d.at(0, 0) = -1.0f;  // sentinel pixel is skipped
        const PointCloud pc = unproject(d, pose, k, Image(8, 8));
        ASSERT_EQ(pc.size(), 63u);
        size_t i = 0;
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) {
                if (y == 0 && x == 0) continue;
                const Projection p = project(pc.positions[i++], pose, k);
                EXPECT_NEAR(p.u, x + 0.5, 1e-4);
                EXPECT_NEAR(p.v, y + 0.5, 1e-4);
                EXPECT_NEAR(p.depth, d.at(y, x), 1e-5);
                EXPECT_TRUE(p.visible);
            }
    }
}

TEST(Unproject, ShapeMismatchThrows) {
    const Intrinsics k{8, 8, 4, 4, 8, 8};
    EXPECT_THROW(unproject(DepthMap(4, 8), CameraPose::identity(), k, Image(4, 8)), std::invalid_argument);
    EXPECT_THROW(unproject(DepthMap(8, 8), CameraPose::identity(), k, Image(8, 4)), std::invalid_argument);
}
