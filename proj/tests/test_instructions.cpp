#include "camgen/instructions.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace camgen;

namespace {

CameraPose start_pose() {
    return CameraPose::look_at(Eigen::Vector3d(0.5, -0.3, -4.0), Eigen::Vector3d(0.2, 0.1, 0.5));
}

} // namespace

TEST(ParseInstructions, Tokens) {
    const auto ins = parse_instructions("dolly+0.5, orbit-20,truck+1,pedestal-0.25");
    ASSERT_EQ(ins.size(), 4u);
    EXPECT_EQ(ins[0], (CameraInstruction{CameraMotion::dolly, 0.5}));
    EXPECT_EQ(ins[1], (CameraInstruction{CameraMotion::orbit, -20.0}));
    EXPECT_EQ(ins[2], (CameraInstruction{CameraMotion::truck, 1.0}));
    EXPECT_EQ(ins[3], (CameraInstruction{CameraMotion::pedestal, -0.25}));
    for (const auto& i : ins) EXPECT_EQ(parse_instructions(format_instruction(i)).front(), i);
}

TEST(ParseInstructions, Malformed) {
    for (const char* bad : {"", "zoom+1", "dolly", "dolly0.5", "dolly+", "dolly+1,", "dolly+abc"})
        EXPECT_THROW(parse_instructions(bad), std::invalid_argument) << bad;
}

TEST(ApplyInstruction, DollyMovesAlongViewAxis) {
    const CameraPose p = start_pose();
    const CameraPose q = apply_instruction(p, {CameraMotion::dolly, 0.5});
    const Eigen::Vector3d forward = p.rotation.row(2).transpose();
    EXPECT_LT((q.center() - (p.center() + 0.5 * forward)).norm(), 1e-12);
    EXPECT_TRUE(q.rotation.isApprox(p.rotation, 1e-15));
}

TEST(ApplyInstruction, TruckAndPedestalAxes) {
    const CameraPose p = start_pose();
    const Eigen::Vector3d right = p.rotation.row(0).transpose(), down = p.rotation.row(1).transpose();
    EXPECT_LT((apply_instruction(p, {CameraMotion::truck, 0.7}).center() - (p.center() + 0.7 * right)).norm(), 1e-12);
    EXPECT_LT((apply_instruction(p, {CameraMotion::pedestal, 0.4}).center() - (p.center() - 0.4 * down)).norm(), 1e-12);
}

TEST(ApplyInstruction, OrbitPreservesDistanceToAxis) {
    const CameraPose p = start_pose();
    const Eigen::Vector3d pivot(0.1, 0.0, 0.8);
    const CameraPose q = apply_instruction(p, {CameraMotion::orbit, 30.0}, pivot);
    auto radial = [&](const Eigen::Vector3d& c) { return Eigen::Vector2d(c.x() - pivot.x(), c.z() - pivot.z()).norm(); };
    EXPECT_NEAR(radial(q.center()), radial(p.center()), 1e-12);
    EXPECT_NEAR(q.center().y(), p.center().y(), 1e-12);
    // The pivot keeps its camera-frame coordinates.
    EXPECT_LT(((q.rotation * pivot + q.translation) - (p.rotation * pivot + p.translation)).norm(), 1e-12);
    EXPECT_TRUE((q.rotation * q.rotation.transpose()).isIdentity(1e-12));
    EXPECT_NEAR(q.rotation.determinant(), 1.0, 1e-12);
}

TEST(ApplyInstruction, InversesCancel) {
    const CameraPose p = start_pose();
    for (const char* pair : {"dolly+0.3,dolly-0.3", "orbit+45,orbit-45", "truck-1,truck+1", "pedestal+2,pedestal-2"}) {
        const CameraPose q = apply_instructions(p, parse_instructions(pair), Eigen::Vector3d(0, 0, 1));
        EXPECT_LT((q.center() - p.center()).norm(), 1e-12) << pair;
        EXPECT_TRUE(q.rotation.isApprox(p.rotation, 1e-12)) << pair;
    }
}

TEST(ApplyInstruction, FullOrbitReturnsHome) {
    const CameraPose p = start_pose();
    const CameraPose q = apply_instructions(p, parse_instructions("orbit+90,orbit+90,orbit+90,orbit+90"));
    EXPECT_LT((q.center() - p.center()).norm(), 1e-12);
}
