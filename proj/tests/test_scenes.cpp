#include "camgen/guidance.hpp"
#include "camgen/scenes.hpp"
#include "camgen/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <set>

using namespace camgen;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("camgen_test_scenes_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Scene single_sphere() {
    Scene s;
    Primitive p;
    p.kind = Primitive::Kind::sphere;
    p.center = Eigen::Vector3d::Zero();
    p.radius = 1.0;
    p.color = Eigen::Vector3f(1, 0, 0);
    s.primitives.push_back(p);
    s.background = Eigen::Vector3f(0.2f, 0.4f, 0.6f);
    return s;
}

bool on_color_edge(const Image& im, int y, int x) {
    for (auto [dy, dx] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
        const int yy = y + dy, xx = x + dx;
        if (yy < 0 || xx < 0 || yy >= im.height || xx >= im.width) continue;
        for (int c = 0; c < 3; ++c)
            if (im.at(yy, xx, c) != im.at(y, x, c)) return true;
    }
    return false;
}

} // namespace

TEST(GenerateScene, Deterministic) {
    EXPECT_EQ(generate_scene(0), generate_scene(0));
    EXPECT_EQ(generate_scene(12345), generate_scene(12345));
    EXPECT_FALSE(generate_scene(0) == generate_scene(1));
}

TEST(GenerateScene, ContractOverManySeeds) {
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const Scene s = generate_scene(seed);
        ASSERT_GE(s.primitives.size(), 3u);
        ASSERT_LE(s.primitives.size(), 8u);
        std::set<std::tuple<float, float, float>> colors{{s.background[0], s.background[1], s.background[2]}};
        for (const auto& p : s.primitives) {
            EXPECT_LE(p.center.norm(), 10.0);
            colors.insert({p.color[0], p.color[1], p.color[2]});
            for (int c = 0; c < 3; ++c) EXPECT_EQ(p.color[c], quantize_unit(p.color[c]));
        }
        EXPECT_EQ(colors.size(), s.primitives.size() + 1) << "seed " << seed;
    }
}

TEST(Raycast, MissGetsBackgroundAndSentinel) {
    const Scene s = single_sphere();
    const CameraPose pose = CameraPose::look_at(Eigen::Vector3d(0, 0, -5), Eigen::Vector3d::Zero());
    const RenderResult r = raycast_render(s, pose, Intrinsics{16, 16, 8, 8, 16, 16});
    EXPECT_FLOAT_EQ(r.depth.at(0, 0), -1.0f);
    EXPECT_EQ(r.frame.at(0, 0, 0), 0.2f);
    EXPECT_EQ(r.frame.at(0, 0, 2), 0.6f);
}

TEST(Raycast, SphereDepthOnAxis) {
    const Scene s = single_sphere();
    for (double d : {2.5, 4.0, 7.25}) {
        const CameraPose pose = CameraPose::look_at(Eigen::Vector3d(0, 0, -d), Eigen::Vector3d::Zero());
        // Principal point at the center of pixel (8, 8).
        const RenderResult r = raycast_render(s, pose, Intrinsics{20, 20, 8.5, 8.5, 16, 16});
        EXPECT_NEAR(r.depth.at(8, 8), d - 1.0, 1e-6);
        EXPECT_EQ(r.frame.at(8, 8, 0), 1.0f);
    }
}

TEST(Raycast, NearerPrimitiveWins) {
    const Scene s = generate_scene(7);
    const CameraPose pose = reference_pose();
    const Intrinsics k = Intrinsics::centered(24, 24);
    const RenderResult r = raycast_render(s, pose, k);
    for (int y = 0; y < k.height; ++y)
        for (int x = 0; x < k.width; ++x) {
            const Eigen::Vector3d dir =
                pose.rotation.transpose() * Eigen::Vector3d((x + 0.5 - k.cx) / k.fx, (y + 0.5 - k.cy) / k.fy, 1.0);
            double best = std::numeric_limits<double>::infinity();
            for (const auto& p : s.primitives)
                if (auto hit = p.intersect(pose.center(), dir)) best = std::min(best, *hit);
            if (std::isinf(best)) EXPECT_EQ(r.depth.at(y, x), -1.0f);
            else EXPECT_FLOAT_EQ(r.depth.at(y, x), static_cast<float>(best));
        }
}

TEST(GenerateClip, ZeroMagnitudeIsStatic) {
    const Clip c = generate_clip(3, 6, MotionProfile::dolly, 16, 16, MotionAmount{});
    for (int t = 1; t < c.length(); ++t) {
        EXPECT_EQ(c.frames[t], c.frames[0]);
        EXPECT_EQ(c.depths[t], c.depths[0]);
    }
}

TEST(GenerateClip, StartsAtReferencePose) {
    for (auto prof : {MotionProfile::dolly, MotionProfile::orbit, MotionProfile::truck, MotionProfile::mixed})
        for (std::uint64_t seed : {0u, 5u, 99u}) EXPECT_EQ(generate_clip(seed, 3, prof, 8, 8).trajectory[0], reference_pose());
}

TEST(GenerateClip, BitIdenticalRegeneration) {
    const Clip a = generate_clip(0, 29, MotionProfile::orbit, 32, 32);
    const Clip b = generate_clip(0, 29, MotionProfile::orbit, 32, 32);
    EXPECT_EQ(a.frames, b.frames);
    EXPECT_EQ(a.depths, b.depths);
    const double ra = build_guidance(a.frames[0], a.depths[0], a.trajectory, a.intrinsics).mask_ratio_final;
    const double rb = build_guidance(b.frames[0], b.depths[0], b.trajectory, b.intrinsics).mask_ratio_final;
    EXPECT_EQ(ra, rb);
    EXPECT_GT(ra, 0.0);
}

TEST(GenerateClip, Errors) {
    EXPECT_THROW(generate_clip(0, 1, MotionProfile::dolly, 8, 8), std::invalid_argument);
    EXPECT_THROW(parse_motion_profile("spiral"), std::invalid_argument);
    EXPECT_EQ(parse_motion_profile(to_string(MotionProfile::truck)), MotionProfile::truck);
}

TEST(GenerateClip, GeometricSelfConsistency) {
    // Reprojected frame-0 points agree with the ray-cast frames wherever the
    // splat and the ray hit the same surface. Pixels on a color edge are
    // skipped: where two primitives touch, depth alone cannot tell them apart.
    for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
        const Clip c = generate_clip(seed, 9, MotionProfile::mixed, 32, 32);
        const PointCloud pc = unproject(c.depths[0], c.trajectory[0], c.intrinsics, c.frames[0]);
        int checked = 0;
        for (int t = 1; t < c.length(); ++t) {
            std::vector<double> zbuf(32 * 32, std::numeric_limits<double>::infinity());
            std::vector<int> who(32 * 32, -1);
            for (size_t i = 0; i < pc.size(); ++i) {
                const Projection p = project(pc.positions[i], c.trajectory[t], c.intrinsics);
                if (!p.visible) continue;
                const int idx = static_cast<int>(p.v) * 32 + static_cast<int>(p.u);
                if (p.depth < zbuf[idx]) {
                    zbuf[idx] = p.depth;
                    who[idx] = static_cast<int>(i);
                }
            }
            for (int idx = 0; idx < 32 * 32; ++idx) {
                const double gt = c.depths[t].depth[idx];
                if (who[idx] < 0 || gt <= 0 || std::abs(zbuf[idx] - gt) > 1e-3 * gt) continue;
                if (on_color_edge(c.frames[t], idx / 32, idx % 32)) continue;
                ++checked;
                for (int ch = 0; ch < 3; ++ch)
                    EXPECT_NEAR(pc.colors[who[idx]][ch], c.frames[t].rgb[idx * 3 + ch], 2.0 / 255.0)
                        << "seed " << seed << " t " << t << " pixel " << idx;
            }
        }
        EXPECT_GT(checked, 8 * 32 * 32 / 10) << "seed " << seed;
    }
}

TEST(Container, MetaRoundTrip) {
    ClipMeta m{42, 81, MotionProfile::orbit, Intrinsics{32.5, 31.25, 16, 15.75, 32, 32}};
    EXPECT_EQ(parse_clip_meta(format_clip_meta(m)), m);
    EXPECT_THROW(parse_clip_meta("seed=1\nT=3\n"), DataError);
}

TEST(Container, ClipRoundTrip) {
    const fs::path dir = scratch_dir("clip");
    const Clip c = generate_clip(17, 5, MotionProfile::truck, 16, 16);
    write_clip(c, dir / clip_dir_name(17));
    EXPECT_EQ(clip_dir_name(17), "clip_000017");
    const auto listed = list_clips(dir);
    ASSERT_EQ(listed.size(), 1u);
    const Clip r = read_clip(listed[0]);
    EXPECT_EQ(r.seed, c.seed);
    EXPECT_EQ(r.profile, c.profile);
    EXPECT_EQ(r.intrinsics, c.intrinsics);
    EXPECT_EQ(r.frames, c.frames);
    EXPECT_EQ(r.depths, c.depths);
    ASSERT_EQ(r.trajectory.size(), c.trajectory.size());
    for (size_t i = 0; i < r.trajectory.size(); ++i) EXPECT_EQ(r.trajectory[i], c.trajectory[i]);
    EXPECT_EQ(fs::file_size(listed[0] / "poses.bin"), 5u * 12u * 8u);
    EXPECT_EQ(fs::file_size(listed[0] / "depths.bin"), 5u * 16u * 16u * 4u);
    fs::remove_all(dir);
}

TEST(Container, MissingDatasetThrows) {
    EXPECT_THROW(list_clips("/nonexistent/camgen/dataset"), DataError);
}
