#pragma once

#include "camgen/camera.hpp"
#include "camgen/image.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace camgen {

struct Primitive {
    enum class Kind { box, sphere };
    Kind kind = Kind::sphere;
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    Eigen::Vector3d half_extent = Eigen::Vector3d::Zero();  // boxes
    double radius = 0.0;                                    // spheres
    Eigen::Vector3f color = Eigen::Vector3f::Zero();

    /// Nearest positive ray parameter along origin + s * dir, if any.
    std::optional<double> intersect(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) const;

    bool operator==(const Primitive&) const = default;
};

struct Scene {
    std::vector<Primitive> primitives;
    Eigen::Vector3f background = Eigen::Vector3f::Zero();

    bool operator==(const Scene&) const = default;
};

/// Backdrop wall, floor and 1-6 objects: 3-8 primitives with distinct,
/// 8-bit-exact colors. Pure function of the seed.
Scene generate_scene(std::uint64_t seed);

struct RenderResult {
    Image frame;
    DepthMap depth;  // camera-frame z; -1 where no primitive is hit
};

RenderResult raycast_render(const Scene& scene, const CameraPose& pose, const Intrinsics& k);

enum class MotionProfile { dolly, orbit, truck, mixed };

MotionProfile parse_motion_profile(std::string_view name);
std::string_view to_string(MotionProfile p);

/// Camera at (0, 0, -4) looking down +z; every clip starts here.
CameraPose reference_pose();

/// Seed-derived signed magnitude of a profile (scene units, or degrees for orbit).
struct MotionAmount {
    double dolly = 0.0;
    double truck = 0.0;
    double orbit_deg = 0.0;
};
MotionAmount motion_amount(std::uint64_t seed, MotionProfile profile);
/// Final pose reached from the reference pose by `amount`.
CameraPose motion_target(const MotionAmount& amount);

struct Clip {
    std::uint64_t seed = 0;
    MotionProfile profile = MotionProfile::dolly;
    Intrinsics intrinsics;
    Trajectory trajectory;
    std::vector<Image> frames;
    std::vector<DepthMap> depths;

    int length() const { return static_cast<int>(frames.size()); }
};

/// Ray-cast clip along interpolate_trajectory(reference, target, T).
/// `amount` overrides the seed-derived magnitude when given.
Clip generate_clip(std::uint64_t seed, int T, MotionProfile profile, int width, int height,
                   std::optional<MotionAmount> amount = std::nullopt);

// Dataset container: one directory per clip with `meta`, `poses.bin`,
// `frames/%04d.png` and `depths.bin`.

struct ClipMeta {
    std::uint64_t seed = 0;
    int length = 0;
    MotionProfile profile = MotionProfile::dolly;
    Intrinsics intrinsics;

    bool operator==(const ClipMeta&) const = default;
};

std::string format_clip_meta(const ClipMeta& meta);
ClipMeta parse_clip_meta(const std::string& text);

void write_clip(const Clip& clip, const std::filesystem::path& dir);
Clip read_clip(const std::filesystem::path& dir);
ClipMeta read_clip_meta(const std::filesystem::path& dir);

void write_poses(const std::filesystem::path& path, const std::vector<CameraPose>& poses);
std::vector<CameraPose> read_poses(const std::filesystem::path& path);
void write_depths(const std::filesystem::path& path, const std::vector<DepthMap>& depths);
std::vector<DepthMap> read_depths(const std::filesystem::path& path, int count, int height, int width);

/// Clip subdirectories of a dataset, sorted by name.
std::vector<std::filesystem::path> list_clips(const std::filesystem::path& dataset_dir);
std::string clip_dir_name(std::uint64_t seed);

} // namespace camgen
