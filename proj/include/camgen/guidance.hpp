#pragma once

#include "camgen/camera.hpp"
#include "camgen/image.hpp"
#include "camgen/pointcloud.hpp"

#include <string_view>
#include <vector>

namespace camgen {

/// Clips whose final-frame mask ratio exceeds this are "extensive" motion.
inline constexpr double kExtensiveMotionThreshold = 0.35;

struct RenderedView {
    Image frame;
    Mask mask;  // true = no point landed here; frame holds 0 there
};

/// Hard z-buffer splatting: each visible point paints the pixel containing its
/// projection; the smallest depth wins, first point on exact ties.
RenderedView render_pointcloud(const PointCloud& cloud, const CameraPose& pose, const Intrinsics& k);

struct GuidanceSequence {
    std::vector<Image> frames;
    std::vector<Mask> masks;
    double mask_ratio_final = 0.0;

    size_t size() const { return frames.size(); }
};

/// Lifts the input frame with traj[0], renders it along the trajectory and
/// substitutes frame 0 with the input image.
GuidanceSequence build_guidance(const Image& input_image, const DepthMap& input_depth, const Trajectory& traj,
                                const Intrinsics& k);

enum class MotionClass { limited, extensive };

MotionClass classify_motion(double mask_ratio_final);
std::string_view to_string(MotionClass c);

} // namespace camgen
