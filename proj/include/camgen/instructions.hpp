#pragma once

#include "camgen/camera.hpp"

#include <Eigen/Core>
#include <string>
#include <string_view>
#include <vector>

namespace camgen {

// Camera instruction vocabulary. Each token is <motion><sign><magnitude>,
// e.g. "dolly+0.5" or "orbit-20"; several tokens are separated by commas and
// applied left to right, each relative to the camera produced so far.
//
//   dolly+m     move m scene units forward along the camera's +z axis
//   truck+m     move m units right along the camera's +x axis
//   pedestal+m  move m units up, i.e. along the camera's -y axis
//   orbit+d     rotate the camera d degrees about the world vertical (y) axis
//               through the pivot (the point-cloud centroid); the distance to
//               the axis is preserved
//
// A negative sign moves the opposite way.

enum class CameraMotion { dolly, truck, pedestal, orbit };

struct CameraInstruction {
    CameraMotion motion = CameraMotion::dolly;
    double magnitude = 0.0;  // signed; scene units, or degrees for orbit

    bool operator==(const CameraInstruction&) const = default;
};

/// Throws std::invalid_argument on an unknown or malformed token.
std::vector<CameraInstruction> parse_instructions(std::string_view text);
std::string format_instruction(const CameraInstruction& instruction);

CameraPose apply_instruction(const CameraPose& pose, const CameraInstruction& instruction,
                             const Eigen::Vector3d& pivot = Eigen::Vector3d::Zero());
CameraPose apply_instructions(CameraPose pose, const std::vector<CameraInstruction>& instructions,
                              const Eigen::Vector3d& pivot = Eigen::Vector3d::Zero());

} // namespace camgen
