#include "camgen/instructions.hpp"

#include <fmt/format.h>

#include <Eigen/Geometry>
#include <cmath>
#include <numbers>
#include <regex>
#include <stdexcept>

namespace camgen {

namespace {

std::string_view motion_name(CameraMotion m) {
    switch (m) {
    case CameraMotion::dolly: return "dolly";
    case CameraMotion::truck: return "truck";
    case CameraMotion::pedestal: return "pedestal";
    case CameraMotion::orbit: return "orbit";
    }
    return "dolly";
}

CameraMotion parse_motion(const std::string& name) {
    for (CameraMotion m : {CameraMotion::dolly, CameraMotion::truck, CameraMotion::pedestal, CameraMotion::orbit})
        if (motion_name(m) == name) return m;
    throw std::invalid_argument("unknown camera instruction '" + name + "'");
}

} // namespace

std::vector<CameraInstruction> parse_instructions(std::string_view text) {
    static const std::regex token_re(R"(^\s*([a-z]+)\s*([+-])\s*([0-9]+(\.[0-9]*)?|\.[0-9]+)\s*$)");
    std::vector<CameraInstruction> out;
    size_t pos = 0;
    while (pos <= text.size()) {
        const size_t comma = text.find(',', pos);
        const std::string token(text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        std::smatch m;
        if (!std::regex_match(token, m, token_re))
            throw std::invalid_argument("malformed camera instruction '" + token +
                                        "' (expected e.g. dolly+0.5, truck-1, pedestal+0.2, orbit-15)");
        CameraInstruction ins;
        ins.motion = parse_motion(m[1].str());
        ins.magnitude = std::stod(m[3].str()) * (m[2].str() == "-" ? -1.0 : 1.0);
        out.push_back(ins);
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::string format_instruction(const CameraInstruction& ins) {
    return fmt::format("{}{}{}", motion_name(ins.motion), ins.magnitude < 0 ? '-' : '+', std::abs(ins.magnitude));
}

CameraPose apply_instruction(const CameraPose& pose, const CameraInstruction& ins, const Eigen::Vector3d& pivot) {
    CameraPose out = pose;
    const double m = ins.magnitude;
    switch (ins.motion) {
    // Moving the camera by d (camera frame) shifts camera coordinates by -d.
    case CameraMotion::dolly: out.translation.z() -= m; break;
    case CameraMotion::truck: out.translation.x() -= m; break;
    case CameraMotion::pedestal: out.translation.y() += m; break;
    case CameraMotion::orbit: {
        const Eigen::Matrix3d r =
            Eigen::AngleAxisd(m * std::numbers::pi / 180.0, Eigen::Vector3d::UnitY()).toRotationMatrix();
        const Eigen::Vector3d center = pivot + r * (pose.center() - pivot);
        out = CameraPose::from_rotation(pose.rotation * r.transpose(), Eigen::Vector3d::Zero());
        out.translation = -(out.rotation * center);
        break;
    }
    }
    return out;
}

CameraPose apply_instructions(CameraPose pose, const std::vector<CameraInstruction>& instructions,
                              const Eigen::Vector3d& pivot) {
    for (const auto& ins : instructions) pose = apply_instruction(pose, ins, pivot);
    return pose;
}

} // namespace camgen
