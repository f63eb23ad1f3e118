#include "camgen/guidance.hpp"
#include "camgen/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace camgen {

Eigen::Vector3d PointCloud::centroid() const {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (const auto& p : positions) sum += p;
    return positions.empty() ? sum : Eigen::Vector3d(sum / static_cast<double>(positions.size()));
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string());
    out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
        << "\nproperty float x\nproperty float y\nproperty float z\n"
           "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
    out.precision(9);
    for (size_t i = 0; i < cloud.size(); ++i) {
        const auto& p = cloud.positions[i];
        const auto& c = cloud.colors[i];
        out << p.x() << ' ' << p.y() << ' ' << p.z();
        for (int ch = 0; ch < 3; ++ch) out << ' ' << std::lround(std::clamp(c[ch], 0.0f, 1.0f) * 255.0f);
        out << '\n';
    }
}

RenderedView render_pointcloud(const PointCloud& cloud, const CameraPose& pose, const Intrinsics& k) {
    k.validate();
    RenderedView view{Image(k.height, k.width, 0.0f), Mask(k.height, k.width, true)};
    std::vector<double> zbuf(static_cast<size_t>(k.width) * k.height, std::numeric_limits<double>::infinity());
    for (size_t i = 0; i < cloud.size(); ++i) {
        const Projection p = project(cloud.positions[i], pose, k);
        if (!p.visible) continue;
        const int x = static_cast<int>(std::floor(p.u));
        const int y = static_cast<int>(std::floor(p.v));
        const size_t idx = static_cast<size_t>(y) * k.width + x;
        if (p.depth < zbuf[idx]) {
            zbuf[idx] = p.depth;
            view.mask.set(y, x, false);
            for (int c = 0; c < 3; ++c) view.frame.at(y, x, c) = cloud.colors[i][c];
        }
    }
    return view;
}

GuidanceSequence build_guidance(const Image& input_image, const DepthMap& input_depth, const Trajectory& traj,
                                const Intrinsics& k) {
    k.validate();
    if (traj.size() < 1) throw std::invalid_argument("build_guidance: empty trajectory");
    if (input_image.width != k.width || input_image.height != k.height)
        throw std::invalid_argument("build_guidance: image shape does not match intrinsics");
    if (input_depth.width != k.width || input_depth.height != k.height)
        throw std::invalid_argument("build_guidance: depth shape does not match intrinsics");

    const PointCloud cloud = unproject(input_depth, traj[0], k, input_image);
    GuidanceSequence seq;
    seq.frames.reserve(traj.size());
    seq.masks.reserve(traj.size());
    seq.frames.push_back(input_image);
    seq.masks.emplace_back(k.height, k.width, false);
    for (size_t f = 1; f < traj.size(); ++f) {
        RenderedView v = render_pointcloud(cloud, traj[f], k);
        seq.frames.push_back(std::move(v.frame));
        seq.masks.push_back(std::move(v.mask));
    }
    seq.mask_ratio_final = seq.masks.back().ratio();
    return seq;
}

MotionClass classify_motion(double ratio) {
    if (!(ratio >= 0.0 && ratio <= 1.0)) throw std::invalid_argument("classify_motion: ratio outside [0,1]");
    return ratio > kExtensiveMotionThreshold ? MotionClass::extensive : MotionClass::limited;
}

std::string_view to_string(MotionClass c) { return c == MotionClass::extensive ? "extensive" : "limited"; }

} // namespace camgen
