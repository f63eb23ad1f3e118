#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <vector>

namespace camgen {

/// World-frame points with per-point RGB in [0,1].
struct PointCloud {
    std::vector<Eigen::Vector3d> positions;
    std::vector<Eigen::Vector3f> colors;

    size_t size() const { return positions.size(); }
    bool empty() const { return positions.empty(); }
    void push_back(const Eigen::Vector3d& p, const Eigen::Vector3f& c) {
        positions.push_back(p);
        colors.push_back(c);
    }
    Eigen::Vector3d centroid() const;
};

/// ASCII PLY, one "x y z r g b" vertex per line (colors as 0-255 integers).
void write_ply(const std::filesystem::path& path, const PointCloud& cloud);

} // namespace camgen
