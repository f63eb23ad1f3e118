#include "camgen/scenes.hpp"
#include "camgen/errors.hpp"
#include "camgen/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace camgen {

static_assert(std::endian::native == std::endian::little, "binary container IO assumes a little-endian host");

namespace {

using Stream = Rng;

Eigen::Vector3f random_color(Stream& rng) {
    Eigen::Vector3f c;
    for (int i = 0; i < 3; ++i) c[i] = quantize_unit(static_cast<float>(rng.uniform(0.05, 0.95)));
    return c;
}

bool distinct(const Eigen::Vector3f& c, const std::vector<Eigen::Vector3f>& used) {
    for (const auto& u : used)
        if ((c - u).cwiseAbs().sum() < 0.3f) return false;
    return true;
}

Eigen::Vector3f pick_color(Stream& rng, std::vector<Eigen::Vector3f>& used) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Eigen::Vector3f c = random_color(rng);
        if (distinct(c, used)) {
            used.push_back(c);
            return c;
        }
    }
    throw std::logic_error("generate_scene: could not find a distinct color");
}

std::optional<double> ray_box(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const Eigen::Vector3d& lo,
                              const Eigen::Vector3d& hi) {
    double tnear = -std::numeric_limits<double>::infinity();
    double tfar = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        if (d[a] == 0.0) {
            if (o[a] < lo[a] || o[a] > hi[a]) return std::nullopt;
            continue;
        }
        double t0 = (lo[a] - o[a]) / d[a];
        double t1 = (hi[a] - o[a]) / d[a];
        if (t0 > t1) std::swap(t0, t1);
        tnear = std::max(tnear, t0);
        tfar = std::min(tfar, t1);
    }
    if (tnear > tfar) return std::nullopt;
    if (tnear > 0) return tnear;
    if (tfar > 0) return tfar;
    return std::nullopt;
}

Eigen::Matrix3d rotation_y(double radians) {
    return Eigen::AngleAxisd(radians, Eigen::Vector3d::UnitY()).toRotationMatrix();
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

std::optional<double> Primitive::intersect(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) const {
    if (kind == Kind::box) return ray_box(origin, dir, center - half_extent, center + half_extent);
    const Eigen::Vector3d oc = origin - center;
    const double a = dir.squaredNorm();
    const double b = 2.0 * dir.dot(oc);
    const double c = oc.squaredNorm() - radius * radius;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0) return std::nullopt;
    const double sq = std::sqrt(disc);
    const double s0 = (-b - sq) / (2.0 * a);
    const double s1 = (-b + sq) / (2.0 * a);
    if (s0 > 0) return s0;
    if (s1 > 0) return s1;
    return std::nullopt;
}

Scene generate_scene(std::uint64_t seed) {
    Stream rng(seed);
    Scene scene;
    std::vector<Eigen::Vector3f> used;
    scene.background = pick_color(rng, used);

    Primitive wall;
    wall.kind = Primitive::Kind::box;
    wall.center = Eigen::Vector3d(0.0, 0.0, rng.uniform(3.2, 4.2));
    wall.half_extent = Eigen::Vector3d(9.0, 9.0, 0.25);
    wall.color = pick_color(rng, used);
    scene.primitives.push_back(wall);

    const double floor_top = rng.uniform(1.3, 1.9);
    Primitive floor;
    floor.kind = Primitive::Kind::box;
    floor.center = Eigen::Vector3d(0.0, floor_top + 0.25, 0.0);
    floor.half_extent = Eigen::Vector3d(9.0, 0.25, 9.0);
    floor.color = pick_color(rng, used);
    scene.primitives.push_back(floor);

    const int objects = rng.integer(1, 6);
    for (int i = 0; i < objects; ++i) {
        Primitive p;
        p.kind = rng.unit() < 0.5 ? Primitive::Kind::box : Primitive::Kind::sphere;
        const double size = rng.uniform(0.35, 0.9);
        if (p.kind == Primitive::Kind::box) {
            p.half_extent = Eigen::Vector3d(size * rng.uniform(0.6, 1.4), size * rng.uniform(0.6, 1.4),
                                            size * rng.uniform(0.6, 1.4));
        } else {
            p.radius = size;
        }
        const double half_height = p.kind == Primitive::Kind::box ? p.half_extent.y() : p.radius;
        p.center = Eigen::Vector3d(rng.uniform(-2.2, 2.2), rng.uniform(-1.2, floor_top - half_height),
                                   rng.uniform(-0.8, 2.2));
        p.color = pick_color(rng, used);
        scene.primitives.push_back(p);
    }
    return scene;
}

RenderResult raycast_render(const Scene& scene, const CameraPose& pose, const Intrinsics& k) {
    k.validate();
    RenderResult out{Image(k.height, k.width), DepthMap(k.height, k.width, -1.0f)};
    const Eigen::Vector3d origin = pose.center();
    const Eigen::Matrix3d cam_to_world = pose.rotation.transpose();
    for (int y = 0; y < k.height; ++y) {
        for (int x = 0; x < k.width; ++x) {
            // Camera-space direction with unit z, so the ray parameter is the depth.
            const Eigen::Vector3d dir = cam_to_world * Eigen::Vector3d((x + 0.5 - k.cx) / k.fx, (y + 0.5 - k.cy) / k.fy, 1.0);
            double best = std::numeric_limits<double>::infinity();
            const Primitive* hit = nullptr;
            for (const auto& p : scene.primitives) {
                const auto s = p.intersect(origin, dir);
                if (s && *s < best) {
                    best = *s;
                    hit = &p;
                }
            }
            const Eigen::Vector3f color = hit ? hit->color : scene.background;
            for (int c = 0; c < 3; ++c) out.frame.at(y, x, c) = color[c];
            if (hit) out.depth.at(y, x) = static_cast<float>(best);
        }
    }
    return out;
}

MotionProfile parse_motion_profile(std::string_view name) {
    if (name == "dolly") return MotionProfile::dolly;
    if (name == "orbit") return MotionProfile::orbit;
    if (name == "truck") return MotionProfile::truck;
    if (name == "mixed") return MotionProfile::mixed;
    throw std::invalid_argument("unknown motion profile '" + std::string(name) + "'");
}

std::string_view to_string(MotionProfile p) {
    switch (p) {
        case MotionProfile::dolly: return "dolly";
        case MotionProfile::orbit: return "orbit";
        case MotionProfile::truck: return "truck";
        case MotionProfile::mixed: return "mixed";
    }
    return "?";
}

CameraPose reference_pose() {
    CameraPose pose;
    pose.translation = Eigen::Vector3d(0.0, 0.0, 4.0);
    return pose;
}

MotionAmount motion_amount(std::uint64_t seed, MotionProfile profile) {
    // Separate stream from the scene so magnitudes do not shift scene content.
    Stream rng(seed ^ 0xC0FFEE0DDF00Dull);
    MotionAmount m;
    switch (profile) {
        case MotionProfile::dolly: {
            const double s = rng.sign();
            m.dolly = s > 0 ? rng.uniform(0.4, 1.8) : -rng.uniform(0.4, 2.2);
            break;
        }
        case MotionProfile::truck: m.truck = rng.sign() * rng.uniform(0.4, 2.0); break;
        case MotionProfile::orbit: m.orbit_deg = rng.sign() * rng.uniform(8.0, 40.0); break;
        case MotionProfile::mixed:
            m.orbit_deg = rng.sign() * rng.uniform(5.0, 25.0);
            m.dolly = rng.sign() * rng.uniform(0.2, 1.0);
            m.truck = rng.sign() * rng.uniform(0.2, 1.0);
            break;
    }
    return m;
}

CameraPose motion_target(const MotionAmount& amount) {
    const CameraPose ref = reference_pose();
    CameraPose out;
    // Orbiting the rig about the world y axis through the origin keeps the
    // world->camera translation fixed.
    out.rotation = ref.rotation * rotation_y(amount.orbit_deg * std::numbers::pi / 180.0).transpose();
    out.translation = ref.translation - Eigen::Vector3d(amount.truck, 0.0, amount.dolly);
    return out;
}

Clip generate_clip(std::uint64_t seed, int T, MotionProfile profile, int width, int height,
                   std::optional<MotionAmount> amount) {
    if (T < 2) throw std::invalid_argument("generate_clip: T must be >= 2");
    const Scene scene = generate_scene(seed);
    Clip clip;
    clip.seed = seed;
    clip.profile = profile;
    clip.intrinsics = Intrinsics::centered(width, height);
    const MotionAmount m = amount ? *amount : motion_amount(seed, profile);
    clip.trajectory = interpolate_trajectory(reference_pose(), motion_target(m), T);
    clip.frames.reserve(T);
    clip.depths.reserve(T);
    for (const auto& pose : clip.trajectory.poses) {
        RenderResult r = raycast_render(scene, pose, clip.intrinsics);
        clip.frames.push_back(std::move(r.frame));
        clip.depths.push_back(std::move(r.depth));
    }
    return clip;
}

std::string format_clip_meta(const ClipMeta& meta) {
    const auto& k = meta.intrinsics;
    return fmt::format("seed={}\nT={}\nprofile={}\nwidth={}\nheight={}\nfx={:.17g}\nfy={:.17g}\ncx={:.17g}\ncy={:.17g}\n",
                       meta.seed, meta.length, to_string(meta.profile), k.width, k.height, k.fx, k.fy, k.cx, k.cy);
}

ClipMeta parse_clip_meta(const std::string& text) {
    ClipMeta meta;
    std::istringstream in(text);
    std::string line;
    int seen = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw DataError("meta: malformed line '" + line + "'");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        try {
            if (key == "seed") meta.seed = std::stoull(value);
            else if (key == "T") meta.length = std::stoi(value);
            else if (key == "profile") meta.profile = parse_motion_profile(value);
            else if (key == "width") meta.intrinsics.width = std::stoi(value);
            else if (key == "height") meta.intrinsics.height = std::stoi(value);
            else if (key == "fx") meta.intrinsics.fx = std::stod(value);
            else if (key == "fy") meta.intrinsics.fy = std::stod(value);
            else if (key == "cx") meta.intrinsics.cx = std::stod(value);
            else if (key == "cy") meta.intrinsics.cy = std::stod(value);
            else throw DataError("meta: unknown key '" + key + "'");
        } catch (const std::logic_error& e) {
            throw DataError("meta: bad value for '" + key + "': " + e.what());
        }
        ++seen;
    }
    if (seen < 9) throw DataError("meta: missing keys");
    return meta;
}

void write_poses(const std::filesystem::path& path, const std::vector<CameraPose>& poses) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path.string());
    for (const auto& p : poses) {
        double buf[12];
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) buf[r * 3 + c] = p.rotation(r, c);
        for (int i = 0; i < 3; ++i) buf[9 + i] = p.translation[i];
        out.write(reinterpret_cast<const char*>(buf), sizeof(buf));
    }
}

std::vector<CameraPose> read_poses(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<CameraPose> poses;
    double buf[12];
    while (in.read(reinterpret_cast<char*>(buf), sizeof(buf))) {
        CameraPose p;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) p.rotation(r, c) = buf[r * 3 + c];
        for (int i = 0; i < 3; ++i) p.translation[i] = buf[9 + i];
        poses.push_back(p);
    }
    if (in.gcount() != 0) throw DataError(path.string() + ": truncated pose record");
    return poses;
}

void write_depths(const std::filesystem::path& path, const std::vector<DepthMap>& depths) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path.string());
    for (const auto& d : depths)
        out.write(reinterpret_cast<const char*>(d.depth.data()),
                  static_cast<std::streamsize>(d.depth.size() * sizeof(float)));
}

std::vector<DepthMap> read_depths(const std::filesystem::path& path, int count, int height, int width) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<DepthMap> depths;
    for (int i = 0; i < count; ++i) {
        DepthMap d(height, width);
        if (!in.read(reinterpret_cast<char*>(d.depth.data()), static_cast<std::streamsize>(d.depth.size() * sizeof(float))))
            throw DataError(path.string() + ": truncated depth data");
        depths.push_back(std::move(d));
    }
    return depths;
}

std::string clip_dir_name(std::uint64_t seed) { return fmt::format("clip_{:06d}", seed); }

void write_clip(const Clip& clip, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "frames");
    {
        std::ofstream meta(dir / "meta");
        if (!meta) throw DataError("cannot write " + (dir / "meta").string());
        meta << format_clip_meta({clip.seed, clip.length(), clip.profile, clip.intrinsics});
    }
    write_poses(dir / "poses.bin", clip.trajectory.poses);
    write_depths(dir / "depths.bin", clip.depths);
    for (int t = 0; t < clip.length(); ++t) write_png(dir / "frames" / fmt::format("{:04d}.png", t), clip.frames[t]);
}

ClipMeta read_clip_meta(const std::filesystem::path& dir) { return parse_clip_meta(read_text(dir / "meta")); }

Clip read_clip(const std::filesystem::path& dir) {
    const ClipMeta meta = read_clip_meta(dir);
    meta.intrinsics.validate();
    Clip clip;
    clip.seed = meta.seed;
    clip.profile = meta.profile;
    clip.intrinsics = meta.intrinsics;
    clip.trajectory.poses = read_poses(dir / "poses.bin");
    if (static_cast<int>(clip.trajectory.size()) != meta.length)
        throw DataError(dir.string() + ": pose count does not match meta");
    clip.depths = read_depths(dir / "depths.bin", meta.length, meta.intrinsics.height, meta.intrinsics.width);
    for (int t = 0; t < meta.length; ++t) {
        Image im = read_png(dir / "frames" / fmt::format("{:04d}.png", t));
        if (im.width != meta.intrinsics.width || im.height != meta.intrinsics.height)
            throw DataError(dir.string() + ": frame size does not match meta");
        clip.frames.push_back(std::move(im));
    }
    return clip;
}

std::vector<std::filesystem::path> list_clips(const std::filesystem::path& dataset_dir) {
    if (!std::filesystem::is_directory(dataset_dir)) throw DataError("dataset not found: " + dataset_dir.string());
    std::vector<std::filesystem::path> clips;
    for (const auto& entry : std::filesystem::directory_iterator(dataset_dir))
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "meta")) clips.push_back(entry.path());
    std::sort(clips.begin(), clips.end());
    return clips;
}

} // namespace camgen
