#include "camgen/checkpoint.hpp"
#include "camgen/errors.hpp"

#include <fmt/format.h>

#include <bit>
#include <fstream>
#include <sstream>

namespace camgen {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config, const ModelParams<float>& params) {
    const std::string cfg = format_config(config);
    const auto views = params.views();

    std::string header = fmt::format("camgen-checkpoint {}\nconfig {}\n{}tensors {}\n", kCheckpointVersion, cfg.size(),
                                     cfg, views.size());
    for (const auto& v : views) header += fmt::format("{} {} {} float32\n", v.name, v.rows, v.cols);
    header += "data\n";

    // Write to a sibling file first so a crash never leaves a truncated checkpoint.
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write " + tmp.string());
        out.write(header.data(), static_cast<std::streamsize>(header.size()));
        for (const auto& v : views)
            out.write(reinterpret_cast<const char*>(v.data), static_cast<std::streamsize>(v.size() * sizeof(float)));
        if (!out) throw DataError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

namespace {

std::string next_line(std::istream& in, const std::filesystem::path& path) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": truncated checkpoint header");
    return line;
}

} // namespace

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path.string());

    std::istringstream magic(next_line(in, path));
    std::string word;
    int version = 0;
    if (!(magic >> word >> version) || word != "camgen-checkpoint") throw DataError(path.string() + ": not a checkpoint");
    if (version != kCheckpointVersion)
        throw VersionError(fmt::format("{}: checkpoint version {} (expected {})", path.string(), version, kCheckpointVersion));

    std::istringstream cfg_line(next_line(in, path));
    size_t cfg_bytes = 0;
    if (!(cfg_line >> word >> cfg_bytes) || word != "config") throw DataError(path.string() + ": missing config block");
    std::string cfg_text(cfg_bytes, '\0');
    in.read(cfg_text.data(), static_cast<std::streamsize>(cfg_bytes));
    if (!in) throw DataError(path.string() + ": truncated config block");

    Checkpoint ck;
    try {
        ck.config = parse_config(cfg_text);
        ck.config.model_shape().validate();
    } catch (const std::invalid_argument& e) {
        throw VersionError(path.string() + ": stored configuration is not understood: " + e.what());
    }
    ck.params = ModelParams<float>::init(ck.config.model_shape(), 0, ck.config.alpha);
    auto views = ck.params.views();

    std::istringstream count_line(next_line(in, path));
    size_t count = 0;
    if (!(count_line >> word >> count) || word != "tensors") throw DataError(path.string() + ": missing tensor manifest");
    if (count != views.size())
        throw VersionError(fmt::format("{}: {} tensors stored, model expects {}", path.string(), count, views.size()));
    for (const auto& v : views) {
        std::istringstream entry(next_line(in, path));
        std::string name, type;
        int rows = 0, cols = 0;
        if (!(entry >> name >> rows >> cols >> type)) throw DataError(path.string() + ": malformed manifest entry");
        if (name != v.name || rows != v.rows || cols != v.cols || type != "float32")
            throw VersionError(fmt::format("{}: tensor {} {}x{} {} does not match expected {} {}x{} float32",
                                           path.string(), name, rows, cols, type, v.name, v.rows, v.cols));
    }
    if (next_line(in, path) != "data") throw DataError(path.string() + ": missing data marker");
    for (auto& v : views) {
        in.read(reinterpret_cast<char*>(v.data), static_cast<std::streamsize>(v.size() * sizeof(float)));
        if (!in) throw DataError(path.string() + ": truncated tensor data");
    }
    if (in.peek() != std::char_traits<char>::eof()) throw DataError(path.string() + ": trailing bytes after tensor data");
    return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelShape& expected) {
    Checkpoint ck = load_checkpoint(path);
    if (!(ck.config.model_shape() == expected))
        throw VersionError(path.string() + ": checkpoint model shape differs from the requested configuration");
    return ck;
}

} // namespace camgen
