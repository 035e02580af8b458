#include "vdt/volume_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace vdt {

static_assert(std::endian::native == std::endian::little,
              "raw volume format is little-endian");

void write_volume(const std::filesystem::path& path, const Tensor& volume,
                  std::array<double, 3> spacing) {
    if (volume.rank() != 4)
        throw DimensionError("write_volume: expected [C,D,H,W], got " + shape_str(volume.shape()));
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("write_volume: cannot open " + tmp.string());
        os << "VDTVOL1 f32 " << volume.dim(0) << " " << volume.dim(1) << " " << volume.dim(2)
           << " " << volume.dim(3) << " " << spacing[0] << " " << spacing[1] << " " << spacing[2]
           << "\n";
        std::vector<float> buf(volume.values().size());
        for (size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(volume.values()[i]);
        os.write(reinterpret_cast<const char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (!os) throw IoError("write_volume: short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("write_volume: rename failed: " + ec.message());
}

VolumeFile read_volume(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("read_volume: cannot open " + path.string());
    std::string header;
    if (!std::getline(is, header)) throw IoError("read_volume: missing header in " + path.string());
    std::istringstream hs(header);
    std::string magic, dtype;
    int64_t c, d, h, w;
    VolumeFile out;
    if (!(hs >> magic >> dtype >> c >> d >> h >> w >> out.spacing[0] >> out.spacing[1] >>
          out.spacing[2]) ||
        magic != "VDTVOL1" || dtype != "f32")
        throw IoError("read_volume: bad header '" + header + "' in " + path.string());
    int64_t n = c * d * h * w;
    std::vector<float> buf(static_cast<size_t>(n));
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * sizeof(float)));
    if (is.gcount() != static_cast<std::streamsize>(n * sizeof(float)))
        throw IoError("read_volume: truncated voxel data in " + path.string());
    std::vector<double> values(buf.begin(), buf.end());
    out.data = Tensor::from({c, d, h, w}, std::move(values));
    return out;
}

std::vector<Tensor> read_volume_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw IoError("read_volume_dir: not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".raw") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<Tensor> out;
    out.reserve(files.size());
    for (const auto& f : files) out.push_back(read_volume(f).data);
    return out;
}

uint64_t file_hash(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("file_hash: cannot open " + path.string());
    uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
        for (std::streamsize i = 0; i < is.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!is) break;
    }
    return h;
}

}  // namespace vdt
