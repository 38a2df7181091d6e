#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "liftwatch/errors.hpp"
#include "liftwatch/pointcloud.hpp"

namespace liftwatch {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary cloud I/O assumes a little-endian host");

constexpr std::array<char, 4> kMagic{'L', 'W', 'P', 'C'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.write(buf, sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  char buf[sizeof(T)];
  if (!in.read(buf, sizeof(T))) {
    throw ParseError(path.string() + ": truncated point cloud file");
  }
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

}  // namespace

PointCloud read_cloud_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  PointCloud cloud;
  cloud.source_id = path.filename().string();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double x, y, z;
    if (!(fields >> x >> y >> z)) {
      throw ParseError("expected x,y,z in " + path.string(), line_no);
    }
    cloud.points.emplace_back(x, y, z);
  }
  return cloud;
}

void write_cloud_csv(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.precision(17);
  for (const auto& p : cloud.points) {
    out << p.x() << ',' << p.y() << ',' << p.z() << '\n';
  }
}

PointCloud read_cloud_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || magic != kMagic) {
    throw ParseError(path.string() + ": bad point cloud magic");
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kVersion) {
    throw ParseError(path.string() + ": unsupported point cloud version " +
                     std::to_string(version));
  }
  const auto count = get<std::uint64_t>(in, path);
  PointCloud cloud;
  cloud.source_id = path.filename().string();
  cloud.points.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const float x = get<float>(in, path);
    const float y = get<float>(in, path);
    const float z = get<float>(in, path);
    cloud.points.emplace_back(x, y, z);
  }
  return cloud;
}

void write_cloud_binary(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(kMagic.data(), 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, cloud.points.size());
  for (const auto& p : cloud.points) {
    put<float>(out, static_cast<float>(p.x()));
    put<float>(out, static_cast<float>(p.y()));
    put<float>(out, static_cast<float>(p.z()));
  }
}

PointCloud read_cloud(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return read_cloud_csv(path);
  return read_cloud_binary(path);
}

}  // namespace liftwatch
