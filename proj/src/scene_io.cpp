#include "rapid/scene_io.hpp"

#include "byte_order.hpp"
#include "rapid/error.hpp"
#include "rapid/partition.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

namespace rapid {

using detail::append_le;
using detail::read_le;

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = std::size_t(in.tellg());
  in.seekg(0);
  std::vector<std::byte> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(size));
  if (!in) throw Error(ErrorCode::Io, "short read on " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "short write on " + path.string());
}

PointCloud decode_kitti_scan(std::span<const std::byte> bytes) {
  if (bytes.size() % 16 != 0) {
    throw Error(ErrorCode::MalformedScan,
                "scan size " + std::to_string(bytes.size()) + " is not a multiple of 16");
  }
  const std::size_t n = bytes.size() / 16;
  std::vector<Point3> points(n);
  std::vector<double> remission(n);
  for (std::size_t i = 0; i < n; ++i) {
    float v[4];
    for (std::size_t c = 0; c < 4; ++c) v[c] = read_le<float>(bytes, i * 16 + c * 4);
    if (!(std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]) &&
          std::isfinite(v[3]))) {
      throw Error(ErrorCode::NonFinite, "point " + std::to_string(i) + " is not finite");
    }
    points[i] = Point3(v[0], v[1], v[2]);
    remission[i] = v[3];
  }
  return PointCloud(std::move(points), std::move(remission));
}

PointCloud load_kitti_scan(const std::filesystem::path& path) {
  return decode_kitti_scan(read_file(path));
}

std::vector<Label> decode_kitti_labels(std::span<const std::byte> bytes) {
  if (bytes.size() % 4 != 0) {
    throw Error(ErrorCode::LabelMismatch, "label file size is not a multiple of 4");
  }
  std::vector<Label> labels(bytes.size() / 4);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = read_le<std::uint32_t>(bytes, i * 4) & 0xFFFFU;
  }
  return labels;
}

PointCloud load_kitti_labels(const std::filesystem::path& path, const PointCloud& cloud) {
  const auto bytes = read_file(path);
  if (bytes.size() != 4 * cloud.size()) {
    throw Error(ErrorCode::LabelMismatch, path.string() + " holds " +
                                              std::to_string(bytes.size() / 4) +
                                              " labels for " + std::to_string(cloud.size()) +
                                              " points");
  }
  return cloud.with_labels(decode_kitti_labels(bytes));
}

void save_kitti_scan(const std::filesystem::path& path, const PointCloud& cloud) {
  std::vector<std::byte> out;
  out.reserve(cloud.size() * 16);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.point(i);
    append_le(out, float(p.x()));
    append_le(out, float(p.y()));
    append_le(out, float(p.z()));
    append_le(out, float(cloud.remission(i)));
  }
  write_file(path, out);
}

void save_kitti_labels(const std::filesystem::path& path, std::span<const Label> labels) {
  std::vector<std::byte> out;
  out.reserve(labels.size() * 4);
  for (Label l : labels) append_le(out, std::uint32_t(l));
  write_file(path, out);
}

PointCloud load_csv_cloud(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Format, "empty CSV " + path.string());

  std::map<std::string, std::size_t> column;
  {
    std::stringstream header(line);
    std::string name;
    for (std::size_t c = 0; std::getline(header, name, ','); ++c) {
      name.erase(std::remove_if(name.begin(), name.end(), ::isspace), name.end());
      std::transform(name.begin(), name.end(), name.begin(), ::tolower);
      column[name] = c;
    }
  }
  const auto find = [&](std::initializer_list<const char*> names) -> std::optional<std::size_t> {
    for (const char* n : names) {
      if (auto it = column.find(n); it != column.end()) return it->second;
    }
    return std::nullopt;
  };
  const auto x = find({"x"}), y = find({"y"}), z = find({"z"});
  const auto r = find({"remission", "intensity", "reflectivity"});
  const auto ring = find({"ring", "ring_index"});
  const auto label = find({"label", "class"});
  if (!x || !y || !z || !r) {
    throw Error(ErrorCode::Format, "CSV needs x, y, z and intensity/remission columns");
  }

  std::vector<Point3> points;
  std::vector<double> remission;
  std::vector<std::uint32_t> rings;
  std::vector<Label> labels;
  std::vector<std::string> cells;
  for (std::size_t row = 1; std::getline(in, line); ++row) {
    if (line.empty()) continue;
    cells.clear();
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    const auto num = [&](std::size_t c) {
      if (c >= cells.size()) {
        throw Error(ErrorCode::Format, "row " + std::to_string(row) + " is short");
      }
      try {
        return std::stod(cells[c]);
      } catch (const std::exception&) {
        throw Error(ErrorCode::Format, "row " + std::to_string(row) + " has a bad number");
      }
    };
    points.emplace_back(num(*x), num(*y), num(*z));
    remission.push_back(num(*r));
    if (ring) rings.push_back(std::uint32_t(num(*ring)));
    if (label) labels.push_back(Label(num(*label)));
  }
  std::optional<std::vector<std::uint32_t>> ring_channel;
  std::optional<std::vector<Label>> label_channel;
  if (ring) ring_channel = std::move(rings);
  if (label) label_channel = std::move(labels);
  return PointCloud(std::move(points), std::move(remission), std::move(ring_channel),
                    std::move(label_channel));
}

// --- ray casting -------------------------------------------------------------

namespace {

constexpr double kMinHit = 1e-6;
using Ray = Eigen::ParametrizedLine<double, 3>;

std::optional<double> intersect(const Plane& plane, const Ray& ray) {
  const double denom = plane.normal.dot(ray.direction());
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const double t = (plane.offset - plane.normal.dot(ray.origin())) / denom;
  if (t <= kMinHit || ray.pointAt(t).norm() > plane.extent) return std::nullopt;
  return t;
}

std::optional<double> intersect(const Box& box, const Ray& ray) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double o = ray.origin()[a];
    const double d = ray.direction()[a];
    if (std::abs(d) < 1e-15) {
      if (o < box.min[a] || o > box.max[a]) return std::nullopt;
      continue;
    }
    double lo = (box.min[a] - o) / d;
    double hi = (box.max[a] - o) / d;
    if (lo > hi) std::swap(lo, hi);
    t0 = std::max(t0, lo);
    t1 = std::min(t1, hi);
  }
  if (t0 > t1) return std::nullopt;
  if (t0 > kMinHit) return t0;
  if (t1 > kMinHit) return t1;
  return std::nullopt;
}

std::optional<double> intersect(const Cylinder& cyl, const Ray& ray) {
  std::optional<double> best;
  const auto keep = [&](double t) {
    if (t > kMinHit && (!best || t < *best)) best = t;
  };
  const Point3& o = ray.origin();
  const Point3& d = ray.direction();
  const double ox = o.x() - cyl.center_x;
  const double oy = o.y() - cyl.center_y;
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a > 1e-15) {
    const double b = 2.0 * (ox * d.x() + oy * d.y());
    const double c = ox * ox + oy * oy - cyl.radius * cyl.radius;
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double s = std::sqrt(disc);
      for (double t : {(-b - s) / (2.0 * a), (-b + s) / (2.0 * a)}) {
        const double z = o.z() + t * d.z();
        if (z >= cyl.z_min && z <= cyl.z_max) keep(t);
      }
    }
  }
  if (std::abs(d.z()) > 1e-15) {
    for (double zc : {cyl.z_min, cyl.z_max}) {
      const double t = (zc - o.z()) / d.z();
      const double x = ox + t * d.x();
      const double y = oy + t * d.y();
      if (x * x + y * y <= cyl.radius * cyl.radius) keep(t);
    }
  }
  return best;
}

/// Snaps a noiseless hit onto an axis-aligned plane so it satisfies the plane
/// equation without rounding residue.
Point3 snap(const Primitive& prim, Point3 hit) {
  if (const auto* plane = std::get_if<Plane>(&prim.shape)) {
    for (int a = 0; a < 3; ++a) {
      if (std::abs(plane->normal[a]) == plane->normal.norm()) {
        hit[a] = plane->offset / plane->normal[a];
      }
    }
  }
  return hit;
}

}  // namespace

PointCloud synthesize_scene(const SyntheticSceneSpec& spec) {
  if (spec.primitives.empty()) throw Error(ErrorCode::EmptyScene, "scene has no primitives");
  if (!(spec.noise_sigma >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "noise sigma must be >= 0");
  }
  const SensorGeometry& sensor = spec.sensor;
  sensor.validate();

  const Eigen::Matrix3d to_world =
      Eigen::AngleAxisd(spec.pose.yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const bool identity_pose = spec.pose.yaw == 0.0 && spec.pose.position.isZero(0.0);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<Point3> points;
  std::vector<double> remission;
  std::vector<Label> labels;
  for (std::uint32_t b = 0; b < sensor.beam_count; ++b) {
    const double elevation = sensor.fov_down + (b + 0.5) * sensor.delta_phi;
    for (std::uint32_t col = 0; col < sensor.measurements_per_cycle; ++col) {
      const double azimuth = -std::numbers::pi + (col + 0.5) * sensor.delta_theta;
      const Point3 local(std::cos(elevation) * std::cos(azimuth),
                         std::cos(elevation) * std::sin(azimuth), std::sin(elevation));
      const Ray ray(spec.pose.position, to_world * local);

      std::optional<double> nearest;
      const Primitive* hit = nullptr;
      for (const Primitive& prim : spec.primitives) {
        const auto t = std::visit([&](const auto& shape) { return intersect(shape, ray); },
                                  prim.shape);
        if (t && *t <= spec.max_range && (!nearest || *t < *nearest)) {
          nearest = t;
          hit = &prim;
        }
      }
      if (!hit) continue;

      Point3 p;
      if (spec.noise_sigma > 0.0) {
        const double range = std::max(kMinHit, *nearest + spec.noise_sigma * noise(rng));
        p = local * range;
      } else if (identity_pose) {
        p = snap(*hit, ray.pointAt(*nearest));
      } else {
        p = local * *nearest;
      }
      points.push_back(p);
      remission.push_back(hit->reflectivity);
      labels.push_back(hit->class_id);
    }
  }

  std::vector<std::uint32_t> ring(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) ring[i] = ring_of(points[i], sensor);
  return PointCloud(std::move(points), std::move(remission), std::move(ring), std::move(labels));
}

SyntheticSceneSpec street_scene(std::uint64_t seed, const SensorGeometry& sensor,
                                double noise_sigma) {
  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto in = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  SyntheticSceneSpec spec;
  spec.sensor = sensor;
  spec.noise_sigma = noise_sigma;
  spec.seed = seed;
  spec.max_range = 80.0;

  Plane ground;
  ground.offset = -1.73;
  ground.extent = 70.0;
  spec.primitives.push_back({ground, 0, 0.30});

  for (int i = 0; i < 6; ++i) {
    const double angle = in(-std::numbers::pi, std::numbers::pi);
    const double dist = in(6.0, 40.0);
    const Point3 c(dist * std::cos(angle), dist * std::sin(angle), -1.73);
    const Point3 half(in(0.8, 2.3), in(0.8, 1.0), 0.0);
    Box car{c - half, c + half};
    car.max.z() = -1.73 + in(1.3, 1.7);
    spec.primitives.push_back({car, 1, in(0.5, 0.9)});
  }
  for (int i = 0; i < 8; ++i) {
    const double angle = in(-std::numbers::pi, std::numbers::pi);
    const double dist = in(4.0, 55.0);
    spec.primitives.push_back({Cylinder{dist * std::cos(angle), dist * std::sin(angle),
                                        in(0.1, 0.3), -1.73, in(2.0, 6.0)},
                               2, in(0.2, 0.6)});
  }
  for (int i = 0; i < 2; ++i) {
    const double side = i == 0 ? 1.0 : -1.0;
    const double offset = in(12.0, 18.0);
    Box wall{Point3(-60.0, side > 0 ? offset : -offset - 3.0, -1.73),
             Point3(60.0, side > 0 ? offset + 3.0 : -offset, in(6.0, 12.0))};
    spec.primitives.push_back({wall, 3, in(0.1, 0.4)});
  }
  return spec;
}

}  // namespace rapid
