#pragma once

#include "rapid/point_cloud.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace rapid {

// --- SemanticKITTI on-disk formats ---------------------------------------

/// Packed little-endian float32 quadruples (x, y, z, remission).
/// Throws MalformedScan for sizes that are not a multiple of 16 and NonFinite
/// (with the point index) for NaN/Inf values.
PointCloud load_kitti_scan(const std::filesystem::path& path);
PointCloud decode_kitti_scan(std::span<const std::byte> bytes);

/// Packed little-endian uint32; the low 16 bits are the semantic class.
/// Throws LabelMismatch when the count differs from the cloud's.
PointCloud load_kitti_labels(const std::filesystem::path& path, const PointCloud& cloud);
std::vector<Label> decode_kitti_labels(std::span<const std::byte> bytes);

void save_kitti_scan(const std::filesystem::path& path, const PointCloud& cloud);
void save_kitti_labels(const std::filesystem::path& path, std::span<const Label> labels);

/// Text point list with a header row naming at least x, y, z and one of
/// intensity/remission; optional ring and label columns. This is the entry
/// point for nuScenes-style exports.
PointCloud load_csv_cloud(const std::filesystem::path& path);

std::vector<std::byte> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);

// --- Synthetic scenes -------------------------------------------------------

/// n . p = offset, limited to points within `extent` of the world origin.
struct Plane {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double offset = 0.0;
  double extent = 1e9;
};

/// Axis-aligned box.
struct Box {
  Point3 min = Point3::Zero();
  Point3 max = Point3::Ones();
};

/// Vertical capped cylinder.
struct Cylinder {
  double center_x = 0.0;
  double center_y = 0.0;
  double radius = 1.0;
  double z_min = 0.0;
  double z_max = 1.0;
};

struct Primitive {
  std::variant<Plane, Box, Cylinder> shape;
  Label class_id = 0;
  double reflectivity = 0.5;
};

/// Level sensor at `position`, rotated by `yaw` about +z.
struct SensorPose {
  Point3 position = Point3::Zero();
  double yaw = 0.0;
};

struct SyntheticSceneSpec {
  std::vector<Primitive> primitives;
  SensorPose pose;
  SensorGeometry sensor = SensorGeometry::hdl64();
  double max_range = 120.0;
  double noise_sigma = 0.0;  // range noise, meters
  std::uint64_t seed = 0;
};

/// Ray-casts one sweep of the sensor against the primitives. Points are in
/// the sensor frame and carry the hit primitive's class and reflectivity; the
/// ring channel comes from elevation quantization. Same spec, same cloud.
/// Throws EmptyScene for an empty primitive list.
PointCloud synthesize_scene(const SyntheticSceneSpec& spec);

/// Ground plane, a few boxes (class 1, 3) and poles (class 2) placed from
/// `seed`. Classes: 0 ground, 1 car-like box, 2 pole, 3 building.
SyntheticSceneSpec street_scene(std::uint64_t seed, const SensorGeometry& sensor,
                                double noise_sigma);

}  // namespace rapid
