#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace rapid {

using Point3 = Eigen::Vector3d;
using PointIndex = std::uint32_t;
using Label = std::uint32_t;

/// Columnar LiDAR scan. Immutable once constructed; the constructor enforces
/// finiteness and channel-length agreement.
class PointCloud {
 public:
  PointCloud() = default;
  PointCloud(std::vector<Point3> points, std::vector<double> remission,
             std::optional<std::vector<std::uint32_t>> ring = std::nullopt,
             std::optional<std::vector<Label>> labels = std::nullopt);

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }

  std::span<const Point3> points() const noexcept { return points_; }
  std::span<const double> remission() const noexcept { return remission_; }
  const Point3& point(std::size_t i) const { return points_[i]; }
  double remission(std::size_t i) const { return remission_[i]; }

  bool has_ring() const noexcept { return ring_.has_value(); }
  bool has_labels() const noexcept { return labels_.has_value(); }
  std::span<const std::uint32_t> ring() const;
  std::span<const Label> labels() const;

  PointCloud with_points(std::vector<Point3> points) const;
  PointCloud with_remission(std::vector<double> remission) const;
  PointCloud with_ring(std::vector<std::uint32_t> ring) const;
  PointCloud with_labels(std::vector<Label> labels) const;
  PointCloud without_labels() const;
  PointCloud without_ring() const;

  /// Gathers the given rows, in the given order, into a new cloud.
  PointCloud select(std::span<const PointIndex> rows) const;

  friend bool operator==(const PointCloud&, const PointCloud&) = default;

 private:
  std::vector<Point3> points_;
  std::vector<double> remission_;
  std::optional<std::vector<std::uint32_t>> ring_;
  std::optional<std::vector<Label>> labels_;
};

/// Spinning-LiDAR beam layout. Ring b covers elevations
/// [fov_down + b*delta_phi, fov_down + (b+1)*delta_phi).
struct SensorGeometry {
  std::uint32_t beam_count = 64;
  double delta_theta = 0.0;
  double delta_phi = 0.0;
  std::uint32_t measurements_per_cycle = 2048;
  double fov_down = 0.0;

  /// Derives angular resolutions from the beam count and vertical field of
  /// view (radians).
  static SensorGeometry from_fov(std::uint32_t beams, double fov_up,
                                 double fov_down, std::uint32_t per_cycle);
  /// 64 beams, +3 to -25 degrees, 2048 columns.
  static SensorGeometry hdl64();

  double fov_up() const noexcept { return fov_down + delta_phi * beam_count; }
  void validate() const;
};

}  // namespace rapid
