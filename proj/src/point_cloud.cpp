#include "rapid/point_cloud.hpp"

#include "rapid/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace rapid {

namespace {

void check_points(std::span<const Point3> points) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) {
      throw Error(ErrorCode::NonFinite,
                  "point " + std::to_string(i) + " has a non-finite coordinate");
    }
  }
}

template <typename T>
void check_length(const std::vector<T>& channel, std::size_t n, const char* name) {
  if (channel.size() != n) {
    throw Error(ErrorCode::Contract, std::string(name) + " channel has " +
                                         std::to_string(channel.size()) +
                                         " entries, expected " + std::to_string(n));
  }
}

}  // namespace

PointCloud::PointCloud(std::vector<Point3> points, std::vector<double> remission,
                       std::optional<std::vector<std::uint32_t>> ring,
                       std::optional<std::vector<Label>> labels)
    : points_(std::move(points)),
      remission_(std::move(remission)),
      ring_(std::move(ring)),
      labels_(std::move(labels)) {
  check_points(points_);
  check_length(remission_, points_.size(), "remission");
  for (std::size_t i = 0; i < remission_.size(); ++i) {
    if (!std::isfinite(remission_[i])) {
      throw Error(ErrorCode::NonFinite,
                  "remission of point " + std::to_string(i) + " is non-finite");
    }
  }
  if (ring_) check_length(*ring_, points_.size(), "ring");
  if (labels_) check_length(*labels_, points_.size(), "label");
}

std::span<const std::uint32_t> PointCloud::ring() const {
  if (!ring_) return {};
  return *ring_;
}

std::span<const Label> PointCloud::labels() const {
  if (!labels_) return {};
  return *labels_;
}

PointCloud PointCloud::with_points(std::vector<Point3> points) const {
  return PointCloud(std::move(points), remission_, ring_, labels_);
}

PointCloud PointCloud::with_remission(std::vector<double> remission) const {
  return PointCloud(points_, std::move(remission), ring_, labels_);
}

PointCloud PointCloud::with_ring(std::vector<std::uint32_t> ring) const {
  return PointCloud(points_, remission_, std::move(ring), labels_);
}

PointCloud PointCloud::with_labels(std::vector<Label> labels) const {
  return PointCloud(points_, remission_, ring_, std::move(labels));
}

PointCloud PointCloud::without_labels() const {
  return PointCloud(points_, remission_, ring_, std::nullopt);
}

PointCloud PointCloud::without_ring() const {
  return PointCloud(points_, remission_, std::nullopt, labels_);
}

PointCloud PointCloud::select(std::span<const PointIndex> rows) const {
  std::vector<Point3> pts;
  std::vector<double> rem;
  pts.reserve(rows.size());
  rem.reserve(rows.size());
  std::optional<std::vector<std::uint32_t>> ring;
  std::optional<std::vector<Label>> labels;
  if (ring_) ring.emplace().reserve(rows.size());
  if (labels_) labels.emplace().reserve(rows.size());
  for (PointIndex r : rows) {
    pts.push_back(points_.at(r));
    rem.push_back(remission_[r]);
    if (ring_) ring->push_back((*ring_)[r]);
    if (labels_) labels->push_back((*labels_)[r]);
  }
  return PointCloud(std::move(pts), std::move(rem), std::move(ring), std::move(labels));
}

SensorGeometry SensorGeometry::from_fov(std::uint32_t beams, double fov_up,
                                        double fov_down, std::uint32_t per_cycle) {
  SensorGeometry g;
  g.beam_count = beams;
  g.measurements_per_cycle = per_cycle;
  g.fov_down = fov_down;
  g.delta_phi = beams > 0 ? (fov_up - fov_down) / beams : 0.0;
  g.delta_theta = per_cycle > 0 ? 2.0 * std::numbers::pi / per_cycle : 0.0;
  g.validate();
  return g;
}

SensorGeometry SensorGeometry::hdl64() {
  constexpr double deg = std::numbers::pi / 180.0;
  return from_fov(64, 3.0 * deg, -25.0 * deg, 2048);
}

void SensorGeometry::validate() const {
  if (beam_count == 0 || !(delta_theta > 0.0) || !(delta_phi > 0.0) ||
      !std::isfinite(fov_down)) {
    throw Error(ErrorCode::InvalidArgument,
                "sensor geometry needs B > 0, delta_theta > 0, delta_phi > 0");
  }
}

}  // namespace rapid
