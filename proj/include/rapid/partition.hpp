#pragma once

#include "rapid/point_cloud.hpp"
#include "rapid/rapid.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace rapid {

struct CylindricalBin {
  std::int64_t theta = 0;
  std::int64_t phi = 0;
};

/// floor(atan2(y, x) / dtheta), floor(asin(z / |p|) / dphi).
/// Throws UndefinedAngle for the origin.
CylindricalBin cylindrical_bin(const Point3& point, const SensorGeometry& geometry);

/// Ring of a point by elevation quantization, counted from the lowest beam
/// edge and clipped to [0, B).
std::uint32_t ring_of(const Point3& point, const SensorGeometry& geometry);

struct RingPartition {
  std::vector<std::uint32_t> ring_of;        // per point
  std::vector<std::vector<PointIndex>> rings;  // B lists, ascending indices
};

/// Uses the cloud's native ring channel when present, otherwise elevation
/// quantization. Points at the origin fall into ring 0.
RingPartition partition_rings(const PointCloud& cloud, const SensorGeometry& geometry);

struct ClassPartition {
  std::vector<Label> classes;                    // ascending distinct ids
  std::vector<std::vector<PointIndex>> members;  // parallel to classes
};

/// Throws LabelsRequired when the cloud carries no labels.
ClassPartition partition_classes(const PointCloud& cloud);

/// One RAPiD job: a ring or class intersected with a range band.
struct RegionOfInterest {
  std::int64_t roi_id = 0;
  std::int64_t group = 0;
  RangeBand band = RangeBand::Close;
  std::uint32_t k = 0;  // band k; the job may fall back to a smaller one
  std::vector<PointIndex> points;
};

/// roi_id = group * 3 + band.
inline std::int64_t make_roi_id(std::int64_t group, RangeBand band) {
  return group * kBandCount + std::int64_t(band);
}

/// Splits each group by range band; empty sub-regions are dropped.
std::vector<RegionOfInterest> split_by_band(std::span<const std::vector<PointIndex>> groups,
                                            std::span<const std::int64_t> group_ids,
                                            const PointCloud& cloud,
                                            const RangeAwareConfig& config);

std::vector<RegionOfInterest> plan_ring_rois(const PointCloud& cloud,
                                             const SensorGeometry& geometry,
                                             const RangeAwareConfig& config);
std::vector<RegionOfInterest> plan_class_rois(const PointCloud& cloud,
                                              const RangeAwareConfig& config);

/// k actually used for a region of `points` points requesting `k`: the first
/// of k and the smaller configured k values that fits, or 0 for padding.
std::uint32_t fallback_k(std::size_t points, std::uint32_t k, const RangeAwareConfig& config);

/// Per-point rows padded with 1.0 to the widest configured k.
struct PointwiseFeatureSet {
  std::uint32_t width = 0;
  std::vector<float> values;             // size() * width, row-major
  std::vector<std::int64_t> roi_of;      // per point, -1 if unassigned
  std::vector<std::uint32_t> valid_width;

  std::size_t size() const noexcept { return roi_of.size(); }
  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(values).subspan(i * width, width);
  }
};

/// Wall time spent per extraction stage, summed over phases (seconds).
struct StageTimes {
  double partition = 0.0;
  double knn = 0.0;
  double sort = 0.0;
  double normalize = 0.0;
};

struct ExtractOptions {
  std::size_t workers = 1;
  StageTimes* times = nullptr;
};

struct FeatureExtraction {
  std::vector<RapidMatrix> matrices;  // one per RoI, in plan order
  PointwiseFeatureSet pointwise;
};

/// Runs RAPiD over every planned RoI (neighbor, normalize and sort phases, each
/// data-parallel over RoIs) and scatters rows back to their anchor points.
FeatureExtraction extract(const PointCloud& cloud, std::span<const RegionOfInterest> rois,
                          const RangeAwareConfig& config, const ExtractOptions& options = {});

PointwiseFeatureSet scatter_rows(std::span<const RapidMatrix> matrices, std::size_t points,
                                 std::uint32_t width);

FeatureExtraction r_rapid(const PointCloud& cloud, const SensorGeometry& geometry,
                          const RangeAwareConfig& config, const ExtractOptions& options = {});
FeatureExtraction c_rapid(const PointCloud& cloud, const RangeAwareConfig& config,
                          const ExtractOptions& options = {});

}  // namespace rapid
