#pragma once

#include "rapid/geometry.hpp"
#include "rapid/point_cloud.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace rapid {

enum class RangeBand : std::uint8_t { Close = 0, Mid = 1, Far = 2 };
inline constexpr int kBandCount = 3;
const char* to_string(RangeBand band) noexcept;

/// Range bands with their neighbor counts and the outlier threshold.
struct RangeAwareConfig {
  double close_mid_edge = 20.0;
  double mid_far_edge = 50.0;
  std::uint32_t k_close = 10;
  std::uint32_t k_mid = 7;
  std::uint32_t k_far = 5;
  double delta = 2.0;

  /// SemanticKITTI preset, k = (10, 7, 5).
  static RangeAwareConfig semantic_kitti() { return {}; }
  /// nuScenes preset, k = (8, 6, 3).
  static RangeAwareConfig nuscenes() {
    RangeAwareConfig c;
    c.k_close = 8;
    c.k_mid = 6;
    c.k_far = 3;
    return c;
  }

  std::uint32_t k_for(RangeBand band) const;
  void validate() const;
};

/// Band of a range; a range exactly on an edge belongs to the farther band.
RangeBand band_of(double range, const RangeAwareConfig& config);
std::uint32_t select_k(const Point3& point, const RangeAwareConfig& config);

/// Reflectivity extremes of the RoI and the span of coordinate distances over
/// the considered neighbor pairs; g() maps the former onto the latter.
struct ReflectivityScale {
  double r_min = 0.0;
  double r_max = 0.0;
  double d_min = 0.0;
  double d_max = 0.0;

  friend bool operator==(const ReflectivityScale&, const ReflectivityScale&) = default;
};

/// g(r). A constant-reflectivity RoI (r_min == r_max) maps everything to d_min.
double reflectivity_map(double r, const ReflectivityScale& scale);

/// 4D distance over the coordinate difference and the mapped reflectivity
/// difference.
double rho(const Point3& p_j, const Point3& p_l, double r_j, double r_l,
           const ReflectivityScale& scale);

/// Scale from the coordinate distances of exactly the (anchor, neighbor) pairs
/// in `neighbors` and the reflectivities of `subset`.
ReflectivityScale compute_scale(std::span<const PointIndex> subset, const PointCloud& cloud,
                                std::span<const NeighborList> neighbors);

/// Sorted distance-distribution matrix of one region of interest.
///
/// `values` holds the normalized u x k matrix (row-major): rows ascending,
/// rows in lexicographic ascending order, entries in [0, 1]. `raw` holds the
/// un-normalized 4D distances in the same layout. `anchors[i]` is the cloud
/// index whose neighborhood produced row i.
struct RapidMatrix {
  std::int64_t roi_id = 0;
  std::int64_t group = 0;
  RangeBand band = RangeBand::Close;
  std::uint32_t k = 0;
  bool padded = false;
  ReflectivityScale scale;
  double delta = std::numeric_limits<double>::infinity();
  double norm_min = 0.0;
  double norm_max = 0.0;
  std::uint32_t outliers = 0;
  std::vector<PointIndex> anchors;
  std::vector<double> values;
  std::vector<double> raw;

  std::size_t rows() const noexcept { return anchors.size(); }
  double at(std::size_t row, std::size_t col) const { return values[row * k + col]; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values).subspan(i * k, k);
  }
};

/// Output of the neighbor stage: the scale and, per anchor, its k nearest
/// neighbors under the 4D metric (ascending).
struct NeighborStage {
  ReflectivityScale scale;
  std::vector<NeighborList> rows;
};

/// Coordinate k-NN fixes the scale, then neighbors are re-ranked exactly
/// under the 4D metric.
NeighborStage rapid_neighbors(std::span<const PointIndex> subset, const PointCloud& cloud,
                              std::size_t k);

/// Drops entries above delta, min-max normalizes the survivors and writes 1.0
/// for the dropped ones. Rows are left in anchor order.
RapidMatrix rapid_normalize(const NeighborStage& stage, std::size_t k, double delta);

/// Sorts each row, then the rows lexicographically (in place).
void rapid_sort(RapidMatrix& matrix);

/// Full pipeline for one RoI. Throws InsufficientPoints when |subset| < k + 1.
RapidMatrix rapid(std::span<const PointIndex> subset, const PointCloud& cloud, std::size_t k,
                  double delta);

/// u x k matrix of 1.0 for RoIs too sparse for any configured k.
RapidMatrix rapid_padding(std::span<const PointIndex> subset, std::size_t k);

}  // namespace rapid
