#pragma once

#include "rapid/point_cloud.hpp"

#include <Eigen/Core>

#include <cmath>
#include <random>
#include <span>
#include <vector>

namespace rapid {

struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }
  /// Rotation by `angle` radians about `axis` (need not be unit length).
  static RigidTransform from_axis_angle(const Eigen::Vector3d& axis, double angle,
                                        const Eigen::Vector3d& translation);

  Point3 apply(const Point3& p) const { return rotation * p + translation; }
  /// True when R^T R = I and det R = +1 within tol.
  bool is_rigid(double tol = 1e-12) const;
};

/// Uniformly distributed rotation and a translation with components in
/// [-max_translation, max_translation].
RigidTransform random_rigid_transform(std::mt19937_64& rng, double max_translation);

/// Maps every coordinate through T; other channels are untouched.
/// Throws InvalidArgument if T is not rigid.
PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& transform);

/// Same mapping without the rigidity check (negative-control harness).
PointCloud apply_affine(const PointCloud& cloud, const Eigen::Matrix3d& linear,
                        const Eigen::Vector3d& translation);

inline double range_of(const Point3& p) { return p.norm(); }

/// Euclidean distance over (x, y, z, w) where w is an optional per-point
/// channel. With no channel this is the plain coordinate distance. Either way
/// the value never falls below the coordinate distance, which is what lets
/// the grid index prune cells exactly.
class DistanceMetric {
 public:
  explicit DistanceMetric(std::span<const Point3> points) : points_(points) {}
  DistanceMetric(std::span<const Point3> points, std::span<const double> channel)
      : points_(points), channel_(channel) {}

  double operator()(PointIndex a, PointIndex b) const {
    const Point3 d = points_[a] - points_[b];
    double sq = d.squaredNorm();
    if (!channel_.empty()) {
      const double w = channel_[a] - channel_[b];
      sq += w * w;
    }
    return std::sqrt(sq);
  }

  std::span<const Point3> points() const noexcept { return points_; }
  bool lifted() const noexcept { return !channel_.empty(); }

 private:
  std::span<const Point3> points_;
  std::span<const double> channel_;
};

/// k nearest neighbors of one anchor, ascending by (distance, point index).
struct NeighborList {
  PointIndex anchor = 0;
  std::vector<PointIndex> neighbors;
  std::vector<double> distances;
};

/// Exhaustive k-NN of every subset member against the rest of the subset.
/// Ties break by ascending point index. Output follows subset order.
/// Throws InsufficientPoints when |subset| < k + 1.
std::vector<NeighborList> knn_brute(std::span<const PointIndex> subset,
                                    const DistanceMetric& metric, std::size_t k);

/// Hash-grid accelerated k-NN. Returns exactly what knn_brute returns.
std::vector<NeighborList> knn_indexed(std::span<const PointIndex> subset,
                                      const DistanceMetric& metric, std::size_t k);

/// Subsets smaller than this go straight to knn_brute.
inline constexpr std::size_t kBruteForceCutoff = 64;

/// Nearest member of `targets` for each query point (a point index into the
/// same metric), excluding the query itself. Ties break by index. Returns the
/// target index, or no value when `targets` has no eligible member.
struct NearestHit {
  PointIndex index = 0;
  double distance = 0.0;
  bool found = false;
};
std::vector<NearestHit> nearest_in(std::span<const PointIndex> queries,
                                   std::span<const PointIndex> targets,
                                   const DistanceMetric& metric);

}  // namespace rapid
