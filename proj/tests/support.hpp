#pragma once

#include "rapid/point_cloud.hpp"
#include "rapid/scene_io.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

namespace rapid::test {

/// Uniform points in a cube of half-width `extent`, remission in [0, 1].
inline PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, double extent = 5.0) {
  std::uniform_real_distribution<double> pos(-extent, extent), refl(0.0, 1.0);
  std::vector<Point3> pts(n);
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    pts[i] = Point3(pos(rng), pos(rng), pos(rng));
    r[i] = refl(rng);
  }
  return PointCloud(std::move(pts), std::move(r));
}

/// Integer lattice points from a small box: many equal distances and some
/// coincident points, which exercises the index tie-break.
inline PointCloud lattice_cloud(std::mt19937_64& rng, std::size_t n, int side = 4) {
  std::uniform_int_distribution<int> pos(0, side - 1), refl(0, 3);
  std::vector<Point3> pts(n);
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    pts[i] = Point3(pos(rng), pos(rng), pos(rng));
    r[i] = 0.25 * refl(rng);
  }
  return PointCloud(std::move(pts), std::move(r));
}

inline std::vector<PointIndex> all_indices(std::size_t n) {
  std::vector<PointIndex> idx(n);
  std::iota(idx.begin(), idx.end(), PointIndex(0));
  return idx;
}

inline std::vector<PointIndex> random_subset(std::mt19937_64& rng, std::size_t n,
                                             std::size_t size) {
  auto idx = all_indices(n);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(size);
  return idx;
}

/// A 16-beam street scene, small enough for property loops.
inline PointCloud small_scene(std::uint64_t seed, double noise = 0.01) {
  const auto sensor = SensorGeometry::from_fov(16, 0.05, -0.4, 256);
  return synthesize_scene(street_scene(seed, sensor, noise));
}

}  // namespace rapid::test
