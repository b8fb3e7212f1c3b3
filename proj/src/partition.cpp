#include "rapid/partition.hpp"

#include "rapid/error.hpp"
#include "rapid/parallel.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <string>

namespace rapid {

namespace {

class Stopwatch {
 public:
  explicit Stopwatch(double* sink) : sink_(sink), start_(std::chrono::steady_clock::now()) {}
  ~Stopwatch() {
    if (sink_) {
      *sink_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
  }
  Stopwatch(const Stopwatch&) = delete;
  Stopwatch& operator=(const Stopwatch&) = delete;

 private:
  double* sink_;
  std::chrono::steady_clock::time_point start_;
};

double* stage(const ExtractOptions& o, double StageTimes::*field) {
  return o.times ? &(o.times->*field) : nullptr;
}

}  // namespace

CylindricalBin cylindrical_bin(const Point3& p, const SensorGeometry& geometry) {
  const double norm = p.norm();
  if (norm == 0.0) {
    throw Error(ErrorCode::UndefinedAngle, "cylindrical angles are undefined at the origin");
  }
  CylindricalBin bin;
  bin.theta = std::int64_t(std::floor(std::atan2(p.y(), p.x()) / geometry.delta_theta));
  bin.phi = std::int64_t(std::floor(std::asin(std::clamp(p.z() / norm, -1.0, 1.0)) /
                                    geometry.delta_phi));
  return bin;
}

std::uint32_t ring_of(const Point3& p, const SensorGeometry& geometry) {
  const double norm = p.norm();
  if (norm == 0.0) return 0;
  const double elevation = std::asin(std::clamp(p.z() / norm, -1.0, 1.0));
  const double bin = std::floor((elevation - geometry.fov_down) / geometry.delta_phi);
  return std::uint32_t(std::clamp(bin, 0.0, double(geometry.beam_count - 1)));
}

RingPartition partition_rings(const PointCloud& cloud, const SensorGeometry& geometry) {
  geometry.validate();
  RingPartition part;
  part.rings.resize(geometry.beam_count);
  part.ring_of.resize(cloud.size());
  const auto native = cloud.ring();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    std::uint32_t r;
    if (cloud.has_ring()) {
      r = native[i];
      if (r >= geometry.beam_count) {
        throw Error(ErrorCode::Contract, "point " + std::to_string(i) + " has ring " +
                                             std::to_string(r) + " >= beam count " +
                                             std::to_string(geometry.beam_count));
      }
    } else {
      r = ring_of(cloud.point(i), geometry);
    }
    part.ring_of[i] = r;
    part.rings[r].push_back(PointIndex(i));
  }
  return part;
}

ClassPartition partition_classes(const PointCloud& cloud) {
  if (!cloud.has_labels()) {
    throw Error(ErrorCode::LabelsRequired, "intra-class features need per-point labels");
  }
  std::map<Label, std::vector<PointIndex>> by_class;
  const auto labels = cloud.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(PointIndex(i));
  ClassPartition part;
  for (auto& [label, members] : by_class) {
    part.classes.push_back(label);
    part.members.push_back(std::move(members));
  }
  return part;
}

std::vector<RegionOfInterest> split_by_band(std::span<const std::vector<PointIndex>> groups,
                                            std::span<const std::int64_t> group_ids,
                                            const PointCloud& cloud,
                                            const RangeAwareConfig& config) {
  config.validate();
  std::vector<RegionOfInterest> rois;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::array<std::vector<PointIndex>, kBandCount> bands;
    for (PointIndex i : groups[g]) {
      bands[std::size_t(band_of(range_of(cloud.point(i)), config))].push_back(i);
    }
    for (int b = 0; b < kBandCount; ++b) {
      if (bands[std::size_t(b)].empty()) continue;
      RegionOfInterest roi;
      roi.group = group_ids[g];
      roi.band = RangeBand(b);
      roi.roi_id = make_roi_id(roi.group, roi.band);
      roi.k = config.k_for(roi.band);
      roi.points = std::move(bands[std::size_t(b)]);
      rois.push_back(std::move(roi));
    }
  }
  return rois;
}

std::vector<RegionOfInterest> plan_ring_rois(const PointCloud& cloud,
                                             const SensorGeometry& geometry,
                                             const RangeAwareConfig& config) {
  RingPartition part = partition_rings(cloud, geometry);
  std::vector<std::int64_t> ids(part.rings.size());
  for (std::size_t b = 0; b < ids.size(); ++b) ids[b] = std::int64_t(b);
  return split_by_band(part.rings, ids, cloud, config);
}

std::vector<RegionOfInterest> plan_class_rois(const PointCloud& cloud,
                                              const RangeAwareConfig& config) {
  ClassPartition part = partition_classes(cloud);
  std::vector<std::int64_t> ids(part.classes.begin(), part.classes.end());
  return split_by_band(part.members, ids, cloud, config);
}

std::uint32_t fallback_k(std::size_t points, std::uint32_t k, const RangeAwareConfig& config) {
  std::vector<std::uint32_t> chain{k};
  for (std::uint32_t c : {config.k_close, config.k_mid, config.k_far}) {
    if (c < k) chain.push_back(c);
  }
  std::sort(chain.begin(), chain.end(), std::greater<>());
  for (std::uint32_t c : chain) {
    if (points >= std::size_t(c) + 1) return c;
  }
  return 0;
}

PointwiseFeatureSet scatter_rows(std::span<const RapidMatrix> matrices, std::size_t points,
                                 std::uint32_t width) {
  PointwiseFeatureSet out;
  out.width = width;
  out.values.assign(points * width, 1.0F);
  out.roi_of.assign(points, -1);
  out.valid_width.assign(points, 0);
  for (const RapidMatrix& m : matrices) {
    if (m.k > width) {
      throw Error(ErrorCode::Contract, "matrix width " + std::to_string(m.k) +
                                           " exceeds feature width " + std::to_string(width));
    }
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const PointIndex a = m.anchors[r];
      if (a >= points) throw Error(ErrorCode::Contract, "anchor outside the scan");
      out.roi_of[a] = m.roi_id;
      out.valid_width[a] = m.padded ? 0 : m.k;
      if (m.padded) continue;
      for (std::size_t c = 0; c < m.k; ++c) {
        out.values[std::size_t(a) * width + c] = float(m.at(r, c));
      }
    }
  }
  return out;
}

FeatureExtraction extract(const PointCloud& cloud, std::span<const RegionOfInterest> rois,
                          const RangeAwareConfig& config, const ExtractOptions& options) {
  config.validate();
  const std::size_t n = rois.size();
  std::vector<std::uint32_t> used(n);
  for (std::size_t i = 0; i < n; ++i) used[i] = fallback_k(rois[i].points.size(), rois[i].k, config);

  std::vector<NeighborStage> stages(n);
  {
    Stopwatch watch(stage(options, &StageTimes::knn));
    parallel_for(n, options.workers, [&](std::size_t i) {
      if (used[i] > 0) stages[i] = rapid_neighbors(rois[i].points, cloud, used[i]);
    });
  }

  FeatureExtraction out;
  out.matrices.resize(n);
  {
    Stopwatch watch(stage(options, &StageTimes::normalize));
    parallel_for(n, options.workers, [&](std::size_t i) {
      if (used[i] > 0) {
        out.matrices[i] = rapid_normalize(stages[i], used[i], config.delta);
      } else {
        out.matrices[i] = rapid_padding(rois[i].points, rois[i].k);
      }
      stages[i] = {};
      out.matrices[i].roi_id = rois[i].roi_id;
      out.matrices[i].group = rois[i].group;
      out.matrices[i].band = rois[i].band;
    });
  }
  {
    Stopwatch watch(stage(options, &StageTimes::sort));
    parallel_for(n, options.workers, [&](std::size_t i) {
      if (!out.matrices[i].padded) rapid_sort(out.matrices[i]);
    });
  }

  const std::uint32_t width = std::max({config.k_close, config.k_mid, config.k_far});
  out.pointwise = scatter_rows(out.matrices, cloud.size(), width);
  return out;
}

FeatureExtraction r_rapid(const PointCloud& cloud, const SensorGeometry& geometry,
                          const RangeAwareConfig& config, const ExtractOptions& options) {
  std::vector<RegionOfInterest> rois;
  {
    Stopwatch watch(stage(options, &StageTimes::partition));
    rois = plan_ring_rois(cloud, geometry, config);
  }
  return extract(cloud, rois, config, options);
}

FeatureExtraction c_rapid(const PointCloud& cloud, const RangeAwareConfig& config,
                          const ExtractOptions& options) {
  std::vector<RegionOfInterest> rois;
  {
    Stopwatch watch(stage(options, &StageTimes::partition));
    rois = plan_class_rois(cloud, config);
  }
  return extract(cloud, rois, config, options);
}

}  // namespace rapid
