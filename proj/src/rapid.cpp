#include "rapid/rapid.hpp"

#include "rapid/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace rapid {

const char* to_string(RangeBand band) noexcept {
  switch (band) {
    case RangeBand::Close: return "close";
    case RangeBand::Mid: return "mid";
    case RangeBand::Far: return "far";
  }
  return "?";
}

std::uint32_t RangeAwareConfig::k_for(RangeBand band) const {
  switch (band) {
    case RangeBand::Close: return k_close;
    case RangeBand::Mid: return k_mid;
    case RangeBand::Far: return k_far;
  }
  return k_far;
}

void RangeAwareConfig::validate() const {
  if (!(close_mid_edge > 0.0) || !(mid_far_edge > close_mid_edge)) {
    throw Error(ErrorCode::InvalidArgument, "band edges must satisfy 0 < close/mid < mid/far");
  }
  if (k_close < 1 || k_mid < 1 || k_far < 1) {
    throw Error(ErrorCode::InvalidArgument, "every band k must be >= 1");
  }
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be > 0");
}

RangeBand band_of(double range, const RangeAwareConfig& config) {
  if (range < config.close_mid_edge) return RangeBand::Close;
  if (range < config.mid_far_edge) return RangeBand::Mid;
  return RangeBand::Far;
}

std::uint32_t select_k(const Point3& point, const RangeAwareConfig& config) {
  return config.k_for(band_of(range_of(point), config));
}

double reflectivity_map(double r, const ReflectivityScale& scale) {
  if (scale.r_max == scale.r_min) return scale.d_min;
  return (r - scale.r_min) / (scale.r_max - scale.r_min) * (scale.d_max - scale.d_min) +
         scale.d_min;
}

double rho(const Point3& p_j, const Point3& p_l, double r_j, double r_l,
           const ReflectivityScale& scale) {
  const double w = reflectivity_map(r_j, scale) - reflectivity_map(r_l, scale);
  return std::sqrt((p_j - p_l).squaredNorm() + w * w);
}

ReflectivityScale compute_scale(std::span<const PointIndex> subset, const PointCloud& cloud,
                                std::span<const NeighborList> neighbors) {
  std::size_t pairs = 0;
  ReflectivityScale s;
  s.d_min = std::numeric_limits<double>::infinity();
  s.d_max = -std::numeric_limits<double>::infinity();
  for (const NeighborList& list : neighbors) {
    const Point3& a = cloud.point(list.anchor);
    for (PointIndex n : list.neighbors) {
      const double d = (a - cloud.point(n)).norm();
      s.d_min = std::min(s.d_min, d);
      s.d_max = std::max(s.d_max, d);
      ++pairs;
    }
  }
  if (pairs == 0 || subset.empty()) {
    throw Error(ErrorCode::InsufficientPoints, "scale needs at least one neighbor pair");
  }
  s.r_min = std::numeric_limits<double>::infinity();
  s.r_max = -std::numeric_limits<double>::infinity();
  for (PointIndex i : subset) {
    s.r_min = std::min(s.r_min, cloud.remission(i));
    s.r_max = std::max(s.r_max, cloud.remission(i));
  }
  return s;
}

NeighborStage rapid_neighbors(std::span<const PointIndex> subset, const PointCloud& cloud,
                              std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  std::vector<PointIndex> sorted(subset.begin(), subset.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.size() < k + 1) {
    throw Error(ErrorCode::InsufficientPoints,
                "RoI of " + std::to_string(sorted.size()) + " points cannot host k=" +
                    std::to_string(k));
  }

  // Work in RoI-local indices; ascending local order matches ascending cloud
  // order, so the tie-break rule carries over.
  const std::size_t u = sorted.size();
  std::vector<Point3> local(u);
  std::vector<PointIndex> ids(u);
  for (std::size_t i = 0; i < u; ++i) {
    local[i] = cloud.point(sorted[i]);
    ids[i] = PointIndex(i);
  }
  const auto to_global = [&](std::vector<NeighborList>& lists) {
    for (NeighborList& list : lists) {
      list.anchor = sorted[list.anchor];
      for (PointIndex& n : list.neighbors) n = sorted[n];
    }
  };

  std::vector<NeighborList> coordinate = knn_indexed(ids, DistanceMetric(local), k);
  to_global(coordinate);

  NeighborStage stage;
  stage.scale = compute_scale(sorted, cloud, coordinate);

  std::vector<double> mapped(u);
  for (std::size_t i = 0; i < u; ++i) {
    mapped[i] = reflectivity_map(cloud.remission(sorted[i]), stage.scale);
  }
  stage.rows = knn_indexed(ids, DistanceMetric(local, mapped), k);
  to_global(stage.rows);
  return stage;
}

RapidMatrix rapid_normalize(const NeighborStage& stage, std::size_t k, double delta) {
  RapidMatrix m;
  m.k = std::uint32_t(k);
  m.scale = stage.scale;
  m.delta = delta;
  const std::size_t u = stage.rows.size();
  m.anchors.reserve(u);
  m.raw.reserve(u * k);
  for (const NeighborList& list : stage.rows) {
    m.anchors.push_back(list.anchor);
    m.raw.insert(m.raw.end(), list.distances.begin(), list.distances.end());
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : m.raw) {
    if (v <= delta) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const bool any_survivor = lo <= hi;
  m.norm_min = any_survivor ? lo : 0.0;
  m.norm_max = any_survivor ? hi : 0.0;
  const double span = m.norm_max - m.norm_min;

  m.values.resize(m.raw.size());
  for (std::size_t i = 0; i < m.raw.size(); ++i) {
    const double v = m.raw[i];
    if (!(v <= delta)) {
      m.values[i] = 1.0;
      ++m.outliers;
    } else if (span > 0.0) {
      m.values[i] = std::clamp((v - m.norm_min) / span, 0.0, 1.0);
    } else {
      m.values[i] = 0.0;
    }
  }
  return m;
}

void rapid_sort(RapidMatrix& m) {
  const std::size_t u = m.rows();
  const std::size_t k = m.k;
  std::vector<std::pair<double, double>> cells(k);
  for (std::size_t r = 0; r < u; ++r) {
    for (std::size_t c = 0; c < k; ++c) cells[c] = {m.values[r * k + c], m.raw[r * k + c]};
    std::sort(cells.begin(), cells.end());
    for (std::size_t c = 0; c < k; ++c) {
      m.values[r * k + c] = cells[c].first;
      m.raw[r * k + c] = cells[c].second;
    }
  }

  std::vector<std::size_t> order(u);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto row_less = [&](std::size_t a, std::size_t b) {
    const auto va = m.values.begin() + std::ptrdiff_t(a * k);
    const auto vb = m.values.begin() + std::ptrdiff_t(b * k);
    if (!std::equal(va, va + std::ptrdiff_t(k), vb)) {
      return std::lexicographical_compare(va, va + std::ptrdiff_t(k), vb, vb + std::ptrdiff_t(k));
    }
    const auto ra = m.raw.begin() + std::ptrdiff_t(a * k);
    const auto rb = m.raw.begin() + std::ptrdiff_t(b * k);
    if (!std::equal(ra, ra + std::ptrdiff_t(k), rb)) {
      return std::lexicographical_compare(ra, ra + std::ptrdiff_t(k), rb, rb + std::ptrdiff_t(k));
    }
    return m.anchors[a] < m.anchors[b];
  };
  std::sort(order.begin(), order.end(), row_less);

  std::vector<PointIndex> anchors(u);
  std::vector<double> values(u * k), raw(u * k);
  for (std::size_t i = 0; i < u; ++i) {
    anchors[i] = m.anchors[order[i]];
    std::copy_n(m.values.begin() + std::ptrdiff_t(order[i] * k), k,
                values.begin() + std::ptrdiff_t(i * k));
    std::copy_n(m.raw.begin() + std::ptrdiff_t(order[i] * k), k,
                raw.begin() + std::ptrdiff_t(i * k));
  }
  m.anchors = std::move(anchors);
  m.values = std::move(values);
  m.raw = std::move(raw);
}

RapidMatrix rapid(std::span<const PointIndex> subset, const PointCloud& cloud, std::size_t k,
                  double delta) {
  RapidMatrix m = rapid_normalize(rapid_neighbors(subset, cloud, k), k, delta);
  rapid_sort(m);
  return m;
}

RapidMatrix rapid_padding(std::span<const PointIndex> subset, std::size_t k) {
  RapidMatrix m;
  m.k = std::uint32_t(k);
  m.padded = true;
  m.anchors.assign(subset.begin(), subset.end());
  std::sort(m.anchors.begin(), m.anchors.end());
  m.values.assign(m.anchors.size() * k, 1.0);
  m.raw.assign(m.anchors.size() * k, std::numeric_limits<double>::infinity());
  m.outliers = std::uint32_t(m.values.size());
  return m;
}

}  // namespace rapid
