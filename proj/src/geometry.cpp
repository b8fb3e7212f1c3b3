#include "rapid/geometry.hpp"

#include "rapid/error.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>

namespace rapid {

RigidTransform RigidTransform::from_axis_angle(const Eigen::Vector3d& axis, double angle,
                                               const Eigen::Vector3d& translation) {
  RigidTransform t;
  t.rotation = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
  t.translation = translation;
  return t;
}

bool RigidTransform::is_rigid(double tol) const {
  const Eigen::Matrix3d gram = rotation.transpose() * rotation;
  return (gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(rotation.determinant() - 1.0) <= tol && translation.allFinite();
}

RigidTransform random_rigid_transform(std::mt19937_64& rng, double max_translation) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> shift(-max_translation, max_translation);
  Eigen::Quaterniond q(normal(rng), normal(rng), normal(rng), normal(rng));
  q.normalize();
  RigidTransform t;
  t.rotation = q.toRotationMatrix();
  t.translation = Eigen::Vector3d(shift(rng), shift(rng), shift(rng));
  return t;
}

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& transform) {
  if (!transform.is_rigid()) {
    throw Error(ErrorCode::InvalidArgument, "transform is not a rigid motion");
  }
  return apply_affine(cloud, transform.rotation, transform.translation);
}

PointCloud apply_affine(const PointCloud& cloud, const Eigen::Matrix3d& linear,
                        const Eigen::Vector3d& translation) {
  std::vector<Point3> out;
  out.reserve(cloud.size());
  for (const Point3& p : cloud.points()) out.push_back(linear * p + translation);
  return cloud.with_points(std::move(out));
}

namespace {

struct Candidate {
  double distance;
  PointIndex index;
  bool operator<(const Candidate& o) const {
    return distance < o.distance || (distance == o.distance && index < o.index);
  }
};

/// Sorted bounded buffer of the k best candidates seen so far.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) { items_.reserve(k + 1); }

  void offer(Candidate c) {
    if (items_.size() == k_) {
      if (!(c < items_.back())) return;
      items_.back() = c;
    } else {
      items_.push_back(c);
    }
    for (std::size_t i = items_.size() - 1; i > 0 && items_[i] < items_[i - 1]; --i) {
      std::swap(items_[i], items_[i - 1]);
    }
  }

  bool full() const { return items_.size() == k_; }
  double worst() const { return items_.back().distance; }
  void clear() { items_.clear(); }
  const std::vector<Candidate>& items() const { return items_; }

 private:
  std::size_t k_;
  std::vector<Candidate> items_;
};

NeighborList to_list(PointIndex anchor, const TopK& top) {
  NeighborList list;
  list.anchor = anchor;
  list.neighbors.reserve(top.items().size());
  list.distances.reserve(top.items().size());
  for (const Candidate& c : top.items()) {
    list.neighbors.push_back(c.index);
    list.distances.push_back(c.distance);
  }
  return list;
}

void check_subset(std::span<const PointIndex> subset, std::size_t k) {
  if (subset.size() < k + 1) {
    throw Error(ErrorCode::InsufficientPoints,
                "k-NN with k=" + std::to_string(k) + " needs at least " +
                    std::to_string(k + 1) + " points, got " +
                    std::to_string(subset.size()));
  }
}

void brute_search(PointIndex anchor, std::span<const PointIndex> pool,
                  const DistanceMetric& metric, TopK& top) {
  for (PointIndex q : pool) {
    if (q != anchor) top.offer({metric(anchor, q), q});
  }
}

using CellCoord = Eigen::Matrix<std::int64_t, 3, 1>;

/// Uniform hash grid over a fixed member set; members are bucketed in
/// ascending cell-key order.
class SpatialGrid {
 public:
  SpatialGrid(std::span<const PointIndex> members, std::span<const Point3> points,
              double cell_size)
      : points_(points) {
    Point3 lo = Point3::Constant(std::numeric_limits<double>::infinity());
    Point3 hi = -lo;
    for (PointIndex m : members) {
      lo = lo.cwiseMin(points[m]);
      hi = hi.cwiseMax(points[m]);
    }
    origin_ = lo;
    const double extent = (hi - lo).maxCoeff();
    constexpr double kMaxCells = double((1 << 20) - 2);
    cell_ = std::max(cell_size, extent / kMaxCells);
    if (!(cell_ > 0.0)) cell_ = 1.0;
    max_abs_ = std::max(lo.cwiseAbs().maxCoeff(), hi.cwiseAbs().maxCoeff());

    std::vector<std::pair<std::uint64_t, PointIndex>> keyed;
    keyed.reserve(members.size());
    lo_cell_ = CellCoord::Constant(std::numeric_limits<std::int64_t>::max());
    hi_cell_ = CellCoord::Constant(std::numeric_limits<std::int64_t>::min());
    for (PointIndex m : members) {
      const CellCoord c = cell_of(points[m]);
      lo_cell_ = lo_cell_.cwiseMin(c);
      hi_cell_ = hi_cell_.cwiseMax(c);
      keyed.emplace_back(pack(c), m);
    }
    std::sort(keyed.begin(), keyed.end());
    sorted_.reserve(keyed.size());
    for (std::size_t i = 0; i < keyed.size();) {
      std::size_t j = i;
      while (j < keyed.size() && keyed[j].first == keyed[i].first) {
        sorted_.push_back(keyed[j].second);
        ++j;
      }
      buckets_.emplace(keyed[i].first, std::make_pair(std::uint32_t(i), std::uint32_t(j - i)));
      i = j;
    }
  }

  CellCoord cell_of(const Point3& p) const {
    const Point3 scaled = ((p - origin_) / cell_).array().floor();
    return scaled.cast<std::int64_t>();
  }

  double cell_size() const { return cell_; }
  std::size_t occupied() const { return buckets_.size(); }
  std::span<const PointIndex> members() const { return sorted_; }

  /// Lower bound on the distance from a point in `center`'s cell to any
  /// member outside the block of Chebyshev radius `radius`.
  double outside_bound(std::int64_t radius) const {
    const double slack = 1e-9 * cell_ + 8.0 * std::numeric_limits<double>::epsilon() *
                                            (max_abs_ + cell_);
    return double(radius) * cell_ - slack;
  }

  /// Smallest radius whose block around `center` reaches an occupied extent.
  std::int64_t first_radius(const CellCoord& center) const {
    const CellCoord below = (lo_cell_ - center).cwiseMax(0);
    const CellCoord above = (center - hi_cell_).cwiseMax(0);
    return std::max(below.maxCoeff(), above.maxCoeff());
  }

  /// Cells of the radius-r shell that lie inside the occupied extent.
  double shell_cells(const CellCoord& center, std::int64_t radius) const {
    const auto block = [&](std::int64_t r) {
      if (r < 0) return 0.0;
      double v = 1.0;
      for (int a = 0; a < 3; ++a) {
        const std::int64_t from = std::max(center[a] - r, lo_cell_[a]);
        const std::int64_t to = std::min(center[a] + r, hi_cell_[a]);
        if (to < from) return 0.0;
        v *= double(to - from + 1);
      }
      return v;
    };
    return block(radius) - block(radius - 1);
  }

  bool covers_all(const CellCoord& center, std::int64_t radius) const {
    return ((center.array() - radius) <= lo_cell_.array()).all() &&
           ((center.array() + radius) >= hi_cell_.array()).all();
  }

  template <typename Fn>
  void visit_shell(const CellCoord& center, std::int64_t radius, Fn&& fn) const {
    const CellCoord from = (center.array() - radius).max(lo_cell_.array());
    const CellCoord to = (center.array() + radius).min(hi_cell_.array());
    for (std::int64_t x = from.x(); x <= to.x(); ++x) {
      const bool x_edge = std::abs(x - center.x()) == radius;
      for (std::int64_t y = from.y(); y <= to.y(); ++y) {
        const bool xy_edge = x_edge || std::abs(y - center.y()) == radius;
        for (std::int64_t z = from.z(); z <= to.z(); ++z) {
          if (!xy_edge && std::abs(z - center.z()) != radius) {
            // Interior of this column: jump straight to the far face.
            if (z < center.z() + radius) z = center.z() + radius - 1;
            continue;
          }
          const auto it = buckets_.find(pack(CellCoord(x, y, z)));
          if (it == buckets_.end()) continue;
          const auto [start, count] = it->second;
          for (std::uint32_t i = start; i < start + count; ++i) fn(sorted_[i]);
        }
      }
    }
  }

 private:
  static std::uint64_t pack(const CellCoord& c) {
    // Offset into the positive range; occupied cells satisfy lo <= c <= hi.
    constexpr std::int64_t bias = std::int64_t(1) << 20;
    const auto u = [&](std::int64_t v) { return std::uint64_t(v + bias) & 0x1FFFFF; };
    return u(c.x()) | (u(c.y()) << 21) | (u(c.z()) << 42);
  }

  std::span<const Point3> points_;
  Point3 origin_;
  double cell_ = 1.0;
  double max_abs_ = 0.0;
  CellCoord lo_cell_, hi_cell_;
  std::vector<PointIndex> sorted_;
  std::unordered_map<std::uint64_t, std::pair<std::uint32_t, std::uint32_t>> buckets_;
};

/// Cell edge from the median nearest-neighbor spacing of a strided sample,
/// widened with k so a typical query finishes within the first shell or two.
double choose_cell_size(std::span<const PointIndex> subset, std::span<const Point3> points,
                        std::size_t k) {
  const std::size_t samples = std::min<std::size_t>(subset.size(), 64);
  const std::size_t stride = subset.size() / samples;
  std::vector<double> spacing;
  spacing.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    const PointIndex a = subset[s * stride];
    double best = std::numeric_limits<double>::infinity();
    for (PointIndex q : subset) {
      if (q != a) best = std::min(best, (points[a] - points[q]).norm());
    }
    if (best > 0.0 && std::isfinite(best)) spacing.push_back(best);
  }
  if (spacing.empty()) return 1.0;
  auto mid = spacing.begin() + spacing.size() / 2;
  std::nth_element(spacing.begin(), mid, spacing.end());
  return *mid * std::max(1.0, double(k) / 3.0);
}

void grid_search(const SpatialGrid& grid, const DistanceMetric& metric, PointIndex anchor,
                 const Point3& at, TopK& top) {
  const CellCoord center = grid.cell_of(at);
  const std::size_t occupied = grid.occupied();
  const std::int64_t start = grid.first_radius(center);
  for (std::int64_t radius = start;; ++radius) {
    if (radius > start) {
      if (grid.shell_cells(center, radius) > double(occupied)) {
        // Sparse neighborhood: scanning every member is cheaper than the shell.
        top.clear();
        brute_search(anchor, grid.members(), metric, top);
        return;
      }
    }
    grid.visit_shell(center, radius, [&](PointIndex q) {
      if (q != anchor) top.offer({metric(anchor, q), q});
    });
    if (grid.covers_all(center, radius)) return;
    if (top.full() && top.worst() < grid.outside_bound(radius)) return;
  }
}

/// Static k-d tree over a target set, for nearest queries from points that
/// may lie far from every target.
class KdTree {
 public:
  KdTree(std::span<const PointIndex> targets, std::span<const Point3> points)
      : points_(points), order_(targets.begin(), targets.end()) {
    nodes_.reserve(2 * order_.size() / kLeaf + 2);
    build(0, order_.size());
  }

  void nearest(PointIndex query, const DistanceMetric& metric, TopK& top) const {
    search(0, query, points_[query], metric, top);
  }

 private:
  static constexpr std::size_t kLeaf = 16;

  struct Node {
    std::size_t begin, end;
    int axis = -1;  // -1 for a leaf
    double split = 0.0;
    std::size_t left = 0, right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back({begin, end});
    if (end - begin <= kLeaf) return id;
    Point3 lo = points_[order_[begin]], hi = lo;
    for (std::size_t i = begin + 1; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + std::ptrdiff_t(begin), order_.begin() + std::ptrdiff_t(mid),
                     order_.begin() + std::ptrdiff_t(end), [&](PointIndex a, PointIndex b) {
                       return points_[a][axis] < points_[b][axis];
                     });
    const double split = points_[order_[mid]][axis];
    const std::size_t left = build(begin, mid);
    const std::size_t right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void search(std::size_t id, PointIndex query, const Point3& at, const DistanceMetric& metric,
              TopK& top) const {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        if (order_[i] != query) top.offer({metric(query, order_[i]), order_[i]});
      }
      return;
    }
    const double gap = at[n.axis] - n.split;
    const std::size_t near = gap < 0.0 ? n.left : n.right;
    const std::size_t far = gap < 0.0 ? n.right : n.left;
    search(near, query, at, metric, top);
    // Every point across the plane is at least |gap| away; the slack keeps
    // ties and rounding on the safe side.
    const double bound = std::abs(gap) * (1.0 - 1e-12) -
                         4.0 * std::numeric_limits<double>::epsilon() * std::abs(n.split);
    if (!top.full() || bound <= top.worst()) search(far, query, at, metric, top);
  }

  std::span<const Point3> points_;
  std::vector<PointIndex> order_;
  std::vector<Node> nodes_;
};

}  // namespace

std::vector<NeighborList> knn_brute(std::span<const PointIndex> subset,
                                    const DistanceMetric& metric, std::size_t k) {
  check_subset(subset, k);
  std::vector<NeighborList> out;
  out.reserve(subset.size());
  std::vector<Candidate> all;
  all.reserve(subset.size());
  for (PointIndex anchor : subset) {
    all.clear();
    for (PointIndex q : subset) {
      if (q != anchor) all.push_back({metric(anchor, q), q});
    }
    std::partial_sort(all.begin(), all.begin() + std::ptrdiff_t(k), all.end());
    NeighborList list;
    list.anchor = anchor;
    for (std::size_t i = 0; i < k; ++i) {
      list.neighbors.push_back(all[i].index);
      list.distances.push_back(all[i].distance);
    }
    out.push_back(std::move(list));
  }
  return out;
}

std::vector<NeighborList> knn_indexed(std::span<const PointIndex> subset,
                                      const DistanceMetric& metric, std::size_t k) {
  check_subset(subset, k);
  if (subset.size() < kBruteForceCutoff) return knn_brute(subset, metric, k);

  const auto points = metric.points();
  const SpatialGrid grid(subset, points, choose_cell_size(subset, points, k));
  std::vector<NeighborList> out;
  out.reserve(subset.size());
  TopK top(k);
  for (PointIndex anchor : subset) {
    top.clear();
    grid_search(grid, metric, anchor, points[anchor], top);
    out.push_back(to_list(anchor, top));
  }
  return out;
}

std::vector<NearestHit> nearest_in(std::span<const PointIndex> queries,
                                   std::span<const PointIndex> targets,
                                   const DistanceMetric& metric) {
  std::vector<NearestHit> out(queries.size());
  if (targets.empty()) return out;
  const auto points = metric.points();
  TopK top(1);
  const auto fill = [&](std::size_t i) {
    if (!top.items().empty()) {
      out[i] = {top.items().front().index, top.items().front().distance, true};
    }
  };
  if (targets.size() < kBruteForceCutoff) {
    for (std::size_t i = 0; i < queries.size(); ++i) {
      top.clear();
      brute_search(queries[i], targets, metric, top);
      fill(i);
    }
    return out;
  }
  const KdTree tree(targets, points);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    top.clear();
    tree.nearest(queries[i], metric, top);
    fill(i);
  }
  return out;
}

}  // namespace rapid
