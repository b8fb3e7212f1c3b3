// Acceptance run: one line per criterion, exit 1 if any line reads FAIL.
// Set RAPID_REAL_SCANS to a directory of KITTI .bin scans to include real
// data in the isometry check.

#include "commands.hpp"
#include "support.hpp"

#include "rapid/container.hpp"
#include "rapid/embed.hpp"
#include "rapid/error.hpp"
#include "rapid/fusion.hpp"
#include "rapid/geometry.hpp"
#include "rapid/metrics.hpp"
#include "rapid/partition.hpp"
#include "rapid/run_config.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <thread>

using namespace rapid;
namespace fs = std::filesystem;

namespace {

enum class Outcome { Pass, Fail, NotRun };

struct Verdict {
  Outcome outcome = Outcome::Pass;
  std::string detail;
};

int failures = 0;

void report(const char* id, const char* title, const std::function<Verdict()>& body,
            double budget_s = std::numeric_limits<double>::infinity()) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {Outcome::Fail, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (v.outcome == Outcome::Pass && s > budget_s) {
    v.outcome = Outcome::Fail;
    v.detail += " (over the time budget)";
  }
  const char* tag = v.outcome == Outcome::Pass ? "PASS" : v.outcome == Outcome::Fail ? "FAIL"
                                                                                    : "NOT RUN";
  if (v.outcome == Outcome::Fail) ++failures;
  std::printf("[%s] %s %s: %s [%.2fs]\n", tag, id, title, v.detail.c_str(), s);
  std::fflush(stdout);
}

Verdict verdict(bool ok, std::string detail) {
  return {ok ? Outcome::Pass : Outcome::Fail, std::move(detail)};
}

std::string fmt_e(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

/// Max |raw| gap and whether the anchor order and row layout match.
struct Comparison {
  double raw = 0.0;
  double values = 0.0;
  bool same_ranks = true;
};

Comparison compare(const std::vector<RapidMatrix>& a, const std::vector<RapidMatrix>& b) {
  Comparison c;
  if (a.size() != b.size()) return {INFINITY, INFINITY, false};
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].anchors != b[i].anchors || a[i].k != b[i].k || a[i].padded != b[i].padded) {
      c.same_ranks = false;
    }
    if (a[i].raw.size() != b[i].raw.size()) return {INFINITY, INFINITY, false};
    for (std::size_t j = 0; j < a[i].raw.size(); ++j) {
      if (!a[i].padded) c.raw = std::max(c.raw, std::abs(a[i].raw[j] - b[i].raw[j]));
      c.values = std::max(c.values, std::abs(a[i].values[j] - b[i].values[j]));
    }
  }
  return c;
}

const SensorGeometry kMidSensor = SensorGeometry::from_fov(32, 0.05, -0.4, 512);

Verdict isometry() {
  std::mt19937_64 rng(101);
  const RangeAwareConfig config;
  Comparison worst;
  int transforms = 0, scans = 0;
  const auto run = [&](const PointCloud& cloud, const SensorGeometry& g, int trials) {
    const auto rois = plan_ring_rois(cloud, g, config);
    const auto base = extract(cloud, rois, config).matrices;
    for (int t = 0; t < trials; ++t) {
      const auto moved = apply_transform(cloud, random_rigid_transform(rng, 200.0));
      const Comparison c = compare(base, extract(moved, rois, config).matrices);
      worst.raw = std::max(worst.raw, c.raw);
      worst.values = std::max(worst.values, c.values);
      worst.same_ranks = worst.same_ranks && c.same_ranks;
      ++transforms;
    }
    ++scans;
  };
  for (std::uint64_t s = 0; s < 20; ++s) {
    run(synthesize_scene(street_scene(s, kMidSensor, 0.02)), kMidSensor, 5);
  }
  const int synthetic = scans;
  int real = 0;
  if (const char* dir = std::getenv("RAPID_REAL_SCANS")) {
    std::vector<fs::path> bins;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() == ".bin") bins.push_back(e.path());
    }
    std::sort(bins.begin(), bins.end());
    for (std::size_t i = 0; i < bins.size() && i < 2; ++i, ++real) {
      run(load_kitti_scan(bins[i]), SensorGeometry::hdl64(), 3);
    }
  }
  const bool ok = worst.raw <= 1e-9 && worst.same_ranks && transforms >= 100;
  std::string detail = std::to_string(transforms) + " transforms over " +
                       std::to_string(synthetic) + " synthetic + " + std::to_string(real) +
                       " real scans, max raw deviation " + fmt_e(worst.raw) +
                       ", max normalized deviation " + fmt_e(worst.values) +
                       ", rank structure " + (worst.same_ranks ? "identical" : "DIFFERS");
  return verdict(ok, detail);
}

Verdict real_scan_leg() {
  const char* dir = std::getenv("RAPID_REAL_SCANS");
  if (!dir) return {Outcome::NotRun, "RAPID_REAL_SCANS not set; no real scans in this environment"};
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ".bin";
  if (n < 2) return {Outcome::NotRun, "fewer than 2 .bin scans in " + std::string(dir)};
  return {Outcome::Pass, "covered by C1 (" + std::to_string(n) + " scans found, 2 used)"};
}

Verdict permutation() {
  std::mt19937_64 rng(102);
  const auto g = SensorGeometry::from_fov(16, 0.05, -0.4, 256);
  const PointCloud cloud = test::small_scene(9);
  const auto base_fx = r_rapid(cloud, g, {});
  const auto base = encode_features(base_fx.matrices);
  int same = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    auto perm = test::all_indices(cloud.size());
    std::shuffle(perm.begin(), perm.end(), rng);
    auto fx = r_rapid(cloud.select(perm), g, {});
    bool raw_same = true;
    for (std::size_t i = 0; i < fx.matrices.size(); ++i) {
      for (auto& a : fx.matrices[i].anchors) a = perm[a];
      raw_same = raw_same && fx.matrices[i].raw == base_fx.matrices[i].raw &&
                 fx.matrices[i].values == base_fx.matrices[i].values;
    }
    same += raw_same && encode_features(fx.matrices) == base;
  }
  return verdict(same == trials, std::to_string(same) + "/" + std::to_string(trials) +
                                     " shuffles byte-identical (" +
                                     std::to_string(cloud.size()) + " points)");
}

Verdict reflectivity_affine() {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> a(1e-3, 1e3), b(-100.0, 100.0);
  const auto g = SensorGeometry::from_fov(16, 0.05, -0.4, 256);
  const PointCloud cloud = test::small_scene(10);
  const auto base = r_rapid(cloud, g, {}).matrices;
  Comparison worst;
  for (int t = 0; t < 50; ++t) {
    const double sa = a(rng), sb = b(rng);
    std::vector<double> r(cloud.remission().begin(), cloud.remission().end());
    for (double& v : r) v = sa * v + sb;
    const Comparison c = compare(base, r_rapid(cloud.with_remission(r), g, {}).matrices);
    worst.values = std::max(worst.values, c.values);
    worst.raw = std::max(worst.raw, c.raw);
    worst.same_ranks = worst.same_ranks && c.same_ranks;
  }
  return verdict(worst.values <= 1e-12 && worst.raw <= 1e-12,
                 "50 (a, b) pairs, max deviation normalized " + fmt_e(worst.values) + ", raw " +
                     fmt_e(worst.raw));
}

Verdict knn_oracle() {
  std::mt19937_64 rng(104);
  const std::size_t ks[] = {3, 5, 7, 10};
  int matched = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const std::size_t size = 10 + rng() % 1991;
    const std::size_t k = ks[t % 4];
    const PointCloud cloud = t % 3 == 0 ? test::lattice_cloud(rng, size, 3 + int(rng() % 10))
                                        : test::random_cloud(rng, size, 1.0 + double(rng() % 50));
    const auto subset = test::random_subset(rng, size, size);
    const bool lifted = t % 2 == 1;
    const DistanceMetric metric = lifted ? DistanceMetric(cloud.points(), cloud.remission())
                                         : DistanceMetric(cloud.points());
    const auto x = knn_indexed(subset, metric, k);
    const auto y = knn_brute(subset, metric, k);
    bool ok = x.size() == y.size();
    for (std::size_t i = 0; ok && i < x.size(); ++i) {
      ok = x[i].anchor == y[i].anchor && x[i].neighbors == y[i].neighbors &&
           x[i].distances == y[i].distances;
    }
    matched += ok;
  }
  return verdict(matched == trials, std::to_string(matched) + "/" + std::to_string(trials) +
                                        " subsets (sizes 10-2000, k in {3,5,7,10}) match exactly");
}

Verdict hand_example() {
  const PointCloud line({Point3(0, 0, 0), Point3(1, 0, 0), Point3(3, 0, 0)}, {0.4, 0.4, 0.4});
  const auto m = rapid::rapid(test::all_indices(3), line, 2, std::numeric_limits<double>::infinity());
  const std::vector<double> want{0.0, 0.5, 0.0, 1.0, 0.5, 1.0};
  return verdict(m.values == want, "rows (0,.5),(0,1),(.5,1) " +
                                       std::string(m.values == want ? "reproduced" : "differ"));
}

Verdict scatter_identities() {
  std::mt19937_64 rng(106);
  std::normal_distribution<double> n(0.0, 3.0);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst_sum = 0.0, worst_total = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t m = 1 + rng() % 500, d = 1 + rng() % 8, l = 1 + rng() % 5;
    std::vector<Point3> pts(m);
    for (auto& p : pts) p = Point3(u(rng), u(rng), u(rng));
    const VoxelGroups groups = voxelize(pts, 0.3 + 0.2 * double(t % 5));
    Matrix g{Eigen::Index(m), Eigen::Index(d)};
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = n(rng);
    const EncodeResult r = vsa_encode(g, random_weights(d, 1, l, rng()).outer, groups);
    for (const auto& members : groups.members) {
      for (std::size_t j = 0; j < l; ++j) {
        double s = 0.0;
        for (PointIndex i : members) s += r.attention(i, Eigen::Index(j));
        worst_sum = std::max(worst_sum, std::abs(s - 1.0));
      }
    }
    for (std::size_t j = 0; j < l; ++j) {
      for (std::size_t c = 0; c < d; ++c) {
        double h = 0.0, hv = 0.0;
        for (std::size_t i = 0; i < m; ++i) h += r.pointwise(i, j, c);
        for (std::size_t v = 0; v < r.voxelwise.dim0; ++v) hv += r.voxelwise(v, j, c);
        worst_total = std::max(worst_total, std::abs(h - hv));
      }
    }
  }
  return verdict(worst_sum <= 1e-12 && worst_total <= 1e-9,
                 "100 instances, max |group sum - 1| " + fmt_e(worst_sum) +
                     ", max channel total gap " + fmt_e(worst_total));
}

Verdict bottleneck_identity() {
  std::mt19937_64 rng(107);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t m = 100 + rng() % 400, d = 2 + rng() % 10, l = 1 + rng() % 6;
    std::vector<Point3> pts(m);
    for (auto& p : pts) p = Point3(u(rng), u(rng), u(rng));
    const VoxelGroups groups = voxelize(pts, 0.5);
    Matrix g{Eigen::Index(m), Eigen::Index(d)};
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = n(rng);
    const WeightSet w = identity_inner_weights(d, l, rng());
    const auto hv = vsa_encode(g, w.outer, groups).voxelwise;
    const auto out = inner_bottleneck(hv, w, groups).reconstructed;
    for (std::size_t i = 0; i < hv.data.size(); ++i) {
      worst = std::max(worst, std::abs(out.data[i] - hv.data[i]));
    }
  }
  return verdict(worst <= 1e-9, "20 instances, max |H^v_hat - H^v| " + fmt_e(worst));
}

double cosine(const Matrix& e, Eigen::Index a, Eigen::Index b) {
  const double na = e.row(a).norm(), nb = e.row(b).norm();
  return (na == 0 || nb == 0) ? 0.0 : e.row(a).dot(e.row(b)) / (na * nb);
}

Verdict loss_oracles() {
  std::mt19937_64 rng(108);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst = 0.0;
  int instances = 0;
  for (std::size_t m = 1; m <= 12; ++m) {
    for (int t = 0; t < 100; ++t, ++instances) {
      const std::size_t classes = 1 + rng() % 4, d = 1 + rng() % 4;
      std::vector<Label> labels(m);
      std::vector<Point3> pts(m);
      for (auto& c : labels) c = Label(rng() % classes);
      for (auto& p : pts) p = Point3(double(rng() % 3), double(rng() % 3), double(rng() % 2));
      Matrix e{Eigen::Index(m), Eigen::Index(d)};
      for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = n(rng);
      double total = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        std::size_t pos = m, neg = m;
        double dp = INFINITY, dn = INFINITY;
        for (std::size_t j = 0; j < m; ++j) {
          if (j == i) continue;
          const double dist = (pts[i] - pts[j]).norm();
          if (labels[i] == labels[j] && dist < dp) dp = dist, pos = j;
          if (labels[i] != labels[j] && dist < dn) dn = dist, neg = j;
        }
        if (pos < m) total += std::max(0.0, 0.5 - cosine(e, Eigen::Index(i), Eigen::Index(pos)));
        if (neg < m) total += std::max(0.0, cosine(e, Eigen::Index(i), Eigen::Index(neg)) - 0.5);
      }
      const double got = contrastive_loss(e, labels, pts, 0.5).value;
      worst = std::max(worst, std::abs(got - total / double(m)));
    }
  }
  Matrix two(2, 2);
  two << 1, 0, 0, 1;
  const double pair = contrastive_loss(two, std::vector<Label>{1, 1},
                                       std::vector<Point3>{Point3(0, 0, 0), Point3(1, 1, 1)}, 0.5)
                          .value;
  Matrix a(5, 3), b(5, 3);
  for (Eigen::Index i = 0; i < 15; ++i) a.data()[i] = n(rng), b.data()[i] = n(rng);
  double direct = 0.0;
  for (Eigen::Index i = 0; i < 5; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) direct += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
  }
  const double recon_gap = std::abs(reconstruction_loss(a, b) - direct / 15.0);
  return verdict(worst <= 1e-12 && pair == 0.5 && recon_gap <= 1e-12,
                 std::to_string(instances) + " instances m<=12, max gap " + fmt_e(worst) +
                     "; two-point loss " + std::to_string(pair) + "; recon gap " +
                     fmt_e(recon_gap));
}

Verdict fusion_contracts() {
  std::mt19937_64 rng(109);
  std::normal_distribution<double> n(0.0, 10.0);
  bool inside = true, bounded = true;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t c = 1 + rng() % 6, l = 1 + rng() % 3, f1 = 1 + rng() % 4, f2 = 1 + rng() % 4;
    std::vector<Tensor3> parts{Tensor3(c, l, f1), Tensor3(c, l, f2), Tensor3(c, l, 3)};
    for (auto& p : parts) {
      for (double& v : p.data) v = n(rng);
    }
    const auto out = fuse_embeddings(parts, random_gate(f1 + f2 + 3, 1 + rng() % 4, rng(),
                                                       1.0 + double(t % 30)));
    for (Eigen::Index i = 0; i < out.attention.size(); ++i) {
      inside = inside && out.attention[i] > 0.0 && out.attention[i] < 1.0;
    }
    for (std::size_t i = 0; i < out.fused.data.size(); ++i) {
      bounded = bounded && std::abs(out.fused.data[i]) <= std::abs(out.concatenated.data[i]);
    }
  }
  FusionGate zero{Matrix::Zero(2, 8), Matrix::Zero(8, 2)};
  const Vector half = excite(Vector::LinSpaced(8, -5, 5), zero);
  const bool is_half = (half.array() == 0.5).all();
  return verdict(inside && bounded && is_half,
                 std::string("1000 gates: a_z in (0,1) ") + (inside ? "yes" : "NO") +
                     ", |E'| <= |E| " + (bounded ? "yes" : "NO") + ", zero gate 0.5 " +
                     (is_half ? "yes" : "NO"));
}

Verdict metrics() {
  std::mt19937_64 rng(110);
  int exact = 0;
  const int trials = 500;
  for (int t = 0; t < trials; ++t) {
    const std::size_t classes = 2 + rng() % 4, n = 1 + rng() % 30;
    std::vector<Label> truth(n), pred(n);
    for (auto& v : truth) v = Label(rng() % classes);
    for (auto& v : pred) v = Label(rng() % classes);
    ConfusionMatrix cm(classes);
    cm.accumulate(truth, pred);
    bool ok = true;
    for (Label c = 0; c < classes; ++c) {
      std::set<std::size_t> ts, ps, both, either;
      for (std::size_t i = 0; i < n; ++i) {
        if (truth[i] == c) ts.insert(i), either.insert(i);
        if (pred[i] == c) ps.insert(i), either.insert(i);
        if (truth[i] == c && pred[i] == c) both.insert(i);
      }
      const auto got = iou(cm, c);
      if (either.empty()) ok = ok && !got;
      else ok = ok && got && *got == double(both.size()) / double(either.size());
    }
    exact += ok;
  }
  ConfusionMatrix hand(2);
  std::vector<Label> t, p;
  for (int i = 0; i < 6; ++i) t.push_back(1), p.push_back(1);
  for (int i = 0; i < 2; ++i) t.push_back(0), p.push_back(1);
  for (int i = 0; i < 4; ++i) t.push_back(1), p.push_back(0);
  hand.accumulate(t, p);
  ConfusionMatrix perfect(5);
  perfect.accumulate(t, t);
  const bool hand_ok = *iou(hand, 1) == 0.5;
  const bool perfect_ok = miou(perfect) == 1.0;
  return verdict(exact == trials && hand_ok && perfect_ok,
                 std::to_string(exact) + "/" + std::to_string(trials) +
                     " random instances exact; TP6/FP2/FN4 -> " + std::to_string(*iou(hand, 1)) +
                     "; perfect mIoU " + std::to_string(miou(perfect)));
}

Verdict k_configurability() {
  std::string detail;
  bool ok = true;
  for (const char* preset : {"semantic-kitti", "nuscenes"}) {
    const RunConfig c =
        parse_run_config(std::string(R"({"features": {"preset": ")") + preset + R"("}})");
    const auto fx = r_rapid(cli::load_input(c), c.sensor(), c.features);
    std::array<std::size_t, 3> full{};
    for (const RapidMatrix& m : fx.matrices) {
      if (m.padded) continue;
      const auto b = std::size_t(m.band);
      if (m.k == c.features.k_for(m.band)) ++full[b];
      else if (m.k > c.features.k_for(m.band)) ok = false;
    }
    ok = ok && full[0] > 0 && full[1] > 0 && full[2] > 0 &&
         fx.pointwise.width == std::max({c.features.k_close, c.features.k_mid, c.features.k_far});
    detail += std::string(preset) + " k=(" + std::to_string(c.features.k_close) + "," +
              std::to_string(c.features.k_mid) + "," + std::to_string(c.features.k_far) +
              ") matrices at width per band " + std::to_string(full[0]) + "/" +
              std::to_string(full[1]) + "/" + std::to_string(full[2]) + "; ";
  }
  detail.resize(detail.size() - 2);
  return verdict(ok, detail);
}

Verdict performance_time() {
  const RunConfig c = parse_run_config("{}");
  const PointCloud cloud = cli::load_input(c);
  StageTimes times;
  const auto t0 = std::chrono::steady_clock::now();
  const auto fx = r_rapid(cloud, c.sensor(), c.features, {1, &times});
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto eight = r_rapid(cloud, c.sensor(), c.features, {8, nullptr});
  const bool same = encode_features(fx.matrices) == encode_features(eight.matrices);
  return verdict(s <= 2.0 && cloud.size() >= 120000 && same,
                 std::to_string(cloud.size()) + " points, 64 rings, single worker " +
                     std::to_string(s) + " s (knn " + std::to_string(times.knn) + " s); 1 vs 8 "
                     "workers byte-identical " + (same ? "yes" : "NO"));
}

Verdict performance_scaling() {
  const unsigned hw = std::thread::hardware_concurrency();
  if (hw < 8) {
    return {Outcome::NotRun, "needs 8 hardware threads, this machine reports " +
                                 std::to_string(hw)};
  }
  const RunConfig c = parse_run_config("{}");
  const PointCloud cloud = cli::load_input(c);
  const auto time = [&](std::size_t w) {
    const auto t0 = std::chrono::steady_clock::now();
    r_rapid(cloud, c.sensor(), c.features, {w, nullptr});
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  const double one = time(1), eight = time(8);
  return verdict(one / eight >= 5.0, "speedup at 8 workers x" + std::to_string(one / eight));
}

}  // namespace

int main() {
  report("C1", "isometry invariance", isometry, 120.0);
  report("C1b", "isometry invariance on real scans", real_scan_leg);
  report("C2", "permutation invariance", permutation, 60.0);
  report("C3", "reflectivity affine invariance", reflectivity_affine);
  report("C4", "k-NN oracle equivalence", knn_oracle);
  report("C5", "hand-worked matrix", hand_example);
  report("C6", "scatter softmax/sum identities", scatter_identities);
  report("C7", "inner bottleneck identity round-trip", bottleneck_identity);
  report("C8", "loss oracles", loss_oracles);
  report("C9", "fusion contracts", fusion_contracts);
  report("C10", "metrics", metrics);
  report("C11", "range-aware k configurability", k_configurability);
  report("C12", "single-worker extraction time", performance_time);
  report("C12b", "worker scaling to 8", performance_scaling);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
