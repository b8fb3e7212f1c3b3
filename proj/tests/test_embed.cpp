#include "support.hpp"

#include "rapid/embed.hpp"
#include "rapid/error.hpp"

#include <doctest.h>

#include <cmath>

using namespace rapid;

namespace {

Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Matrix m{Eigen::Index(rows), Eigen::Index(cols)};
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

std::vector<Point3> random_points(std::mt19937_64& rng, std::size_t m, double extent) {
  std::uniform_real_distribution<double> u(-extent, extent);
  std::vector<Point3> pts(m);
  for (auto& p : pts) p = Point3(u(rng), u(rng), u(rng));
  return pts;
}

double cosine(const Matrix& e, std::size_t a, std::size_t b) {
  double dot = 0, na = 0, nb = 0;
  for (Eigen::Index c = 0; c < e.cols(); ++c) {
    dot += e(Eigen::Index(a), c) * e(Eigen::Index(b), c);
    na += e(Eigen::Index(a), c) * e(Eigen::Index(a), c);
    nb += e(Eigen::Index(b), c) * e(Eigen::Index(b), c);
  }
  return (na == 0 || nb == 0) ? 0.0 : dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Every ordered pair enumerated; the nearest same/other-class partner by
/// coordinate distance, ties to the lower index.
double oracle_contrastive(const Matrix& e, const std::vector<Label>& labels,
                          const std::vector<Point3>& pts, double alpha) {
  const std::size_t m = labels.size();
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double best_pos = INFINITY, best_neg = INFINITY;
    std::size_t pos = m, neg = m;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      const double d = (pts[i] - pts[j]).norm();
      if (labels[j] == labels[i] && d < best_pos) {
        best_pos = d;
        pos = j;
      }
      if (labels[j] != labels[i] && d < best_neg) {
        best_neg = d;
        neg = j;
      }
    }
    if (pos < m) total += std::max(0.0, alpha - cosine(e, i, pos));
    if (neg < m) total += std::max(0.0, cosine(e, i, neg) - alpha);
  }
  return total / double(m);
}

}  // namespace

TEST_CASE("voxelize numbers voxels lexicographically") {
  const std::vector<Point3> pts{Point3(0.5, 0.1, 0.1), Point3(-0.1, 0.0, 0.0),
                                Point3(0.55, 0.15, 0.05), Point3(-0.05, 2.0, 0.0)};
  const VoxelGroups g = voxelize(pts, 1.0);
  REQUIRE(g.voxel_count() == 3);
  CHECK(g.coords[0] == VoxelCoord(-1, 0, 0));
  CHECK(g.coords[1] == VoxelCoord(-1, 2, 0));
  CHECK(g.coords[2] == VoxelCoord(0, 0, 0));
  CHECK(g.voxel_of == std::vector<std::uint32_t>{2, 0, 2, 1});
  CHECK(g.members[2] == std::vector<PointIndex>{0, 2});
  CHECK_THROWS_AS(voxelize(pts, 0.0), Error);
}

TEST_CASE("scatter softmax and sum identities") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + rng() % 500, l = 1 + rng() % 6, d = 1 + rng() % 8;
    const auto pts = random_points(rng, m, 2.0);
    const VoxelGroups groups = voxelize(pts, 0.5 + 0.1 * double(trial % 7));
    const Matrix scores = random_matrix(rng, m, l, 5.0);
    const Matrix a = scatter_softmax(scores, groups);
    for (const auto& members : groups.members) {
      for (std::size_t j = 0; j < l; ++j) {
        double s = 0.0;
        for (PointIndex i : members) s += a(i, Eigen::Index(j));
        CHECK(std::abs(s - 1.0) <= 1e-12);
      }
    }
    Tensor3 h(m, l, d);
    std::normal_distribution<double> n(0.0, 3.0);
    for (double& v : h.data) v = n(rng);
    const Tensor3 hv = scatter_sum(h, groups);
    REQUIRE(hv.dim0 == groups.voxel_count());
    for (std::size_t j = 0; j < l; ++j) {
      for (std::size_t c = 0; c < d; ++c) {
        double before = 0.0, after = 0.0;
        for (std::size_t i = 0; i < m; ++i) before += h(i, j, c);
        for (std::size_t v = 0; v < hv.dim0; ++v) after += hv(v, j, c);
        CHECK(std::abs(before - after) <= 1e-9);
      }
    }
  }
}

TEST_CASE("scatter softmax matches the direct formula") {
  std::mt19937_64 rng(22);
  const auto pts = random_points(rng, 40, 1.0);
  const VoxelGroups groups = voxelize(pts, 0.7);
  const Matrix s = random_matrix(rng, 40, 3);
  const Matrix a = scatter_softmax(s, groups);
  for (std::size_t i = 0; i < 40; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      double z = 0.0;
      for (PointIndex q : groups.members[groups.voxel_of[i]]) z += std::exp(s(q, j));
      CHECK(a(Eigen::Index(i), j) == doctest::Approx(std::exp(s(Eigen::Index(i), j)) / z).epsilon(1e-13));
    }
  }
}

TEST_CASE("vsa_encode matches an explicit loop") {
  std::mt19937_64 rng(23);
  const std::size_t m = 60, d = 5, l = 3;
  const auto pts = random_points(rng, m, 1.0);
  const VoxelGroups groups = voxelize(pts, 0.8);
  const Matrix g = random_matrix(rng, m, d);
  const WeightSet w = random_weights(d, 2, l, 5);
  const EncodeResult r = vsa_encode(g, w.outer, groups);
  for (std::size_t v = 0; v < groups.voxel_count(); ++v) {
    for (std::size_t j = 0; j < l; ++j) {
      std::vector<double> score;
      double z = 0.0;
      for (PointIndex i : groups.members[v]) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          double key = 0.0;
          for (std::size_t t = 0; t < d; ++t) key += g(i, Eigen::Index(t)) * w.outer.key(Eigen::Index(t), Eigen::Index(c));
          s += key * w.outer.latent(Eigen::Index(j), Eigen::Index(c));
        }
        score.push_back(s);
      }
      const double peak = *std::max_element(score.begin(), score.end());
      for (double& s : score) z += (s = std::exp(s - peak));
      for (std::size_t c = 0; c < d; ++c) {
        double want = 0.0;
        for (std::size_t q = 0; q < score.size(); ++q) {
          const PointIndex i = groups.members[v][q];
          double value = 0.0;
          for (std::size_t t = 0; t < d; ++t) value += g(i, Eigen::Index(t)) * w.outer.value(Eigen::Index(t), Eigen::Index(c));
          want += score[q] / z * value;
        }
        CHECK(r.voxelwise(v, j, c) == doctest::Approx(want).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("identity inner stages reproduce the voxel features") {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t m = 50 + rng() % 200, d = 2 + rng() % 6, l = 1 + rng() % 4;
    const auto pts = random_points(rng, m, 1.5);
    const VoxelGroups groups = voxelize(pts, 0.4);
    const WeightSet w = identity_inner_weights(d, l, rng());
    w.validate();
    const EncodeResult enc = vsa_encode(random_matrix(rng, m, d), w.outer, groups);
    const BottleneckResult b = inner_bottleneck(enc.voxelwise, w, groups);
    REQUIRE(b.reconstructed.same_shape(enc.voxelwise));
    double worst = 0.0;
    for (std::size_t i = 0; i < b.reconstructed.data.size(); ++i) {
      worst = std::max(worst, std::abs(b.reconstructed.data[i] - enc.voxelwise.data[i]));
    }
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("bottleneck and decoder shapes") {
  std::mt19937_64 rng(25);
  const std::size_t m = 120, d = 10, dc = 4, l = 4;
  const auto pts = random_points(rng, m, 2.0);
  const VoxelGroups groups = voxelize(pts, 0.5);
  const Matrix g = random_matrix(rng, m, d);
  for (std::size_t stages : {1, 2, 3}) {
    const WeightSet w = random_weights(d, dc, l, 7, stages);
    CHECK(w.encoder.size() == stages);
    const auto enc = vsa_encode(g, w.outer, groups);
    const auto b = inner_bottleneck(enc.voxelwise, w, groups);
    CHECK(b.compressed.shape_string() == std::to_string(groups.voxel_count()) + "x4x4");
    CHECK(b.reconstructed.same_shape(enc.voxelwise));
    const auto dec = vsa_decode(b.reconstructed, g, w.outer, groups);
    CHECK(dec.output.rows() == Eigen::Index(m));
    CHECK(dec.output.cols() == Eigen::Index(d));
    for (Eigen::Index i = 0; i < dec.attention.rows(); ++i) {
      CHECK(dec.attention.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
    const Matrix e = pointwise_embedding(b.compressed, groups);
    CHECK(e.cols() == Eigen::Index(l * dc));
  }
  WeightSet broken = random_weights(d, dc, l, 7);
  broken.encoder[0].variance(0) = -1.0;
  CHECK_THROWS_AS(broken.validate(), Error);
  CHECK_THROWS_AS(vsa_encode(random_matrix(rng, m, d + 1), random_weights(d, dc, l, 7).outer,
                             groups),
                  Error);
}

TEST_CASE("contrastive loss matches exhaustive enumeration") {
  std::mt19937_64 rng(26);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 2 + rng() % 11;
    const std::size_t classes = 1 + rng() % 3;
    std::vector<Label> labels(m);
    for (auto& c : labels) c = Label(rng() % classes);
    // Lattice coordinates so distance ties actually occur.
    std::vector<Point3> pts(m);
    for (auto& p : pts) p = Point3(double(rng() % 3), double(rng() % 3), 0.0);
    const Matrix e = random_matrix(rng, m, 1 + rng() % 5);
    const double alpha = 0.5;
    const ContrastiveLoss got = contrastive_loss(e, labels, pts, alpha);
    CHECK(std::abs(got.value - oracle_contrastive(e, labels, pts, alpha)) <= 1e-12);
    CHECK(got.value >= 0.0);
    const bool single = std::ranges::all_of(labels, [&](Label c) { return c == labels[0]; });
    CHECK(got.negatives_undefined == single);
  }
}

TEST_CASE("contrastive loss by hand") {
  Matrix e(2, 2);
  e << 1, 0, 0, 1;
  const std::vector<Label> same{3, 3};
  const std::vector<Point3> pts{Point3(0, 0, 0), Point3(1, 0, 0)};
  const auto r = contrastive_loss(e, same, pts, 0.5);
  CHECK(r.value == 0.5);
  CHECK(r.negatives_undefined);

  // Identical within classes, orthogonal across: both hinges idle.
  Matrix f(4, 2);
  f << 1, 0, 1, 0, 0, 1, 0, 1;
  const std::vector<Label> two{0, 0, 1, 1};
  const std::vector<Point3> p4{Point3(0, 0, 0), Point3(1, 0, 0), Point3(0, 1, 0), Point3(1, 1, 0)};
  CHECK(contrastive_loss(f, two, p4, 0.5).value == 0.0);

  const std::vector<Label> alone{0, 1};
  const auto lonely = contrastive_loss(e, alone, pts, 0.5);
  CHECK(lonely.missing_positive == 2);
}

TEST_CASE("reconstruction and total loss") {
  std::mt19937_64 rng(27);
  const Matrix a = random_matrix(rng, 7, 3), b = random_matrix(rng, 7, 3);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < 7; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) sum += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
  }
  CHECK(std::abs(reconstruction_loss(a, b) - sum / 21.0) <= 1e-12);
  CHECK(reconstruction_loss(a, a) == 0.0);
  CHECK_THROWS_AS(reconstruction_loss(a, random_matrix(rng, 7, 2)), Error);
  CHECK(total_loss(0.25, 0.5, 0.1) == doctest::Approx(0.3));
  CHECK(total_loss(0.25, 0.5, 0.0) == 0.25);
  CHECK_THROWS_AS(total_loss(0.25, 0.5, -1.0), Error);
}

TEST_CASE("similarity") {
  const std::vector<double> a{1, 0}, b{0, 2}, c{2, 0}, z{0, 0};
  CHECK(similarity(a, b, Similarity::Cosine) == 0.0);
  CHECK(similarity(a, c, Similarity::Cosine) == 1.0);
  CHECK(similarity(a, c, Similarity::Dot) == 2.0);
  CHECK(similarity(a, z, Similarity::Cosine) == 0.0);
}
