#include "rapid/error.hpp"
#include "rapid/fusion.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace rapid;

namespace {

Tensor3 random_tensor(std::mt19937_64& rng, std::size_t c, std::size_t l, std::size_t f) {
  std::normal_distribution<double> n(0.0, 2.0);
  Tensor3 t(c, l, f);
  for (double& v : t.data) v = n(rng);
  return t;
}

}  // namespace

TEST_CASE("concatenation along channels and slicing back") {
  std::mt19937_64 rng(31);
  const std::vector<Tensor3> parts{random_tensor(rng, 5, 3, 3), random_tensor(rng, 5, 3, 2),
                                   random_tensor(rng, 5, 3, 4)};
  const Concatenated cat = concat_embeddings(parts);
  CHECK(cat.offsets == std::vector<std::size_t>{0, 3, 5, 9});
  CHECK(cat.tensor.shape_string() == "5x3x9");
  CHECK(cat.tensor(2, 1, 4) == parts[1](2, 1, 1));
  for (std::size_t p = 0; p < parts.size(); ++p) {
    CHECK(slice_channels(cat, p).data == parts[p].data);
  }
  const std::vector<Tensor3> bad{random_tensor(rng, 5, 3, 3), random_tensor(rng, 4, 3, 3)};
  CHECK_THROWS_AS(concat_embeddings(bad), Error);
}

TEST_CASE("squeeze is the mean over voxels and latents") {
  Tensor3 e(2, 2, 2);
  e.data = {1, 10, 2, 20, 3, 30, 4, 40};
  const Vector z = squeeze(e);
  CHECK(z[0] == 2.5);
  CHECK(z[1] == 25.0);
}

TEST_CASE("excitation stays strictly inside (0, 1)") {
  std::mt19937_64 rng(32);
  std::normal_distribution<double> n(0.0, 50.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t f = 1 + rng() % 12, ratio = 1 + rng() % 4;
    const FusionGate gate = random_gate(f, ratio, rng(), 1.0 + double(trial % 20));
    Vector z{Eigen::Index(f)};
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = n(rng);
    const Vector a = excite(z, gate);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      CHECK(a[i] > 0.0);
      CHECK(a[i] < 1.0);
    }
  }
  FusionGate huge;
  huge.w1 = Matrix::Constant(1, 1, 1e6);
  huge.w2 = Matrix::Constant(1, 1, 1e6);
  CHECK(excite(Vector::Constant(1, 1.0), huge)[0] < 1.0);
  huge.w2(0, 0) = -1e6;
  CHECK(excite(Vector::Constant(1, 1.0), huge)[0] > 0.0);
}

TEST_CASE("zero gate gives one half") {
  FusionGate zero;
  zero.w1 = Matrix::Zero(2, 6);
  zero.w2 = Matrix::Zero(6, 2);
  const Vector a = excite(Vector::LinSpaced(6, -3.0, 3.0), zero);
  for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(a[i] == 0.5);
}

TEST_CASE("fused magnitudes never grow") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<Tensor3> parts{random_tensor(rng, 7, 2, 3), random_tensor(rng, 7, 2, 2),
                                     random_tensor(rng, 7, 2, 4)};
    const FusedTensor out = fuse_embeddings(parts, random_gate(9, 4, rng()));
    REQUIRE(out.fused.same_shape(out.concatenated));
    for (std::size_t i = 0; i < out.fused.data.size(); ++i) {
      CHECK(std::abs(out.fused.data[i]) <= std::abs(out.concatenated.data[i]));
    }
    for (std::size_t a = 0; a < 7; ++a) {
      for (std::size_t b = 0; b < 2; ++b) {
        for (std::size_t c = 0; c < 9; ++c) {
          CHECK(out.fused(a, b, c) == out.concatenated(a, b, c) * out.attention[Eigen::Index(c)]);
        }
      }
    }
  }
  CHECK_THROWS_AS(excite(Vector::Zero(3), random_gate(4, 2, 1)), Error);
}
