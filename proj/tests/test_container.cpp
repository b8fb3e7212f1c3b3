#include "support.hpp"

#include "rapid/container.hpp"
#include "rapid/embed.hpp"
#include "rapid/error.hpp"
#include "rapid/partition.hpp"

#include <doctest.h>

#include <cstring>
#include <limits>

using namespace rapid;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::Contract;
}

}  // namespace

TEST_CASE("feature containers round-trip") {
  const PointCloud scene = test::small_scene(2);
  const auto g = SensorGeometry::from_fov(16, 0.05, -0.4, 256);
  const auto fx = r_rapid(scene, g, RangeAwareConfig{});
  const auto bytes = encode_features(fx.matrices);
  CHECK(std::memcmp(bytes.data(), "RAPD", 4) == 0);
  const auto back = decode_features(bytes);
  REQUIRE(back.size() == fx.matrices.size());
  std::size_t rows = 0;
  for (std::size_t i = 0; i < back.size(); ++i) {
    const RapidMatrix& a = fx.matrices[i];
    const RapidMatrix& b = back[i];
    CHECK(b.roi_id == a.roi_id);
    CHECK(b.group == a.group);
    CHECK(b.band == a.band);
    CHECK(b.k == a.k);
    CHECK(b.padded == a.padded);
    CHECK(b.scale == a.scale);
    CHECK(b.outliers == a.outliers);
    CHECK(b.anchors == a.anchors);
    CHECK(b.raw.empty());
    REQUIRE(b.values.size() == a.values.size());
    for (std::size_t j = 0; j < a.values.size(); ++j) CHECK(b.values[j] == double(float(a.values[j])));
    rows += b.rows();
  }
  CHECK(rows == scene.size());
  CHECK(encode_features(back) == bytes);
}

TEST_CASE("infinite delta survives the header") {
  const PointCloud line({Point3(0, 0, 0), Point3(1, 0, 0), Point3(3, 0, 0)}, {0.5, 0.5, 0.5});
  const auto m = rapid::rapid(test::all_indices(3), line, 2, std::numeric_limits<double>::infinity());
  const auto back = decode_features(encode_features(std::vector{m}));
  CHECK(std::isinf(back[0].delta));
  CHECK(back[0].values == m.values);
}

TEST_CASE("malformed feature containers") {
  const PointCloud line({Point3(0, 0, 0), Point3(1, 0, 0), Point3(3, 0, 0)}, {0.5, 0.5, 0.5});
  const auto good = encode_features(std::vector{rapid::rapid(test::all_indices(3), line, 2, 2.0)});

  auto magic = good;
  magic[0] = std::byte('X');
  CHECK(code_of([&] { decode_features(magic); }) == ErrorCode::Format);
  auto version = good;
  version[4] = std::byte(9);
  CHECK(code_of([&] { decode_features(version); }) == ErrorCode::Format);
  auto truncated = good;
  truncated.pop_back();
  CHECK(code_of([&] { decode_features(truncated); }) == ErrorCode::Format);
  CHECK(code_of([&] { decode_features(std::span(good).first(6)); }) == ErrorCode::Format);
  CHECK(code_of([&] { decode_tensors(good); }) == ErrorCode::Format);
}

TEST_CASE("weight containers round-trip") {
  const WeightSet w = random_weights(6, 3, 4, 99, 2);
  const TensorMap t = to_tensors(w);
  const TensorMap back = decode_tensors(encode_tensors(t));
  REQUIRE(back.size() == t.size());
  for (const auto& [name, tensor] : t) {
    REQUIRE(back.count(name) == 1);
    CHECK(back.at(name).shape == tensor.shape);
    for (std::size_t i = 0; i < tensor.data.size(); ++i) {
      CHECK(back.at(name).data[i] == double(float(tensor.data[i])));
    }
  }
  const WeightSet again = weights_from_tensors(back);
  CHECK(again.width() == 6);
  CHECK(again.compressed_width() == 3);
  CHECK(again.latent_count() == 4);
  CHECK(code_of([&] { decode_features(encode_tensors(t)); }) == ErrorCode::Format);
}
