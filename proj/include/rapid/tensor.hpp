#pragma once

#include "rapid/error.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace rapid {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Dense row-major rank-3 array, indexed (voxel or point, latent, channel).
struct Tensor3 {
  std::size_t dim0 = 0;
  std::size_t dim1 = 0;
  std::size_t dim2 = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(std::size_t d0, std::size_t d1, std::size_t d2, double fill = 0.0)
      : dim0(d0), dim1(d1), dim2(d2), data(d0 * d1 * d2, fill) {}

  double& operator()(std::size_t a, std::size_t b, std::size_t c) {
    return data[(a * dim1 + b) * dim2 + c];
  }
  double operator()(std::size_t a, std::size_t b, std::size_t c) const {
    return data[(a * dim1 + b) * dim2 + c];
  }

  /// Channel vector at (a, b).
  std::span<double> fiber(std::size_t a, std::size_t b) {
    return std::span<double>(data).subspan((a * dim1 + b) * dim2, dim2);
  }
  std::span<const double> fiber(std::size_t a, std::size_t b) const {
    return std::span<const double>(data).subspan((a * dim1 + b) * dim2, dim2);
  }

  bool same_shape(const Tensor3& o) const {
    return dim0 == o.dim0 && dim1 == o.dim1 && dim2 == o.dim2;
  }
  std::string shape_string() const {
    return std::to_string(dim0) + "x" + std::to_string(dim1) + "x" + std::to_string(dim2);
  }
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorCode::Contract, message);
}

}  // namespace rapid
