#include "rapid/fusion.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace rapid {

Concatenated concat_embeddings(std::span<const Tensor3> parts) {
  require(!parts.empty(), "nothing to concatenate");
  Concatenated out;
  out.offsets.push_back(0);
  for (const Tensor3& p : parts) {
    require(p.dim0 == parts[0].dim0 && p.dim1 == parts[0].dim1,
            "part " + p.shape_string() + " does not match " + parts[0].shape_string() +
                " in voxel or latent size");
    out.offsets.push_back(out.offsets.back() + p.dim2);
  }
  out.tensor = Tensor3(parts[0].dim0, parts[0].dim1, out.offsets.back());
  for (std::size_t a = 0; a < out.tensor.dim0; ++a) {
    for (std::size_t b = 0; b < out.tensor.dim1; ++b) {
      auto dst = out.tensor.fiber(a, b);
      for (std::size_t p = 0; p < parts.size(); ++p) {
        const auto src = parts[p].fiber(a, b);
        std::copy(src.begin(), src.end(), dst.begin() + std::ptrdiff_t(out.offsets[p]));
      }
    }
  }
  return out;
}

Tensor3 slice_channels(const Concatenated& concat, std::size_t index) {
  require(index + 1 < concat.offsets.size(), "part index out of range");
  const std::size_t from = concat.offsets[index];
  const std::size_t width = concat.offsets[index + 1] - from;
  const Tensor3& e = concat.tensor;
  Tensor3 out(e.dim0, e.dim1, width);
  for (std::size_t a = 0; a < e.dim0; ++a) {
    for (std::size_t b = 0; b < e.dim1; ++b) {
      const auto src = e.fiber(a, b).subspan(from, width);
      std::copy(src.begin(), src.end(), out.fiber(a, b).begin());
    }
  }
  return out;
}

Vector squeeze(const Tensor3& e) {
  require(e.dim0 * e.dim1 > 0, "cannot pool an empty embedding");
  // Fixed traversal order keeps the reduction reproducible.
  Vector z = Vector::Zero(Eigen::Index(e.dim2));
  for (std::size_t a = 0; a < e.dim0; ++a) {
    for (std::size_t b = 0; b < e.dim1; ++b) {
      const auto f = e.fiber(a, b);
      for (std::size_t c = 0; c < f.size(); ++c) z[Eigen::Index(c)] += f[c];
    }
  }
  return z / double(e.dim0 * e.dim1);
}

FusionGate random_gate(std::size_t channels, std::size_t ratio, std::uint64_t seed,
                       double stddev) {
  require(ratio >= 1, "reduction ratio must be >= 1");
  const auto hidden = Eigen::Index(std::max<std::size_t>(1, channels / ratio));
  const auto f = Eigen::Index(channels);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, stddev);
  FusionGate g;
  g.w1.resize(hidden, f);
  g.w2.resize(f, hidden);
  for (Eigen::Index i = 0; i < g.w1.size(); ++i) g.w1.data()[i] = n(rng);
  for (Eigen::Index i = 0; i < g.w2.size(); ++i) g.w2.data()[i] = n(rng);
  return g;
}

Vector excite(const Vector& z, const FusionGate& gate) {
  require(gate.w1.cols() == z.size() && gate.w2.rows() == z.size() &&
              gate.w2.cols() == gate.w1.rows(),
          "gate shapes do not match " + std::to_string(z.size()) + " channels");
  const Vector hidden = (gate.w1 * z).cwiseMax(0.0);
  const Vector pre = gate.w2 * hidden;
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  const double hi = std::nextafter(1.0, 0.0);
  Vector a(pre.size());
  for (Eigen::Index i = 0; i < pre.size(); ++i) {
    a[i] = std::clamp(1.0 / (1.0 + std::exp(-pre[i])), lo, hi);
  }
  return a;
}

Tensor3 fuse(const Tensor3& e, const Vector& attention) {
  require(std::size_t(attention.size()) == e.dim2, "attention width does not match channels");
  Tensor3 out = e;
  for (std::size_t a = 0; a < e.dim0; ++a) {
    for (std::size_t b = 0; b < e.dim1; ++b) {
      auto f = out.fiber(a, b);
      for (std::size_t c = 0; c < f.size(); ++c) f[c] *= attention[Eigen::Index(c)];
    }
  }
  return out;
}

FusedTensor fuse_embeddings(std::span<const Tensor3> parts, const FusionGate& gate) {
  FusedTensor r;
  r.concatenated = concat_embeddings(parts).tensor;
  r.descriptor = squeeze(r.concatenated);
  r.attention = excite(r.descriptor, gate);
  r.fused = fuse(r.concatenated, r.attention);
  return r;
}

}  // namespace rapid
