#pragma once

#include "rapid/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace rapid {

/// Concatenation of voxel-wise embeddings along the channel axis, with the
/// channel offset at which each part starts.
struct Concatenated {
  Tensor3 tensor;                   // c x l x f*
  std::vector<std::size_t> offsets; // parts.size() + 1 entries
};

/// Parts in the order (coordinate, intensity, RAPiD). All must share c and l.
Concatenated concat_embeddings(std::span<const Tensor3> parts);

/// Recovers part `index` from a concatenation.
Tensor3 slice_channels(const Concatenated& concat, std::size_t index);

/// Global average pooling over the voxel and latent axes.
Vector squeeze(const Tensor3& embedding);

/// Gate weights: hidden = ReLU(w1 * z), a = sigmoid(w2 * hidden).
struct FusionGate {
  Matrix w1;  // (f*/ratio) x f*
  Matrix w2;  // f* x (f*/ratio)
};

FusionGate random_gate(std::size_t channels, std::size_t ratio, std::uint64_t seed,
                       double stddev = 1.0);

/// Components lie strictly inside (0, 1); a saturated sigmoid is clamped to
/// the nearest representable interior value.
Vector excite(const Vector& z, const FusionGate& gate);

/// Scales channel f of every (voxel, latent) fiber by a[f].
Tensor3 fuse(const Tensor3& embedding, const Vector& attention);

struct FusedTensor {
  Tensor3 concatenated;
  Vector descriptor;  // z
  Vector attention;   // a_z
  Tensor3 fused;      // E'
};

FusedTensor fuse_embeddings(std::span<const Tensor3> parts, const FusionGate& gate);

}  // namespace rapid
