#pragma once

#include "rapid/container.hpp"
#include "rapid/point_cloud.hpp"
#include "rapid/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace rapid {

using VoxelCoord = Eigen::Matrix<std::int64_t, 3, 1>;

/// Point-to-voxel assignment. Voxels are numbered in lexicographic order of
/// their integer coordinates; member lists are ascending.
struct VoxelGroups {
  std::vector<std::uint32_t> voxel_of;        // I^v, per point
  std::vector<VoxelCoord> coords;             // X^v, per voxel
  std::vector<std::vector<PointIndex>> members;

  std::size_t voxel_count() const noexcept { return coords.size(); }
  std::size_t point_count() const noexcept { return voxel_of.size(); }
};

VoxelGroups voxelize(std::span<const Point3> points, double voxel_size);

/// Softmax over the points of each voxel, independently per column.
Matrix scatter_softmax(const Matrix& scores, const VoxelGroups& groups);

/// Per-voxel sum of per-point slices: (m x l x d) -> (c x l x d).
Tensor3 scatter_sum(const Tensor3& per_point, const VoxelGroups& groups);

/// Copies each voxel slice to its member points: (c x l x d) -> (m x l x d).
Tensor3 broadcast(const Tensor3& per_voxel, const VoxelGroups& groups);

enum class Activation { Identity, Relu, Gelu };

/// Projections act on row vectors: K = G * key.
struct OuterWeights {
  Matrix latent;      // l x d, the learned queries L
  Matrix key;         // d x d   -> K
  Matrix value;       // d x d   -> V
  Matrix query;       // d x d   -> Q (decode side, from G)
  Matrix key_star;    // d x d   -> K* (from broadcast voxel features)
  Matrix value_star;  // d x d   -> V*
};

/// Pointwise conv (in x out) followed by batch norm with fixed statistics.
struct ConvStage {
  Matrix kernel;
  Vector gamma, beta, mean, variance;
  double eps = 1e-5;
};

/// Pointwise transposed conv (in x out) plus bias.
struct DeconvStage {
  Matrix kernel;
  Vector bias;
};

/// Two depth-wise 3x3x3 convolutions on the sparse voxel grid with an
/// activation between. Kernels are 27 x channels; offset (dx, dy, dz) in
/// {-1,0,1}^3 is row (dx+1)*9 + (dy+1)*3 + (dz+1).
struct ConvFfn {
  Matrix depthwise1;
  Matrix depthwise2;
  Activation activation = Activation::Gelu;
};

struct WeightSet {
  OuterWeights outer;
  std::vector<ConvStage> encoder;
  ConvFfn ffn;
  std::vector<DeconvStage> decoder;

  std::size_t latent_count() const { return std::size_t(outer.latent.rows()); }
  std::size_t width() const { return std::size_t(outer.latent.cols()); }
  std::size_t compressed_width() const;

  /// Checks every shape and that batch-norm variances are positive.
  void validate() const;
};

/// Encoder widths d -> (d + d')/2 -> d' by default (`stages` = 2); the decoder
/// mirrors them. Seeded, deterministic.
WeightSet random_weights(std::size_t d, std::size_t d_compressed, std::size_t l,
                         std::uint64_t seed, std::size_t stages = 2);

/// Outer projections from `seed`, inner path configured as an exact identity
/// (d' = d, identity kernels, unit batch norm with eps 0, centre-tap
/// depth-wise kernels, identity activation).
WeightSet identity_inner_weights(std::size_t d, std::size_t l, std::uint64_t seed);

TensorMap to_tensors(const WeightSet& weights);
WeightSet weights_from_tensors(const TensorMap& tensors);

struct EncodeResult {
  Matrix key;        // m x d
  Matrix value;      // m x d
  Matrix attention;  // m x l, scatter-softmaxed
  Tensor3 pointwise; // H, m x l x d
  Tensor3 voxelwise; // H^v, c x l x d
};

EncodeResult vsa_encode(const Matrix& features, const OuterWeights& weights,
                        const VoxelGroups& groups);

struct BottleneckResult {
  Tensor3 compressed;     // hbar, c x l x d'
  Tensor3 mixed;          // ConvFFN output, c x l x d'
  Tensor3 reconstructed;  // \hat H^v, c x l x d
};

BottleneckResult inner_bottleneck(const Tensor3& voxelwise, const WeightSet& weights,
                                  const VoxelGroups& groups);

struct DecodeResult {
  Tensor3 broadcast;  // \hat H, m x l x d
  Matrix query;       // m x d
  Matrix attention;   // m x l, row softmax of A*
  Matrix output;      // \hat G, m x d
};

DecodeResult vsa_decode(const Tensor3& voxelwise, const Matrix& features,
                        const OuterWeights& weights, const VoxelGroups& groups);

/// ħ broadcast to points and flattened: m x (l * d').
Matrix pointwise_embedding(const Tensor3& compressed, const VoxelGroups& groups);

enum class Similarity { Cosine, Dot };
double similarity(std::span<const double> a, std::span<const double> b, Similarity sim);

struct ContrastiveLoss {
  double value = 0.0;
  std::size_t missing_positive = 0;  // points whose class has no other member
  bool negatives_undefined = false;  // a single class: negative terms skipped
};

/// Mean over points of the hinge on the nearest same-class point (pulled above
/// alpha) plus the hinge on the nearest other-class point (pushed below
/// alpha). Nearest is by 3D coordinate distance, ties by index.
ContrastiveLoss contrastive_loss(const Matrix& embeddings, std::span<const Label> labels,
                                 std::span<const Point3> coordinates, double alpha,
                                 Similarity sim = Similarity::Cosine);

double reconstruction_loss(const Matrix& features, const Matrix& reconstructed);

/// recon + lambda * contr; lambda must be >= 0.
double total_loss(double recon, double contr, double lambda);

}  // namespace rapid
