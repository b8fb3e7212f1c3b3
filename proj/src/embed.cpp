#include "rapid/embed.hpp"

#include "rapid/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <unordered_map>

namespace rapid {

namespace {

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

double activate(double x, Activation a) {
  switch (a) {
    case Activation::Identity: return x;
    case Activation::Relu: return x > 0.0 ? x : 0.0;
    case Activation::Gelu: return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
  }
  return x;
}

/// Applies `kernel` (in x out) to every (site, latent) channel vector.
Tensor3 pointwise_linear(const Tensor3& in, const Matrix& kernel) {
  require(std::size_t(kernel.rows()) == in.dim2,
          "kernel " + dims(kernel) + " does not accept width " + std::to_string(in.dim2));
  Tensor3 out(in.dim0, in.dim1, std::size_t(kernel.cols()));
  for (std::size_t a = 0; a < in.dim0; ++a) {
    for (std::size_t b = 0; b < in.dim1; ++b) {
      const auto src = in.fiber(a, b);
      auto dst = out.fiber(a, b);
      for (std::size_t i = 0; i < src.size(); ++i) {
        const double x = src[i];
        if (x == 0.0) continue;
        for (std::size_t o = 0; o < dst.size(); ++o) dst[o] += x * kernel(Eigen::Index(i), Eigen::Index(o));
      }
    }
  }
  return out;
}

struct CoordHash {
  std::size_t operator()(const VoxelCoord& c) const {
    std::size_t h = std::hash<std::int64_t>{}(c.x());
    h = h * 1000003U ^ std::hash<std::int64_t>{}(c.y());
    h = h * 1000003U ^ std::hash<std::int64_t>{}(c.z());
    return h;
  }
};

/// Submanifold depth-wise 3x3x3 convolution over active voxels only.
Tensor3 depthwise_conv(const Tensor3& in, const Matrix& kernel, const VoxelGroups& groups) {
  require(kernel.rows() == 27 && std::size_t(kernel.cols()) == in.dim2,
          "depth-wise kernel must be 27 x " + std::to_string(in.dim2) + ", got " + dims(kernel));
  std::unordered_map<VoxelCoord, std::size_t, CoordHash> index;
  for (std::size_t v = 0; v < groups.voxel_count(); ++v) index.emplace(groups.coords[v], v);

  Tensor3 out(in.dim0, in.dim1, in.dim2);
  for (std::size_t v = 0; v < in.dim0; ++v) {
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dz = -1; dz <= 1; ++dz) {
          const auto it = index.find(groups.coords[v] + VoxelCoord(dx, dy, dz));
          if (it == index.end()) continue;
          const Eigen::Index tap = (dx + 1) * 9 + (dy + 1) * 3 + (dz + 1);
          for (std::size_t b = 0; b < in.dim1; ++b) {
            const auto src = in.fiber(it->second, b);
            auto dst = out.fiber(v, b);
            for (std::size_t ch = 0; ch < src.size(); ++ch) {
              dst[ch] += kernel(tap, Eigen::Index(ch)) * src[ch];
            }
          }
        }
      }
    }
  }
  return out;
}

Matrix gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double stddev) {
  std::normal_distribution<double> n(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

Vector uniform(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

OuterWeights random_outer(std::mt19937_64& rng, std::size_t d, std::size_t l) {
  const auto di = Eigen::Index(d);
  const double s = 1.0 / std::sqrt(double(d));
  OuterWeights w;
  w.latent = gaussian(rng, Eigen::Index(l), di, 1.0);
  w.key = gaussian(rng, di, di, s);
  w.value = gaussian(rng, di, di, s);
  w.query = gaussian(rng, di, di, s);
  w.key_star = gaussian(rng, di, di, s);
  w.value_star = gaussian(rng, di, di, s);
  return w;
}

}  // namespace

VoxelGroups voxelize(std::span<const Point3> points, double voxel_size) {
  require(voxel_size > 0.0, "voxel size must be > 0");
  std::vector<VoxelCoord> per_point(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    per_point[i] = (points[i] / voxel_size).array().floor().cast<std::int64_t>();
  }
  const auto less = [](const VoxelCoord& a, const VoxelCoord& b) {
    return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
  };
  std::map<VoxelCoord, std::uint32_t, decltype(less)> ids(less);
  for (const VoxelCoord& c : per_point) ids.emplace(c, 0);

  VoxelGroups g;
  g.coords.reserve(ids.size());
  for (auto& [coord, id] : ids) {
    id = std::uint32_t(g.coords.size());
    g.coords.push_back(coord);
  }
  g.members.resize(ids.size());
  g.voxel_of.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::uint32_t v = ids.at(per_point[i]);
    g.voxel_of[i] = v;
    g.members[v].push_back(PointIndex(i));
  }
  return g;
}

Matrix scatter_softmax(const Matrix& scores, const VoxelGroups& groups) {
  require(std::size_t(scores.rows()) == groups.point_count(),
          "scores have " + std::to_string(scores.rows()) + " rows for " +
              std::to_string(groups.point_count()) + " points");
  Matrix out(scores.rows(), scores.cols());
  for (const auto& members : groups.members) {
    for (Eigen::Index col = 0; col < scores.cols(); ++col) {
      double peak = -std::numeric_limits<double>::infinity();
      for (PointIndex i : members) peak = std::max(peak, scores(i, col));
      double total = 0.0;
      for (PointIndex i : members) {
        out(i, col) = std::exp(scores(i, col) - peak);
        total += out(i, col);
      }
      for (PointIndex i : members) out(i, col) /= total;
    }
  }
  return out;
}

Tensor3 scatter_sum(const Tensor3& per_point, const VoxelGroups& groups) {
  require(per_point.dim0 == groups.point_count(), "scatter_sum: point count mismatch");
  Tensor3 out(groups.voxel_count(), per_point.dim1, per_point.dim2);
  for (std::size_t v = 0; v < groups.voxel_count(); ++v) {
    for (PointIndex i : groups.members[v]) {
      for (std::size_t b = 0; b < per_point.dim1; ++b) {
        const auto src = per_point.fiber(i, b);
        auto dst = out.fiber(v, b);
        for (std::size_t ch = 0; ch < src.size(); ++ch) dst[ch] += src[ch];
      }
    }
  }
  return out;
}

Tensor3 broadcast(const Tensor3& per_voxel, const VoxelGroups& groups) {
  require(per_voxel.dim0 == groups.voxel_count(), "broadcast: voxel count mismatch");
  Tensor3 out(groups.point_count(), per_voxel.dim1, per_voxel.dim2);
  for (std::size_t i = 0; i < groups.point_count(); ++i) {
    const std::size_t v = groups.voxel_of[i];
    for (std::size_t b = 0; b < per_voxel.dim1; ++b) {
      std::copy_n(per_voxel.fiber(v, b).begin(), per_voxel.dim2, out.fiber(i, b).begin());
    }
  }
  return out;
}

std::size_t WeightSet::compressed_width() const {
  return encoder.empty() ? width() : std::size_t(encoder.back().kernel.cols());
}

void WeightSet::validate() const {
  const auto d = Eigen::Index(width());
  require(d > 0 && outer.latent.rows() > 0, "latent queries must be non-empty");
  for (const Matrix* p : {&outer.key, &outer.value, &outer.query, &outer.key_star,
                          &outer.value_star}) {
    require(p->rows() == d && p->cols() == d,
            "outer projection is " + dims(*p) + ", expected " + std::to_string(d) + "x" +
                std::to_string(d));
  }
  Eigen::Index w = d;
  for (const ConvStage& s : encoder) {
    require(s.kernel.rows() == w, "encoder stage expects width " + std::to_string(w) +
                                      ", kernel is " + dims(s.kernel));
    w = s.kernel.cols();
    for (const Vector* v : {&s.gamma, &s.beta, &s.mean, &s.variance}) {
      require(v->size() == w, "batch-norm statistics must have width " + std::to_string(w));
    }
    require((s.variance.array() > 0.0).all(), "batch-norm variance must be > 0");
    require(s.eps >= 0.0, "batch-norm eps must be >= 0");
  }
  require(w <= d, "compressed width must not exceed the input width");
  require(ffn.depthwise1.rows() == 27 && ffn.depthwise1.cols() == w &&
              ffn.depthwise2.rows() == 27 && ffn.depthwise2.cols() == w,
          "depth-wise kernels must be 27 x " + std::to_string(w));
  for (const DeconvStage& s : decoder) {
    require(s.kernel.rows() == w, "decoder stage expects width " + std::to_string(w) +
                                      ", kernel is " + dims(s.kernel));
    w = s.kernel.cols();
    require(s.bias.size() == w, "decoder bias must have width " + std::to_string(w));
  }
  require(w == d, "decoder must end at width " + std::to_string(d));
}

WeightSet random_weights(std::size_t d, std::size_t d_compressed, std::size_t l,
                         std::uint64_t seed, std::size_t stages) {
  require(d_compressed >= 1 && d_compressed <= d, "need 1 <= d' <= d");
  require(stages >= 1, "need at least one encoder stage");
  std::mt19937_64 rng(seed);
  WeightSet w;
  w.outer = random_outer(rng, d, l);

  // Linear interpolation of widths from d down to d'.
  std::vector<std::size_t> widths{d};
  for (std::size_t s = 1; s <= stages; ++s) {
    widths.push_back(d - (d - d_compressed) * s / stages);
  }
  for (std::size_t s = 0; s < stages; ++s) {
    const auto in = Eigen::Index(widths[s]);
    const auto out = Eigen::Index(widths[s + 1]);
    ConvStage c;
    c.kernel = gaussian(rng, in, out, 1.0 / std::sqrt(double(in)));
    c.gamma = uniform(rng, out, 0.5, 1.5);
    c.beta = uniform(rng, out, -0.1, 0.1);
    c.mean = uniform(rng, out, -0.1, 0.1);
    c.variance = uniform(rng, out, 0.5, 1.5);
    w.encoder.push_back(std::move(c));
  }
  const auto dc = Eigen::Index(d_compressed);
  w.ffn.depthwise1 = gaussian(rng, 27, dc, 1.0 / std::sqrt(27.0));
  w.ffn.depthwise2 = gaussian(rng, 27, dc, 1.0 / std::sqrt(27.0));
  for (std::size_t s = stages; s > 0; --s) {
    const auto in = Eigen::Index(widths[s]);
    const auto out = Eigen::Index(widths[s - 1]);
    DeconvStage dec;
    dec.kernel = gaussian(rng, in, out, 1.0 / std::sqrt(double(in)));
    dec.bias = uniform(rng, out, -0.1, 0.1);
    w.decoder.push_back(std::move(dec));
  }
  return w;
}

WeightSet identity_inner_weights(std::size_t d, std::size_t l, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  WeightSet w;
  w.outer = random_outer(rng, d, l);
  const auto di = Eigen::Index(d);
  for (int s = 0; s < 2; ++s) {
    ConvStage c;
    c.kernel = Matrix::Identity(di, di);
    c.gamma = Vector::Ones(di);
    c.beta = Vector::Zero(di);
    c.mean = Vector::Zero(di);
    c.variance = Vector::Ones(di);
    c.eps = 0.0;
    w.encoder.push_back(std::move(c));
    w.decoder.push_back({Matrix::Identity(di, di), Vector::Zero(di)});
  }
  w.ffn.depthwise1 = Matrix::Zero(27, di);
  w.ffn.depthwise2 = Matrix::Zero(27, di);
  w.ffn.depthwise1.row(13).setOnes();
  w.ffn.depthwise2.row(13).setOnes();
  w.ffn.activation = Activation::Identity;
  return w;
}

namespace {

NamedTensor pack(const Matrix& m) {
  return {{std::size_t(m.rows()), std::size_t(m.cols())},
          std::vector<double>(m.data(), m.data() + m.size())};
}
NamedTensor pack(const Vector& v) {
  return {{std::size_t(v.size())}, std::vector<double>(v.data(), v.data() + v.size())};
}
const NamedTensor& find(const TensorMap& t, const std::string& name) {
  const auto it = t.find(name);
  if (it == t.end()) throw Error(ErrorCode::Format, "weight file lacks tensor " + name);
  return it->second;
}
Matrix unpack_matrix(const TensorMap& t, const std::string& name) {
  const NamedTensor& n = find(t, name);
  if (n.shape.size() != 2) throw Error(ErrorCode::Format, name + " must be rank 2");
  Matrix m(Eigen::Index(n.shape[0]), Eigen::Index(n.shape[1]));
  std::copy(n.data.begin(), n.data.end(), m.data());
  return m;
}
Vector unpack_vector(const TensorMap& t, const std::string& name) {
  const NamedTensor& n = find(t, name);
  if (n.shape.size() != 1) throw Error(ErrorCode::Format, name + " must be rank 1");
  return Eigen::Map<const Vector>(n.data.data(), Eigen::Index(n.data.size()));
}

}  // namespace

TensorMap to_tensors(const WeightSet& w) {
  TensorMap t;
  t["outer.latent"] = pack(w.outer.latent);
  t["outer.key"] = pack(w.outer.key);
  t["outer.value"] = pack(w.outer.value);
  t["outer.query"] = pack(w.outer.query);
  t["outer.key_star"] = pack(w.outer.key_star);
  t["outer.value_star"] = pack(w.outer.value_star);
  for (std::size_t s = 0; s < w.encoder.size(); ++s) {
    const std::string p = "encoder." + std::to_string(s) + ".";
    t[p + "kernel"] = pack(w.encoder[s].kernel);
    t[p + "gamma"] = pack(w.encoder[s].gamma);
    t[p + "beta"] = pack(w.encoder[s].beta);
    t[p + "mean"] = pack(w.encoder[s].mean);
    t[p + "variance"] = pack(w.encoder[s].variance);
    t[p + "eps"] = {{1}, {w.encoder[s].eps}};
  }
  t["ffn.depthwise1"] = pack(w.ffn.depthwise1);
  t["ffn.depthwise2"] = pack(w.ffn.depthwise2);
  t["ffn.activation"] = {{1}, {double(int(w.ffn.activation))}};
  for (std::size_t s = 0; s < w.decoder.size(); ++s) {
    const std::string p = "decoder." + std::to_string(s) + ".";
    t[p + "kernel"] = pack(w.decoder[s].kernel);
    t[p + "bias"] = pack(w.decoder[s].bias);
  }
  return t;
}

WeightSet weights_from_tensors(const TensorMap& t) {
  WeightSet w;
  w.outer.latent = unpack_matrix(t, "outer.latent");
  w.outer.key = unpack_matrix(t, "outer.key");
  w.outer.value = unpack_matrix(t, "outer.value");
  w.outer.query = unpack_matrix(t, "outer.query");
  w.outer.key_star = unpack_matrix(t, "outer.key_star");
  w.outer.value_star = unpack_matrix(t, "outer.value_star");
  for (std::size_t s = 0; t.count("encoder." + std::to_string(s) + ".kernel"); ++s) {
    const std::string p = "encoder." + std::to_string(s) + ".";
    ConvStage c;
    c.kernel = unpack_matrix(t, p + "kernel");
    c.gamma = unpack_vector(t, p + "gamma");
    c.beta = unpack_vector(t, p + "beta");
    c.mean = unpack_vector(t, p + "mean");
    c.variance = unpack_vector(t, p + "variance");
    c.eps = unpack_vector(t, p + "eps")[0];
    w.encoder.push_back(std::move(c));
  }
  w.ffn.depthwise1 = unpack_matrix(t, "ffn.depthwise1");
  w.ffn.depthwise2 = unpack_matrix(t, "ffn.depthwise2");
  const int act = int(unpack_vector(t, "ffn.activation")[0]);
  if (act < 0 || act > 2) throw Error(ErrorCode::Format, "unknown activation id");
  w.ffn.activation = Activation(act);
  for (std::size_t s = 0; t.count("decoder." + std::to_string(s) + ".kernel"); ++s) {
    const std::string p = "decoder." + std::to_string(s) + ".";
    w.decoder.push_back({unpack_matrix(t, p + "kernel"), unpack_vector(t, p + "bias")});
  }
  w.validate();
  return w;
}

EncodeResult vsa_encode(const Matrix& features, const OuterWeights& weights,
                        const VoxelGroups& groups) {
  const Eigen::Index d = features.cols();
  require(weights.key.rows() == d && weights.value.rows() == d && weights.latent.cols() == d,
          "projection widths do not match feature width " + std::to_string(d));
  require(std::size_t(features.rows()) == groups.point_count(),
          "feature rows do not match the voxel assignment");
  EncodeResult r;
  r.key = features * weights.key;
  r.value = features * weights.value;
  r.attention = scatter_softmax(r.key * weights.latent.transpose(), groups);

  const auto m = std::size_t(features.rows());
  const auto l = std::size_t(weights.latent.rows());
  r.pointwise = Tensor3(m, l, std::size_t(d));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < l; ++j) {
      const double a = r.attention(Eigen::Index(i), Eigen::Index(j));
      auto dst = r.pointwise.fiber(i, j);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = a * r.value(Eigen::Index(i), Eigen::Index(c));
    }
  }
  r.voxelwise = scatter_sum(r.pointwise, groups);
  return r;
}

BottleneckResult inner_bottleneck(const Tensor3& voxelwise, const WeightSet& weights,
                                  const VoxelGroups& groups) {
  weights.validate();
  require(voxelwise.dim0 == groups.voxel_count(), "voxel tensor does not match the grid");
  require(voxelwise.dim2 == weights.width(),
          "voxel tensor width " + std::to_string(voxelwise.dim2) + " != " +
              std::to_string(weights.width()));

  BottleneckResult r;
  Tensor3 x = voxelwise;
  for (const ConvStage& s : weights.encoder) {
    x = pointwise_linear(x, s.kernel);
    for (std::size_t a = 0; a < x.dim0; ++a) {
      for (std::size_t b = 0; b < x.dim1; ++b) {
        auto f = x.fiber(a, b);
        for (std::size_t c = 0; c < f.size(); ++c) {
          const auto ci = Eigen::Index(c);
          f[c] = s.gamma[ci] * (f[c] - s.mean[ci]) / std::sqrt(s.variance[ci] + s.eps) +
                 s.beta[ci];
        }
      }
    }
  }
  r.compressed = x;

  Tensor3 y = depthwise_conv(x, weights.ffn.depthwise1, groups);
  for (double& v : y.data) v = activate(v, weights.ffn.activation);
  r.mixed = depthwise_conv(y, weights.ffn.depthwise2, groups);

  Tensor3 z = r.mixed;
  for (const DeconvStage& s : weights.decoder) {
    z = pointwise_linear(z, s.kernel);
    for (std::size_t a = 0; a < z.dim0; ++a) {
      for (std::size_t b = 0; b < z.dim1; ++b) {
        auto f = z.fiber(a, b);
        for (std::size_t c = 0; c < f.size(); ++c) f[c] += s.bias[Eigen::Index(c)];
      }
    }
  }
  r.reconstructed = std::move(z);
  return r;
}

DecodeResult vsa_decode(const Tensor3& voxelwise, const Matrix& features,
                        const OuterWeights& weights, const VoxelGroups& groups) {
  const Eigen::Index d = features.cols();
  require(std::size_t(d) == voxelwise.dim2, "decoder width mismatch: features " +
                                                std::to_string(d) + " vs voxels " +
                                                voxelwise.shape_string());
  require(weights.query.rows() == d && weights.key_star.rows() == d &&
              weights.value_star.rows() == d,
          "decoder projections do not match width " + std::to_string(d));
  require(std::size_t(features.rows()) == groups.point_count(),
          "feature rows do not match the voxel assignment");

  DecodeResult r;
  r.broadcast = broadcast(voxelwise, groups);
  r.query = features * weights.query;
  const auto m = r.broadcast.dim0;
  const auto l = Eigen::Index(r.broadcast.dim1);
  r.attention = Matrix(Eigen::Index(m), l);
  r.output = Matrix::Zero(Eigen::Index(m), d);
  for (std::size_t i = 0; i < m; ++i) {
    const Eigen::Map<const Matrix> hat(r.broadcast.fiber(i, 0).data(), l, d);
    const Matrix k_star = hat * weights.key_star;
    const Matrix v_star = hat * weights.value_star;
    Vector scores = k_star * r.query.row(Eigen::Index(i)).transpose();
    const double peak = scores.maxCoeff();
    scores = (scores.array() - peak).exp();
    scores /= scores.sum();
    r.attention.row(Eigen::Index(i)) = scores.transpose();
    r.output.row(Eigen::Index(i)) = scores.transpose() * v_star;
  }
  return r;
}

Matrix pointwise_embedding(const Tensor3& compressed, const VoxelGroups& groups) {
  const Tensor3 per_point = broadcast(compressed, groups);
  return Eigen::Map<const Matrix>(per_point.data.data(), Eigen::Index(per_point.dim0),
                                  Eigen::Index(per_point.dim1 * per_point.dim2));
}

double similarity(std::span<const double> a, std::span<const double> b, Similarity sim) {
  require(a.size() == b.size(), "similarity of vectors with different widths");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (sim == Similarity::Dot) return dot;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

ContrastiveLoss contrastive_loss(const Matrix& embeddings, std::span<const Label> labels,
                                 std::span<const Point3> coordinates, double alpha,
                                 Similarity sim) {
  const auto m = std::size_t(embeddings.rows());
  require(labels.size() == m && coordinates.size() == m,
          "embeddings, labels and coordinates must describe the same points");
  ContrastiveLoss out;
  if (m == 0) return out;

  std::map<Label, std::vector<PointIndex>> by_class;
  for (std::size_t i = 0; i < m; ++i) by_class[labels[i]].push_back(PointIndex(i));
  out.negatives_undefined = by_class.size() < 2;

  const DistanceMetric metric(coordinates);
  std::vector<NearestHit> positive(m), negative(m);
  for (const auto& [label, members] : by_class) {
    const auto pos = nearest_in(members, members, metric);
    std::vector<PointIndex> others;
    others.reserve(m - members.size());
    for (std::size_t i = 0; i < m; ++i) {
      if (labels[i] != label) others.push_back(PointIndex(i));
    }
    const auto neg = nearest_in(members, others, metric);
    for (std::size_t t = 0; t < members.size(); ++t) {
      positive[members[t]] = pos[t];
      negative[members[t]] = neg[t];
    }
  }

  const auto row = [&](std::size_t i) {
    return std::span<const double>(embeddings.row(Eigen::Index(i)).data(),
                                   std::size_t(embeddings.cols()));
  };
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double term = 0.0;
    if (positive[i].found) {
      term += std::max(0.0, alpha - similarity(row(i), row(positive[i].index), sim));
    } else {
      ++out.missing_positive;
    }
    if (negative[i].found) {
      term += std::max(0.0, similarity(row(i), row(negative[i].index), sim) - alpha);
    }
    total += term;
  }
  out.value = total / double(m);
  return out;
}

double reconstruction_loss(const Matrix& features, const Matrix& reconstructed) {
  require(features.rows() == reconstructed.rows() && features.cols() == reconstructed.cols(),
          "reconstruction shape " + dims(reconstructed) + " != " + dims(features));
  if (features.size() == 0) return 0.0;
  return (features - reconstructed).squaredNorm() / double(features.size());
}

double total_loss(double recon, double contr, double lambda) {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");
  return recon + lambda * contr;
}

}  // namespace rapid
