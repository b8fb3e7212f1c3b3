#include "commands.hpp"

#include "rapid/container.hpp"
#include "rapid/embed.hpp"
#include "rapid/error.hpp"
#include "rapid/fusion.hpp"
#include "rapid/geometry.hpp"
#include "rapid/metrics.hpp"
#include "rapid/partition.hpp"
#include "rapid/scene_io.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>
#include <thread>

namespace rapid::cli {

namespace fs = std::filesystem;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
  f << text;
}

ExtractOptions options_for(const RunConfig& config, StageTimes* times = nullptr) {
  ExtractOptions o;
  o.workers = config.workers;
  o.times = times;
  return o;
}

void print_stats(std::ostream& out, const char* title, const FeatureExtraction& fx) {
  std::size_t rows = 0, padded_rows = 0, padded = 0, outliers = 0;
  std::array<std::size_t, 10> hist{};
  fmt::print(out, "{}: {} regions\n", title, fx.matrices.size());
  fmt::print(out, "  {:>8} {:>6} {:>5} {:>3} {:>6} {:>8}\n", "roi", "band", "rows", "k", "padded",
             "outliers");
  for (const RapidMatrix& m : fx.matrices) {
    fmt::print(out, "  {:>8} {:>6} {:>5} {:>3} {:>6} {:>8}\n", m.roi_id, to_string(m.band),
               m.rows(), m.k, m.padded ? "yes" : "no", m.outliers);
    rows += m.rows();
    outliers += m.outliers;
    if (m.padded) {
      ++padded;
      padded_rows += m.rows();
      continue;
    }
    for (double v : m.values) hist[std::min<std::size_t>(9, std::size_t(v * 10.0))]++;
  }
  const double rate = rows ? double(padded_rows) / double(rows) : 0.0;
  fmt::print(out, "  points {}  padded regions {}  padding rate {:.4f}  outliers {}\n", rows,
             padded, rate, outliers);
  fmt::print(out, "  value histogram (10 bins over [0, 1], padded regions excluded):\n");
  for (std::size_t b = 0; b < hist.size(); ++b) {
    fmt::print(out, "    [{:.1f}, {:.1f}{} {}\n", b / 10.0, (b + 1) / 10.0, b == 9 ? "]" : ")",
               hist[b]);
  }
}

/// Largest elementwise gap between two extractions over the same plan;
/// infinite when the shapes or anchors disagree.
double max_deviation(const std::vector<RapidMatrix>& a, const std::vector<RapidMatrix>& b,
                     bool raw) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (a.size() != b.size()) return inf;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = raw ? a[i].raw : a[i].values;
    const auto& y = raw ? b[i].raw : b[i].values;
    if (x.size() != y.size() || a[i].k != b[i].k) return inf;
    if (a[i].padded != b[i].padded) return inf;
    if (a[i].padded) continue;
    for (std::size_t j = 0; j < x.size(); ++j) worst = std::max(worst, std::abs(x[j] - y[j]));
  }
  return worst;
}

std::vector<fs::path> label_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".label") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

/// G: pointwise rows padded with 1.0 (or cut) to `width` columns.
Matrix feature_matrix(const PointwiseFeatureSet& set, std::size_t width) {
  Matrix g = Matrix::Ones(Eigen::Index(set.size()), Eigen::Index(width));
  const std::size_t cols = std::min<std::size_t>(width, set.width);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto row = set.row(i);
    for (std::size_t c = 0; c < cols; ++c) g(Eigen::Index(i), Eigen::Index(c)) = row[c];
  }
  return g;
}

nlohmann::json summary(const Tensor3& t) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
  for (double v : t.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    sum += v;
  }
  const double mean = t.data.empty() ? 0.0 : sum / double(t.data.size());
  return {{"shape", {t.dim0, t.dim1, t.dim2}}, {"min", lo}, {"max", hi}, {"mean", mean}};
}

}  // namespace

PointCloud load_input(const RunConfig& config) {
  if (config.scan.empty()) {
    return synthesize_scene(street_scene(config.synthetic_seed, config.sensor(),
                                         config.noise_sigma));
  }
  PointCloud cloud = config.scan.extension() == ".csv" ? load_csv_cloud(config.scan)
                                                       : load_kitti_scan(config.scan);
  if (!config.labels.empty()) cloud = load_kitti_labels(config.labels, cloud);
  return cloud;
}

int cmd_extract(const RunConfig& config, std::ostream& out) {
  const PointCloud cloud = load_input(config);
  fmt::print(out, "scan: {} points, labels {}, native rings {}\n", cloud.size(),
             cloud.has_labels() ? "yes" : "no", cloud.has_ring() ? "yes" : "no");
  fs::create_directories(config.output_dir);

  const FeatureExtraction ring = r_rapid(cloud, config.sensor(), config.features,
                                         options_for(config));
  save_features(ring.matrices, config.output_dir / "r_rapid.rapd");
  print_stats(out, "r-rapid", ring);

  if (cloud.has_labels()) {
    const FeatureExtraction cls = c_rapid(cloud, config.features, options_for(config));
    save_features(cls.matrices, config.output_dir / "c_rapid.rapd");
    print_stats(out, "c-rapid", cls);
  } else {
    fmt::print(out, "c-rapid: skipped, no labels\n");
  }
  return kOk;
}

int cmd_check_invariance(const RunConfig& config, const InvarianceOptions& options,
                         std::ostream& out) {
  if (options.trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
  const PointCloud cloud = load_input(config);
  const auto rois = plan_ring_rois(cloud, config.sensor(), config.features);
  const FeatureExtraction base = extract(cloud, rois, config.features, options_for(config));

  std::mt19937_64 rng(config.seed);
  double worst = 0.0, worst_raw = 0.0;
  for (int t = 0; t < options.trials; ++t) {
    PointCloud moved;
    if (options.identity) {
      moved = apply_transform(cloud, RigidTransform::identity());
    } else if (options.non_rigid) {
      std::uniform_real_distribution<double> s(0.5, 2.0);
      const Eigen::Vector3d diag(s(rng), s(rng), s(rng));
      moved = apply_affine(cloud, diag.asDiagonal().toDenseMatrix(), Eigen::Vector3d::Zero());
    } else {
      moved = apply_transform(cloud, random_rigid_transform(rng, 100.0));
    }
    const FeatureExtraction fx = extract(moved, rois, config.features, options_for(config));
    const double dev = max_deviation(base.matrices, fx.matrices, false);
    const double dev_raw = max_deviation(base.matrices, fx.matrices, true);
    worst = std::max(worst, dev);
    worst_raw = std::max(worst_raw, dev_raw);
  }
  const bool pass = worst <= options.tolerance;
  fmt::print(out, "trials {}  points {}  regions {}\n", options.trials, cloud.size(), rois.size());
  fmt::print(out, "max deviation normalized {:.3e}  raw {:.3e}  tolerance {:.1e}  {}\n", worst,
             worst_raw, options.tolerance, pass ? "PASS" : "FAIL");
  return pass ? kOk : kInvariant;
}

int cmd_eval(const RunConfig& config, const EvalOptions& options, std::ostream& out) {
  const auto truth = label_files(options.truth_dir);
  const auto pred = label_files(options.pred_dir);
  if (truth.empty()) throw Error(ErrorCode::Io, "no .label files in " + options.truth_dir.string());
  if (truth.size() != pred.size()) {
    throw Error(ErrorCode::LabelMismatch,
                fmt::format("{} truth files vs {} prediction files", truth.size(), pred.size()));
  }
  ConfusionMatrix cm(options.classes, options.ignore);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i].filename() != pred[i].filename()) {
      throw Error(ErrorCode::LabelMismatch, "unaligned scan lists: " +
                                                truth[i].filename().string() + " vs " +
                                                pred[i].filename().string());
    }
    const auto t = decode_kitti_labels(read_file(truth[i]));
    const auto p = decode_kitti_labels(read_file(pred[i]));
    if (t.size() != p.size()) {
      throw Error(ErrorCode::LabelMismatch,
                  fmt::format("{}: {} truth vs {} predicted labels", truth[i].filename().string(),
                              t.size(), p.size()));
    }
    cm.accumulate(t, p);
  }
  const double mean = miou(cm);

  std::string csv = "class,tp,fp,fn,iou\n";
  fmt::print(out, "{:>5} {:>10} {:>10} {:>10} {:>8}\n", "class", "tp", "fp", "fn", "iou");
  for (Label c = 0; c < options.classes; ++c) {
    if (cm.ignored(c)) continue;
    const auto v = iou(cm, c);
    const std::string shown = v ? fmt::format("{:.6f}", *v) : "";
    csv += fmt::format("{},{},{},{},{}\n", c, cm.true_positives(c), cm.false_positives(c),
                       cm.false_negatives(c), shown);
    fmt::print(out, "{:>5} {:>10} {:>10} {:>10} {:>8}\n", c, cm.true_positives(c),
               cm.false_positives(c), cm.false_negatives(c), v ? shown : "n/a");
  }
  csv += fmt::format("miou,,,,{:.6f}\n", mean);
  fmt::print(out, "mIoU {:.6f} over {} scans\n", mean, truth.size());
  write_text(options.csv.empty() ? config.output_dir / "eval.csv" : options.csv, csv);
  return kOk;
}

int cmd_bench(const RunConfig& config, const BenchOptions& options, std::ostream& out) {
  if (options.workers.empty() || options.repeats < 1) {
    throw Error(ErrorCode::InvalidArgument, "bench needs worker counts and repeats >= 1");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const PointCloud cloud = load_input(config);
  const double load = seconds_since(t0);

  std::string csv = "workers,repeat,points,load_s,partition_s,knn_s,sort_s,normalize_s,total_s\n";
  fmt::print(out, "{:>7} {:>6} {:>8} {:>8} {:>9} {:>8} {:>8} {:>9} {:>8}\n", "workers", "repeat",
             "points", "load", "partition", "knn", "sort", "normalize", "total");
  std::vector<std::byte> reference;
  bool identical = true;
  double base_total = 0.0;
  for (std::size_t w : options.workers) {
    for (int r = 0; r < options.repeats; ++r) {
      RunConfig c = config;
      c.workers = w;
      StageTimes times;
      const FeatureExtraction fx = r_rapid(cloud, c.sensor(), c.features, options_for(c, &times));
      const double total = times.partition + times.knn + times.sort + times.normalize;
      const auto bytes = encode_features(fx.matrices);
      if (reference.empty()) {
        reference = bytes;
        base_total = total;
      } else if (bytes != reference) {
        identical = false;
      }
      csv += fmt::format("{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", w, r,
                         cloud.size(), load, times.partition, times.knn, times.sort,
                         times.normalize, total);
      fmt::print(out, "{:>7} {:>6} {:>8} {:>8.4f} {:>9.4f} {:>8.4f} {:>8.4f} {:>9.4f} {:>8.4f}"
                      "  x{:.2f}\n",
                 w, r, cloud.size(), load, times.partition, times.knn, times.sort,
                 times.normalize, total, total > 0 ? base_total / total : 0.0);
    }
  }
  fmt::print(out, "hardware threads {}  feature bytes identical across runs: {}\n",
             std::thread::hardware_concurrency(), identical ? "yes" : "no");
  write_text(options.csv.empty() ? config.output_dir / "bench.csv" : options.csv, csv);
  return identical ? kOk : kInvariant;
}

std::vector<std::byte> render_pgm(const RapidMatrix& matrix) {
  const std::string header = fmt::format("P5\n{} {}\n255\n", matrix.k, matrix.rows());
  std::vector<std::byte> bytes;
  bytes.reserve(header.size() + matrix.values.size());
  for (char ch : header) bytes.push_back(std::byte(ch));
  for (double v : matrix.values) {
    const double px = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
    bytes.push_back(std::byte(static_cast<unsigned char>(px)));
  }
  return bytes;
}

int cmd_heatmap(const fs::path& features, std::int64_t roi_id, const fs::path& image,
                std::ostream& out) {
  const auto matrices = load_features(features);
  const auto it = std::find_if(matrices.begin(), matrices.end(),
                               [&](const RapidMatrix& m) { return m.roi_id == roi_id; });
  if (it == matrices.end()) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("roi {} not found in {}", roi_id, features.string()));
  }
  if (image.has_parent_path()) fs::create_directories(image.parent_path());
  write_file(image, render_pgm(*it));
  fmt::print(out, "roi {}: {} x {} image written to {}\n", roi_id, it->k, it->rows(),
             image.string());
  return kOk;
}

int cmd_embed(const RunConfig& config, std::ostream& out) {
  const PointCloud cloud = load_input(config);
  if (!cloud.has_labels()) {
    throw Error(ErrorCode::LabelsRequired, "the contrastive loss needs per-point labels");
  }
  const FeatureExtraction fx = r_rapid(cloud, config.sensor(), config.features,
                                       options_for(config));
  const Matrix g = feature_matrix(fx.pointwise, config.width);
  const VoxelGroups groups = voxelize(cloud.points(), config.voxel_size);

  WeightSet weights;
  if (!config.weights.empty()) {
    weights = weights_from_tensors(load_tensors(config.weights));
    if (weights.width() != config.width || weights.latent_count() != config.latent) {
      throw Error(ErrorCode::InvalidArgument, "weight file does not match embedding.width/latent");
    }
  } else {
    weights = random_weights(config.width, config.compressed, config.latent, config.seed,
                             config.stages);
  }
  weights.ffn.activation = config.activation;
  weights.validate();

  const EncodeResult enc = vsa_encode(g, weights.outer, groups);
  const BottleneckResult inner = inner_bottleneck(enc.voxelwise, weights, groups);
  const DecodeResult dec = vsa_decode(inner.reconstructed, g, weights.outer, groups);
  const Matrix emb = pointwise_embedding(inner.compressed, groups);

  const double recon = reconstruction_loss(g, dec.output);
  const ContrastiveLoss contr =
      contrastive_loss(emb, cloud.labels(), cloud.points(), config.alpha, config.similarity);
  const double total = total_loss(recon, contr.value, config.lambda);

  // Coordinate and intensity branches: the same attention pooling over
  // (x, y, z) and (I, J) with their own seeded projections.
  const std::size_t m = cloud.size();
  Matrix fc(Eigen::Index(m), 3), fi(Eigen::Index(m), 2);
  for (std::size_t i = 0; i < m; ++i) {
    fc.row(Eigen::Index(i)) = cloud.point(i).transpose();
    fi(Eigen::Index(i), 0) = cloud.remission(i);
    fi(Eigen::Index(i), 1) = cloud.remission(i);
  }
  const auto coord_w = random_weights(3, 1, config.latent, config.seed + 1, 1).outer;
  const auto inten_w = random_weights(2, 1, config.latent, config.seed + 2, 1).outer;
  const std::array<Tensor3, 3> parts{vsa_encode(fc, coord_w, groups).voxelwise,
                                     vsa_encode(fi, inten_w, groups).voxelwise, inner.compressed};
  const std::size_t channels = parts[0].dim2 + parts[1].dim2 + parts[2].dim2;
  const FusionGate gate = random_gate(channels, config.fusion_ratio, config.seed + 3);
  const FusedTensor fused = fuse_embeddings(parts, gate);

  nlohmann::json report;
  report["points"] = m;
  report["voxels"] = groups.voxel_count();
  report["latent"] = config.latent;
  report["width"] = config.width;
  report["compressed"] = weights.compressed_width();
  report["loss"] = {{"reconstruction", recon},
                    {"contrastive", contr.value},
                    {"total", total},
                    {"missing_positive", contr.missing_positive},
                    {"negatives_undefined", contr.negatives_undefined},
                    {"alpha", config.alpha},
                    {"lambda", config.lambda}};
  report["fusion"] = {{"channels", channels},
                      {"descriptor", std::vector<double>(fused.descriptor.begin(),
                                                         fused.descriptor.end())},
                      {"attention", std::vector<double>(fused.attention.begin(),
                                                        fused.attention.end())},
                      {"fused", summary(fused.fused)}};
  report["embedding"] = summary(inner.compressed);

  fs::create_directories(config.output_dir);
  write_text(config.output_dir / "embed.json", report.dump(2) + "\n");
  fmt::print(out, "points {}  voxels {}  l {}  d {}  d' {}\n", m, groups.voxel_count(),
             config.latent, config.width, weights.compressed_width());
  fmt::print(out, "recon {:.6g}  contr {:.6g}  total {:.6g}\n", recon, contr.value, total);
  fmt::print(out, "fusion attention [{:.4f}]\n", fmt::join(fused.attention, ", "));
  return kOk;
}

int cmd_synth(const RunConfig& config, const fs::path& scan, const fs::path& labels,
              std::ostream& out) {
  const PointCloud cloud = synthesize_scene(
      street_scene(config.synthetic_seed, config.sensor(), config.noise_sigma));
  if (scan.has_parent_path()) fs::create_directories(scan.parent_path());
  save_kitti_scan(scan, cloud);
  if (!labels.empty()) {
    if (labels.has_parent_path()) fs::create_directories(labels.parent_path());
    save_kitti_labels(labels, cloud.labels());
  }
  fmt::print(out, "{} points written to {}\n", cloud.size(), scan.string());
  return kOk;
}

}  // namespace rapid::cli
