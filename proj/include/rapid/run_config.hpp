#pragma once

#include "rapid/embed.hpp"
#include "rapid/point_cloud.hpp"
#include "rapid/rapid.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace rapid {

/// Everything a pipeline run reads. Loaded from one JSON document whose
/// sections mirror the members below; every key is optional and falls back
/// to the default shown here.
///
/// {
///   "input":     {"scan": "", "labels": "", "synthetic_seed": 7, "noise_sigma": 0.01},
///   "sensor":    {"beams": 64, "fov_up_deg": 3.0, "fov_down_deg": -25.0, "columns": 2048},
///   "features":  {"preset": "semantic-kitti", "k": [10, 7, 5],
///                 "band_edges": [20.0, 50.0], "delta": 2.0},
///   "embedding": {"voxel_size": 0.2, "latent": 4, "width": 10, "compressed": 4,
///                 "stages": 2, "activation": "gelu", "weights": ""},
///   "fusion":    {"ratio": 4},
///   "loss":      {"alpha": 0.5, "lambda": 0.1, "similarity": "cosine"},
///   "run":       {"workers": 1, "seed": 0},
///   "output":    {"dir": "out"}
/// }
///
/// "preset" is "semantic-kitti" (k = 10, 7, 5) or "nuscenes" (k = 8, 6, 3); an
/// explicit "k" wins over the preset.
struct RunConfig {
  std::filesystem::path scan;
  std::filesystem::path labels;
  std::uint64_t synthetic_seed = 7;
  double noise_sigma = 0.01;

  std::uint32_t beams = 64;
  double fov_up_deg = 3.0;
  double fov_down_deg = -25.0;
  std::uint32_t columns = 2048;

  RangeAwareConfig features;

  double voxel_size = 0.2;
  std::size_t latent = 4;
  std::size_t width = 10;
  std::size_t compressed = 4;
  std::size_t stages = 2;
  Activation activation = Activation::Gelu;
  std::filesystem::path weights;

  std::size_t fusion_ratio = 4;

  double alpha = 0.5;
  double lambda = 0.1;
  Similarity similarity = Similarity::Cosine;

  std::size_t workers = 1;
  std::uint64_t seed = 0;

  std::filesystem::path output_dir = "out";

  SensorGeometry sensor() const;
  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string dump_run_config(const RunConfig& config);

}  // namespace rapid
