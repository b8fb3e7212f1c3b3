#pragma once

#include "rapid/run_config.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace rapid::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kInvariant = 3 };

/// Writes R-RAPiD (and C-RAPiD when labels are available) feature containers
/// into config.output_dir and prints per-RoI statistics.
int cmd_extract(const RunConfig& config, std::ostream& out);

struct InvarianceOptions {
  int trials = 20;
  bool identity = false;   // every trial uses the identity transform
  bool non_rigid = false;  // anisotropic scaling, expected to fail
  double tolerance = 1e-6;
};

/// Recomputes features under random rigid motions with the regions of
/// interest fixed from the original scan; exit 3 when the deviation exceeds
/// the tolerance.
int cmd_check_invariance(const RunConfig& config, const InvarianceOptions& options,
                         std::ostream& out);

struct EvalOptions {
  std::filesystem::path truth_dir;
  std::filesystem::path pred_dir;
  std::size_t classes = 20;
  std::vector<std::uint32_t> ignore{0};
  std::filesystem::path csv;  // default: <output_dir>/eval.csv
};

int cmd_eval(const RunConfig& config, const EvalOptions& options, std::ostream& out);

struct BenchOptions {
  std::vector<std::size_t> workers{1, 2, 4, 8};
  int repeats = 1;
  std::filesystem::path csv;  // default: <output_dir>/bench.csv
};

int cmd_bench(const RunConfig& config, const BenchOptions& options, std::ostream& out);

/// Grayscale binary PGM, width k, height u, 0 -> black, 1 -> white.
int cmd_heatmap(const std::filesystem::path& features, std::int64_t roi_id,
                const std::filesystem::path& image, std::ostream& out);

/// Forward pass of the embedding math on the scan's R-RAPiD features, plus
/// losses and channel-attention fusion; writes <output_dir>/embed.json.
int cmd_embed(const RunConfig& config, std::ostream& out);

/// Writes the configured synthetic scene as a KITTI .bin/.label pair.
int cmd_synth(const RunConfig& config, const std::filesystem::path& scan,
              const std::filesystem::path& labels, std::ostream& out);

/// Scan from config.scan (+ labels) or, when unset, the synthetic street scene.
PointCloud load_input(const RunConfig& config);

/// Row-major PGM bytes for one matrix.
std::vector<std::byte> render_pgm(const RapidMatrix& matrix);

}  // namespace rapid::cli
