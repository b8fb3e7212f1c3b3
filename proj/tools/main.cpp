#include "commands.hpp"

#include "rapid/error.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

using namespace rapid;

/// Flags shared by every subcommand; set values win over the config file.
struct Overrides {
  std::string config;
  std::string scan;
  std::string labels;
  std::string out;
  std::string preset;
  std::vector<std::uint32_t> k;
  std::optional<double> delta;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config, "JSON run config")->check(CLI::ExistingFile);
    app->add_option("--scan", scan, "KITTI .bin or .csv scan (default: synthetic scene)");
    app->add_option("--labels", labels, "KITTI .label file (ground truth or pseudo labels)");
    app->add_option("-o,--out", out, "output directory");
    app->add_option("--preset", preset, "k preset")
        ->check(CLI::IsMember({"semantic-kitti", "nuscenes"}));
    app->add_option("--k", k, "k for close, mid, far bands")->expected(3);
    app->add_option("--delta", delta, "outlier threshold in meters");
    app->add_option("-j,--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "random seed");
  }

  RunConfig resolve() const {
    RunConfig c = config.empty() ? RunConfig{} : load_run_config(config);
    if (!scan.empty()) c.scan = scan;
    if (!labels.empty()) c.labels = labels;
    if (!out.empty()) c.output_dir = out;
    if (preset == "semantic-kitti") c.features = RangeAwareConfig::semantic_kitti();
    if (preset == "nuscenes") c.features = RangeAwareConfig::nuscenes();
    if (k.size() == 3) {
      c.features.k_close = k[0];
      c.features.k_mid = k[1];
      c.features.k_far = k[2];
    }
    if (delta) c.features.delta = *delta;
    if (workers) c.workers = *workers;
    if (seed) c.seed = *seed;
    c.validate();
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RAPiD feature extraction for LiDAR scans"};
  app.require_subcommand(1);

  Overrides extract_flags, inv_flags, eval_flags, bench_flags, embed_flags, synth_flags;

  auto* extract = app.add_subcommand("extract", "write ring and class feature containers");
  extract_flags.attach(extract);

  cli::InvarianceOptions inv;
  auto* check = app.add_subcommand("check-invariance", "recompute under random rigid motions");
  inv_flags.attach(check);
  check->add_option("--trials", inv.trials)->check(CLI::PositiveNumber);
  check->add_flag("--identity", inv.identity, "use the identity transform");
  check->add_flag("--non-rigid", inv.non_rigid, "use anisotropic scaling (negative control)");
  check->add_option("--tolerance", inv.tolerance);

  cli::EvalOptions ev;
  std::string truth_dir, pred_dir, eval_csv;
  auto* eval = app.add_subcommand("eval", "per-class IoU and mIoU over label directories");
  eval_flags.attach(eval);
  eval->add_option("--truth", truth_dir)->required();
  eval->add_option("--pred", pred_dir)->required();
  eval->add_option("--classes", ev.classes);
  eval->add_option("--ignore", ev.ignore, "ignored truth classes");
  eval->add_option("--csv", eval_csv);

  cli::BenchOptions bench_opts;
  std::string bench_csv;
  auto* bench = app.add_subcommand("bench", "stage timings and worker scaling");
  bench_flags.attach(bench);
  bench->add_option("--worker-counts", bench_opts.workers)->check(CLI::PositiveNumber);
  bench->add_option("--repeats", bench_opts.repeats)->check(CLI::PositiveNumber);
  bench->add_option("--csv", bench_csv);

  std::string features, image;
  std::int64_t roi = 0;
  auto* heatmap = app.add_subcommand("heatmap", "render one feature matrix as PGM");
  heatmap->add_option("features", features)->required()->check(CLI::ExistingFile);
  heatmap->add_option("roi", roi)->required();
  heatmap->add_option("image", image)->required();

  auto* embed = app.add_subcommand("embed", "embedding forward pass, losses and fusion");
  embed_flags.attach(embed);

  std::string synth_scan, synth_labels;
  auto* synth = app.add_subcommand("synth", "write the synthetic street scene");
  synth_flags.attach(synth);
  synth->add_option("scan_out", synth_scan)->required();
  synth->add_option("labels_out", synth_labels);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kUsage;
  }

  try {
    if (*extract) return cli::cmd_extract(extract_flags.resolve(), std::cout);
    if (*check) {
      if (inv.identity && inv.non_rigid) {
        std::cerr << "--identity and --non-rigid are exclusive\n";
        return cli::kUsage;
      }
      return cli::cmd_check_invariance(inv_flags.resolve(), inv, std::cout);
    }
    if (*eval) {
      ev.truth_dir = truth_dir;
      ev.pred_dir = pred_dir;
      ev.csv = eval_csv;
      return cli::cmd_eval(eval_flags.resolve(), ev, std::cout);
    }
    if (*bench) {
      bench_opts.csv = bench_csv;
      return cli::cmd_bench(bench_flags.resolve(), bench_opts, std::cout);
    }
    if (*heatmap) return cli::cmd_heatmap(features, roi, image, std::cout);
    if (*embed) return cli::cmd_embed(embed_flags.resolve(), std::cout);
    if (*synth) return cli::cmd_synth(synth_flags.resolve(), synth_scan, synth_labels, std::cout);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::Contract ? cli::kInvariant : cli::kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kData;
  }
  return cli::kUsage;
}
