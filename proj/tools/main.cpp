// choroidtool: batch front end for the choroid analysis library.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "choroid/config.hpp"
#include "choroid/error.hpp"
#include "choroid/pipeline.hpp"

namespace fs = std::filesystem;
using namespace choroid;

namespace {

constexpr int kExitInvalid = 2;

struct CommonFlags {
  std::string config_path;
  std::string segmenter;
  std::optional<std::size_t> niblack_window;
  std::optional<double> niblack_k;
  std::optional<double> microns_per_px_y;
  std::optional<std::size_t> jobs;
  std::string vi_convention;
  bool pooled_auc = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "INI/TOML-style config file")->check(CLI::ExistingFile);
  cmd->add_option("--segmenter", f.segmenter, "mmcq | niblack | probability")
      ->check(CLI::IsMember({"mmcq", "niblack", "probability"}));
  cmd->add_option("--niblack-window", f.niblack_window, "Niblack window (odd, >= 3)");
  cmd->add_option("--niblack-k", f.niblack_k, "Niblack k");
  cmd->add_option("--microns-per-px-y", f.microns_per_px_y,
                  "vertical scale for scans without a sidecar");
  cmd->add_option("-j,--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--vi-convention", f.vi_convention, "total | non_vessel")
      ->check(CLI::IsMember({"total", "non_vessel"}));
}

// File values first, then explicit flags on top.
PipelineConfig resolve(const CommonFlags& f) {
  PipelineConfig cfg;
  if (!f.config_path.empty()) cfg = load_config(f.config_path, cfg);
  if (!f.segmenter.empty()) cfg.segmenter = parse_segmenter(f.segmenter);
  if (f.niblack_window) cfg.niblack.window = *f.niblack_window;
  if (f.niblack_k) cfg.niblack.k = *f.niblack_k;
  if (f.microns_per_px_y) cfg.microns_per_px_y = *f.microns_per_px_y;
  if (f.jobs) cfg.jobs = *f.jobs;
  if (f.vi_convention == "total") cfg.metrics.vi_convention = VesselIndexConvention::kVesselToTotal;
  if (f.vi_convention == "non_vessel") {
    cfg.metrics.vi_convention = VesselIndexConvention::kVesselToNonVessel;
  }
  if (f.pooled_auc) cfg.pooled_auc = true;
  if (cfg.niblack.window < 3 || cfg.niblack.window % 2 == 0) {
    throw Error(ErrorCode::kInvalidWindow, "--niblack-window must be odd and >= 3");
  }
  return cfg;
}

std::vector<fs::path> to_paths(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

void print_opt(const char* label, const std::optional<double>& v) {
  if (v) std::printf("%-22s %.6f\n", label, *v);
  else std::printf("%-22s n/a\n", label);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Choroid segmentation, metrics and agreement statistics for OCT B-scans"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::vector<std::string> inputs;
  std::string out_dir;

  auto* analyze = app.add_subcommand("analyze", "segment vessels and compute choroid metrics");
  analyze->add_option("inputs", inputs, "scan images or directories")->required();
  analyze->add_option("-o,--out", out_dir, "output directory")->required();
  add_common(analyze, flags);

  std::string pred_dir, gt_dir;
  auto* evaluate = app.add_subcommand("evaluate", "compare predictions with ground truth");
  evaluate->add_option("pred", pred_dir, "prediction directory")->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("gt", gt_dir, "ground-truth directory")->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("-o,--out", out_dir, "report directory")->required();
  evaluate->add_flag("--pooled-auc", flags.pooled_auc, "AUC over all pixels of all scans");
  add_common(evaluate, flags);

  std::size_t n_sims = 50;
  long max_shift = 6;
  std::uint64_t seed = 0;
  std::string vessel_dir;
  auto* simulate = app.add_subcommand("simulate-fovea", "fovea perturbation study");
  simulate->add_option("inputs", inputs, "scan images or directories")->required();
  simulate->add_option("-o,--out", out_dir, "output directory")->required();
  simulate->add_option("--n-sims", n_sims, "number of simulations")->check(CLI::PositiveNumber);
  simulate->add_option("--max-shift", max_shift, "largest absolute shift, px")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", seed, "random seed");
  simulate->add_option("--vessel-dir", vessel_dir, "take <stem>.vessel.png from here")
      ->check(CLI::ExistingDirectory);
  add_common(simulate, flags);

  auto* phantom = app.add_subcommand("phantom", "write the 24-member synthetic suite");
  phantom->add_option("-o,--out", out_dir, "output directory")->required();
  phantom->add_option("--seed", seed, "random seed");

  auto* bench = app.add_subcommand("bench", "per-stage timings (mean +- sd over inputs)");
  bench->add_option("inputs", inputs, "scan images or directories")->required();
  add_common(bench, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  PipelineConfig cfg;
  try {
    cfg = resolve(flags);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }

  try {
    if (*analyze) {
      const auto sum = run_analyze(to_paths(inputs), cfg, out_dir);
      for (const auto& o : sum.outcomes) {
        if (!o.ok()) std::cerr << "failed: " << o.source_id << ": " << o.error << "\n";
      }
      std::printf("analyzed %zu scans, %zu failed\n", sum.outcomes.size(), sum.failures);
      return sum.exit_code();
    }
    if (*evaluate) {
      const auto sum = run_evaluate(pred_dir, gt_dir, out_dir, cfg);
      for (const auto& e : sum.errors) std::cerr << "failed: " << e << "\n";
      for (const auto& s : sum.unmatched_pred) std::cerr << "unmatched (pred only): " << s << "\n";
      for (const auto& s : sum.unmatched_gt) std::cerr << "unmatched (gt only): " << s << "\n";
      std::printf("%-22s %zu\n", "matched", sum.matched.size());
      print_opt("vessel dice (mean)", sum.mean_vessel_dice);
      print_opt("region dice (mean)", sum.mean_region_dice);
      print_opt(cfg.pooled_auc ? "auc (pooled)" : "auc (mean)", sum.mean_auc);
      print_opt("fovea mae px", sum.fovea_mae);
      print_opt("fovea median ae px", sum.fovea_median_ae);
      return sum.exit_code();
    }
    if (*simulate) {
      FoveaSimParams params{n_sims, max_shift, seed};
      std::optional<fs::path> vd;
      if (!vessel_dir.empty()) vd = vessel_dir;
      const auto sum = run_simulate_fovea(to_paths(inputs), vd, params, cfg, out_dir);
      for (const auto& e : sum.errors) std::cerr << "failed: " << e << "\n";
      for (const auto& s : sum.result.rejected) std::cerr << "rejected (not fovea-centred): " << s << "\n";
      std::printf("scans used %zu, rejected %zu\n", sum.result.used.size(), sum.result.rejected.size());
      for (auto m : {SimMetric::kThickness, SimMetric::kArea, SimMetric::kVascularIndex}) {
        std::printf("min r %-16s %.6f\n", to_string(m).c_str(), sum.result.min_r(m));
      }
      return sum.exit_code();
    }
    if (*phantom) {
      const auto names = run_phantom(out_dir, seed);
      std::printf("wrote %zu phantoms to %s\n", names.size(), out_dir.c_str());
      return 0;
    }
    if (*bench) {
      const auto stats = run_bench(to_paths(inputs), cfg);
      std::printf("%-18s %10s %10s %5s\n", "stage", "mean_s", "sd_s", "n");
      for (const auto& s : stats) {
        std::printf("%-18s %10.4f %10.4f %5zu\n", s.stage.c_str(), s.mean_s, s.sd_s, s.n);
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kMissingFile || e.code() == ErrorCode::kInvalidConfig ? kExitInvalid
                                                                                         : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitInvalid;
}
