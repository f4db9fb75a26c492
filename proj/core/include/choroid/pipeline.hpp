#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "choroid/config.hpp"
#include "choroid/evalstats.hpp"
#include "choroid/imagecore.hpp"
#include "choroid/metrics.hpp"
#include "choroid/mmcq.hpp"

namespace choroid {

namespace fs = std::filesystem;

/// Scan images among `inputs`: explicit files are taken as given, directories
/// contribute every .png/.tif/.tiff whose stem contains no '.', so companion
/// files such as `<stem>.region.png` are skipped. Sorted, deduplicated.
std::vector<fs::path> discover_scans(const std::vector<fs::path>& inputs);

/// `<dir>/<stem><suffix>` for a scan image at `<dir>/<stem>.<ext>`.
fs::path companion_path(const fs::path& image, const std::string& suffix);

/// Everything a scan needs, read from disk next to the image.
struct ScanBundle {
  LoadedScan scan;
  BinaryMask region;                           // <stem>.region.png at 0.5
  std::optional<ProbabilityMap> vessel_input;  // <stem>.vessel.png (probability segmenter)
  std::optional<FoveaLocation> fovea;          // sidecar, else decoded <stem>.fovea.png
  bool fovea_decoded = false;
};

ScanBundle load_bundle(const fs::path& image, const PipelineConfig& cfg);

struct StageTimes {
  double load_s = 0.0;
  double segment_s = 0.0;
  double metrics_s = 0.0;
  double total() const noexcept { return load_s + segment_s + metrics_s; }
};

struct ScanOutcome {
  std::string source_id;
  fs::path image;
  ScanType scan_type = ScanType::kHorizontal;
  std::optional<ChoroidMetrics> metrics;
  std::vector<std::string> flags;  // e.g. roi_clipped, thickness_failed_1, no_fovea_roi
  std::string error;               // nonempty when the scan failed
  StageTimes times;
  bool ok() const noexcept { return error.empty(); }
};

struct Segmentation {
  BinaryMask vessel;
  std::optional<ProbabilityMap> vessel_prob;
};

/// Vessel mask for the configured segmenter. MMCQ also yields votes / 25 as
/// the probability map.
Segmentation segment(const ScanBundle& bundle, const PipelineConfig& cfg);

/// Processes one scan, writing `<stem>.vessel.png`, `<stem>.vessel_prob.png`
/// (when a probability map exists) and `<stem>.metrics.json` to `out_dir`.
/// Never throws for per-scan problems; they land in ScanOutcome::error.
ScanOutcome analyze_scan(const fs::path& image, const PipelineConfig& cfg, const fs::path& out_dir);

struct AnalyzeSummary {
  std::vector<ScanOutcome> outcomes;  // sorted by source id
  std::size_t failures = 0;
  int exit_code() const noexcept { return failures == 0 ? 0 : 1; }
};

/// Worker pool over scans. Writes metrics.csv (sorted by source id, no
/// timing columns) and timings.log (wall times) to `out_dir`.
AnalyzeSummary run_analyze(const std::vector<fs::path>& inputs, const PipelineConfig& cfg,
                           const fs::path& out_dir);

std::string metrics_json(const ChoroidMetrics& m, ScanType type, Segmenter segmenter,
                         const std::vector<std::string>& flags);

struct EvaluateSummary {
  std::vector<std::string> matched;
  std::vector<std::string> unmatched_pred;
  std::vector<std::string> unmatched_gt;
  std::vector<std::string> errors;  // "<stem>: message"
  std::optional<double> mean_vessel_dice;
  std::optional<double> mean_region_dice;
  std::optional<double> mean_auc;
  std::optional<double> fovea_mae;
  std::optional<double> fovea_median_ae;
  int exit_code() const noexcept { return errors.empty() ? 0 : 1; }
};

/// Pairs `<stem>.vessel.png` files of the two directories and writes
/// per_scan.csv, report.json and, per metric, bland_altman_<m>.csv and
/// scatter_<m>.csv to `out_dir`.
EvaluateSummary run_evaluate(const fs::path& pred_dir, const fs::path& gt_dir,
                             const fs::path& out_dir, const PipelineConfig& cfg);

struct SimulateSummary {
  FoveaSimResult result;
  std::vector<std::string> errors;
  int exit_code() const noexcept { return errors.empty() ? 0 : 1; }
};

/// Metric inputs for the perturbation study: region and vessel masks read
/// next to each scan (vessel masks from `vessel_dir` when given).
SimulateSummary run_simulate_fovea(const std::vector<fs::path>& inputs,
                                   const std::optional<fs::path>& vessel_dir,
                                   const FoveaSimParams& params, const PipelineConfig& cfg,
                                   const fs::path& out_dir);

/// Writes `<name>.png`, `.meta.json`, `.region.png`, `.vessel.png` and
/// `.truth.json` per suite member. Returns the member names.
std::vector<std::string> run_phantom(const fs::path& out_dir, std::uint64_t seed);

struct StageStats {
  std::string stage;
  double mean_s = 0.0;
  double sd_s = 0.0;
  std::size_t n = 0;
};

/// Times load, MMCQ ensemble, Niblack and metrics per scan.
std::vector<StageStats> run_bench(const std::vector<fs::path>& inputs, const PipelineConfig& cfg);

}  // namespace choroid
