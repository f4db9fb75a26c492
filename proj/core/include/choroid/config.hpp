#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include "choroid/metrics.hpp"
#include "choroid/mmcq.hpp"
#include "choroid/niblack.hpp"

namespace choroid {

enum class Segmenter {
  kMmcq,         // 25-variant MMCQ ensemble
  kNiblack,      // local thresholding baseline
  kProbability,  // externally supplied <stem>.vessel.png probability map
};

std::string to_string(Segmenter s);
Segmenter parse_segmenter(const std::string& text);

struct PipelineConfig {
  MmcqConfig mmcq;
  NiblackParams niblack;
  MetricsOptions metrics;
  Segmenter segmenter = Segmenter::kMmcq;
  std::optional<double> microns_per_px_y;  // fallback for scans without a sidecar
  std::size_t jobs = 1;
  bool pooled_auc = false;
};

/// Reads an INI/TOML-style file with [mmcq], [niblack], [metrics] and
/// [analyze] sections on top of `base`. Unknown keys are rejected with
/// kInvalidConfig so typos do not pass silently.
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

}  // namespace choroid
