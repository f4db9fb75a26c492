#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "choroid/metrics.hpp"
#include "choroid/raster.hpp"

namespace choroid {

/// 2|a & b| / (|a| + |b|); two empty masks agree perfectly (1.0).
double dice(const BinaryMask& a, const BinaryMask& b);

/// Area under the ROC curve via the Mann-Whitney U statistic with midranks
/// for ties. Throws kSingleClass unless both classes are present.
double pixel_auc(std::span<const float> scores, std::span<const std::uint8_t> labels);
double pixel_auc(const ProbabilityMap& prob, const BinaryMask& gt);

struct Correlation {
  double r = 0.0;
  double p = 1.0;  // two-sided, Student t with n - 2 dof
};

/// Throws kTooFew (< 3 points), kShapeMismatch (length mismatch) or
/// kUndefinedCorrelation (zero variance).
Correlation pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

double mae(std::span<const double> x, std::span<const double> y);
double median_ae(std::span<const double> x, std::span<const double> y);

/// Midranks (1-based, ties averaged).
std::vector<double> midranks(std::span<const double> values);

/// ICC(2,1): two-way random effects, absolute agreement, single measure.
/// Throws kTooFew below 3 pairs and kDegenerate when undefined.
double icc(std::span<const std::pair<double, double>> pairs);

struct BlandAltman {
  double mean_diff = 0.0;
  double sd_diff = 0.0;
  double loa_low = 0.0;
  double loa_high = 0.0;
  std::vector<std::pair<double, double>> series;  // (pair mean, x - y)
};

/// Differences x - y with limits mean +- 1.96 * sample sd. Throws kTooFew
/// below 2 pairs.
BlandAltman bland_altman(std::span<const double> x, std::span<const double> y);

struct AgreementReport {
  std::optional<double> dice;
  std::optional<double> auc;
  std::optional<double> mae;
  std::optional<double> median_ae;
  std::optional<double> pearson_r;
  std::optional<double> pearson_p;
  std::optional<double> spearman_rho;
  std::optional<double> icc;
  std::optional<BlandAltman> bland_altman;
};

/// Paired agreement battery on two value series; statistics that are
/// undefined for the data (e.g. zero variance) are left empty.
AgreementReport agree(std::span<const double> x, std::span<const double> y);

/// One draw from {-max_shift..-1, 1..max_shift}.
long draw_fovea_shift(std::mt19937_64& rng, long max_shift);

enum class SimMetric { kThickness, kArea, kVascularIndex };
std::string to_string(SimMetric metric);

struct FoveaSimRow {
  std::size_t sim = 0;
  SimMetric metric = SimMetric::kThickness;
  double pearson_r = 0.0;
  double p_value = 1.0;
};

struct FoveaSimResult {
  std::vector<FoveaSimRow> rows;          // sim-major, metric-minor
  std::vector<std::string> rejected;      // source ids that are not fovea-centred
  std::vector<std::string> used;
  double min_r(SimMetric metric) const;
};

struct FoveaSimParams {
  std::size_t n_sims = 50;
  long max_shift = 6;
  std::uint64_t seed = 0;
};

/// Shifts every fovea-centred scan's fovea column by an independent nonzero
/// draw per simulation (rng seeded with seed + sim index), recomputes the
/// metrics and correlates them against the unperturbed values.
FoveaSimResult perturb_fovea_sim(std::span<const MetricInputs> scans,
                                 const FoveaSimParams& params,
                                 const MetricsOptions& opts = {});

}  // namespace choroid
