#include "choroid/evalstats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

namespace choroid {

namespace {

void require_pairs(std::span<const double> x, std::span<const double> y, std::size_t min_n) {
  if (x.size() != y.size()) throw Error(ErrorCode::kShapeMismatch, "series differ in length");
  if (x.size() < min_n) {
    throw Error(ErrorCode::kTooFew, "need at least " + std::to_string(min_n) + " pairs");
  }
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double dice(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b, "masks differ in shape");
  std::size_t na = 0, nb = 0, both = 0;
  const auto pa = a.pixels();
  const auto pb = b.pixels();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const bool x = pa[i] != 0, y = pb[i] != 0;
    na += x;
    nb += y;
    both += x && y;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

double pixel_auc(std::span<const float> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::kShapeMismatch, "scores and labels differ in length");
  }
  std::vector<std::uint32_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0.0;
  double n_pos = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    double pos_in_group = 0.0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      pos_in_group += labels[order[j]] != 0;
      ++j;
    }
    // Ranks i+1 .. j share the midrank.
    const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    rank_sum_pos += pos_in_group * midrank;
    n_pos += pos_in_group;
    i = j;
  }
  const double n_neg = static_cast<double>(scores.size()) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) {
    throw Error(ErrorCode::kSingleClass, "AUC needs both classes in the ground truth");
  }
  const double u = rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0;
  return u / (n_pos * n_neg);
}

double pixel_auc(const ProbabilityMap& prob, const BinaryMask& gt) {
  require_same_shape(prob, gt, "probability map and mask differ in shape");
  return pixel_auc(prob.pixels(), gt.pixels());
}

Correlation pearson(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y, 3);
  const double mx = mean_of(x), my = mean_of(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorCode::kUndefinedCorrelation, "zero variance");
  }
  Correlation out;
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double dof = static_cast<double>(x.size()) - 2.0;
  if (std::abs(out.r) >= 1.0) {
    out.p = 0.0;
  } else {
    const double t = out.r * std::sqrt(dof / (1.0 - out.r * out.r));
    const boost::math::students_t dist(dof);
    out.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  }
  return out;
}

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = midrank;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y, 3);
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  return pearson(rx, ry).r;
}

double mae(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y, 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += std::abs(x[i] - y[i]);
  return sum / static_cast<double>(x.size());
}

double median_ae(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y, 1);
  std::vector<double> err(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) err[i] = std::abs(x[i] - y[i]);
  std::sort(err.begin(), err.end());
  const std::size_t n = err.size();
  return n % 2 ? err[n / 2] : 0.5 * (err[n / 2 - 1] + err[n / 2]);
}

double icc(std::span<const std::pair<double, double>> pairs) {
  const std::size_t n = pairs.size();
  if (n < 3) throw Error(ErrorCode::kTooFew, "ICC needs at least 3 subjects");
  constexpr double k = 2.0;
  const double nd = static_cast<double>(n);

  double grand = 0.0, col0 = 0.0, col1 = 0.0;
  for (const auto& [a, b] : pairs) {
    col0 += a;
    col1 += b;
  }
  grand = (col0 + col1) / (k * nd);
  col0 /= nd;
  col1 /= nd;

  double ss_rows = 0.0, ss_total = 0.0;
  for (const auto& [a, b] : pairs) {
    const double row_mean = 0.5 * (a + b);
    ss_rows += k * (row_mean - grand) * (row_mean - grand);
    ss_total += (a - grand) * (a - grand) + (b - grand) * (b - grand);
  }
  const double ss_cols = nd * ((col0 - grand) * (col0 - grand) + (col1 - grand) * (col1 - grand));
  const double ss_error = std::max(0.0, ss_total - ss_rows - ss_cols);

  const double ms_rows = ss_rows / (nd - 1.0);
  const double ms_cols = ss_cols / (k - 1.0);
  const double ms_error = ss_error / ((nd - 1.0) * (k - 1.0));
  const double denom = ms_rows + (k - 1.0) * ms_error + k * (ms_cols - ms_error) / nd;
  if (!(std::abs(denom) > 0.0)) throw Error(ErrorCode::kDegenerate, "ICC undefined: no variance");
  return (ms_rows - ms_error) / denom;
}

BlandAltman bland_altman(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y, 2);
  BlandAltman ba;
  std::vector<double> diffs(x.size());
  ba.series.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    diffs[i] = x[i] - y[i];
    ba.series.emplace_back(0.5 * (x[i] + y[i]), diffs[i]);
  }
  ba.mean_diff = mean_of(diffs);
  double ss = 0.0;
  for (double d : diffs) ss += (d - ba.mean_diff) * (d - ba.mean_diff);
  ba.sd_diff = std::sqrt(ss / static_cast<double>(diffs.size() - 1));
  ba.loa_low = ba.mean_diff - 1.96 * ba.sd_diff;
  ba.loa_high = ba.mean_diff + 1.96 * ba.sd_diff;
  return ba;
}

AgreementReport agree(std::span<const double> x, std::span<const double> y) {
  AgreementReport rep;
  if (x.size() != y.size() || x.empty()) return rep;
  rep.mae = mae(x, y);
  rep.median_ae = median_ae(x, y);
  if (x.size() >= 2) rep.bland_altman = bland_altman(x, y);
  if (x.size() >= 3) {
    try {
      const auto c = pearson(x, y);
      rep.pearson_r = c.r;
      rep.pearson_p = c.p;
      rep.spearman_rho = spearman(x, y);
    } catch (const Error&) {
    }
    std::vector<std::pair<double, double>> pairs(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) pairs[i] = {x[i], y[i]};
    try {
      rep.icc = icc(pairs);
    } catch (const Error&) {
    }
  }
  return rep;
}

long draw_fovea_shift(std::mt19937_64& rng, long max_shift) {
  if (max_shift < 1) throw Error(ErrorCode::kInvalidArgument, "max_shift must be >= 1");
  // mt19937_64 output is fully specified, unlike the std distributions, so
  // the modulo mapping keeps draws identical across standard libraries.
  const auto span = static_cast<std::uint64_t>(2 * max_shift);
  const auto pick = static_cast<long>(rng() % span);  // 0 .. 2*max-1
  return pick < max_shift ? pick - max_shift : pick - max_shift + 1;
}

std::string to_string(SimMetric metric) {
  switch (metric) {
    case SimMetric::kThickness: return "thickness";
    case SimMetric::kArea: return "area";
    case SimMetric::kVascularIndex: return "vascular_index";
  }
  return "thickness";
}

double FoveaSimResult::min_r(SimMetric metric) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& row : rows) {
    if (row.metric == metric) best = std::min(best, row.pearson_r);
  }
  return best;
}

FoveaSimResult perturb_fovea_sim(std::span<const MetricInputs> scans,
                                 const FoveaSimParams& params, const MetricsOptions& opts) {
  FoveaSimResult result;
  std::vector<const MetricInputs*> eligible;
  for (const auto& scan : scans) {
    if (is_fovea_centred(scan.meta.scan_type) && scan.fovea) {
      eligible.push_back(&scan);
      result.used.push_back(scan.meta.source_id);
    } else {
      result.rejected.push_back(scan.meta.source_id);
    }
  }

  constexpr std::array kMetrics{SimMetric::kThickness, SimMetric::kArea,
                                SimMetric::kVascularIndex};
  auto pick = [](const ChoroidMetrics& m, SimMetric which) {
    switch (which) {
      case SimMetric::kThickness: return m.thickness_mean_um;
      case SimMetric::kArea: return m.area_mm2;
      case SimMetric::kVascularIndex: return m.vascular_index;
    }
    return 0.0;
  };

  std::array<std::vector<double>, 3> baseline;
  for (const auto* scan : eligible) {
    const auto m = compute_all(*scan, opts);
    for (std::size_t k = 0; k < kMetrics.size(); ++k) baseline[k].push_back(pick(m, kMetrics[k]));
  }

  for (std::size_t sim = 0; sim < params.n_sims; ++sim) {
    std::mt19937_64 rng(params.seed + sim);
    std::array<std::vector<double>, 3> shifted;
    for (const auto* scan : eligible) {
      FoveaLocation moved = *scan->fovea;
      const long width = static_cast<long>(scan->region.cols());
      moved.column =
          std::clamp(moved.column + draw_fovea_shift(rng, params.max_shift), 0L, width - 1);
      const auto m = compute_all(*scan, moved, opts);
      for (std::size_t k = 0; k < kMetrics.size(); ++k) shifted[k].push_back(pick(m, kMetrics[k]));
    }
    for (std::size_t k = 0; k < kMetrics.size(); ++k) {
      FoveaSimRow row{sim, kMetrics[k], std::numeric_limits<double>::quiet_NaN(), 1.0};
      try {
        const auto c = pearson(shifted[k], baseline[k]);
        row.pearson_r = c.r;
        row.p_value = c.p;
      } catch (const Error&) {
      }
      result.rows.push_back(row);
    }
  }
  return result;
}

}  // namespace choroid
