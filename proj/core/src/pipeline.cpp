#include "choroid/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include <json.hpp>

#include "choroid/fovea.hpp"
#include "choroid/niblack.hpp"
#include "choroid/phantom.hpp"

namespace choroid {

using json = nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool is_image_ext(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".tif" || ext == ".tiff";
}

std::string num(double v) {
  if (!std::isfinite(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string{}; }

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + path.string());
  out << text;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedSidecar, path.string() + ": " + e.what());
  }
}

// Per-item worker pool; results land at their input index so the reduction
// does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::vector<std::string> metric_flags(const ChoroidMetrics& m) {
  std::vector<std::string> flags;
  if (m.roi.clipped) flags.emplace_back("roi_clipped");
  for (std::size_t i = 0; i < 3; ++i) {
    if (m.thickness.failed[i]) flags.push_back("thickness_failed_" + std::to_string(i + 1));
  }
  return flags;
}

std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += sep;
    out += s;
  }
  return out;
}

}  // namespace

std::vector<fs::path> discover_scans(const std::vector<fs::path>& inputs) {
  std::set<fs::path> found;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      for (const auto& entry : fs::directory_iterator(in)) {
        if (!entry.is_regular_file()) continue;
        const auto& p = entry.path();
        if (!is_image_ext(p)) continue;
        if (p.stem().string().find('.') != std::string::npos) continue;
        found.insert(p);
      }
    } else if (fs::exists(in)) {
      found.insert(in);
    } else {
      throw Error(ErrorCode::kMissingFile, "no such input: " + in.string());
    }
  }
  return {found.begin(), found.end()};
}

fs::path companion_path(const fs::path& image, const std::string& suffix) {
  return image.parent_path() / (image.stem().string() + suffix);
}

ScanBundle load_bundle(const fs::path& image, const PipelineConfig& cfg) {
  ScanBundle b;
  b.scan = load_image(image, LoadOptions{cfg.microns_per_px_y});
  const auto region_path = companion_path(image, ".region.png");
  if (!fs::exists(region_path)) {
    throw Error(ErrorCode::kMissingFile, "missing region mask " + region_path.string());
  }
  b.region = load_mask(region_path, kRegionThreshold);
  require_same_shape(b.scan.image, b.region, "region mask and image differ in shape");

  if (cfg.segmenter == Segmenter::kProbability) {
    const auto vp = companion_path(image, ".vessel.png");
    if (!fs::exists(vp)) throw Error(ErrorCode::kMissingFile, "missing vessel map " + vp.string());
    b.vessel_input = read_grayscale(vp);
    require_same_shape(b.scan.image, *b.vessel_input, "vessel map and image differ in shape");
  }

  const auto& meta = b.scan.meta;
  if (meta.fovea_column_gt) {
    b.fovea = FoveaLocation{*meta.fovea_column_gt, meta.fovea_row_gt};
  } else if (const auto fp = companion_path(image, ".fovea.png"); fs::exists(fp)) {
    const auto map = read_grayscale(fp);
    b.fovea = FoveaLocation{decode_fovea_column(map).column, std::nullopt};
    b.fovea_decoded = true;
  }
  return b;
}

Segmentation segment(const ScanBundle& bundle, const PipelineConfig& cfg) {
  Segmentation s;
  switch (cfg.segmenter) {
    case Segmenter::kMmcq: {
      auto ens = segment_ensemble(bundle.scan.image, bundle.region, cfg.mmcq);
      s.vessel = std::move(ens.vessel);
      s.vessel_prob = vote_fraction(ens.votes);
      break;
    }
    case Segmenter::kNiblack:
      s.vessel = niblack_segment(bundle.scan.image, bundle.region, cfg.niblack);
      break;
    case Segmenter::kProbability: {
      const double thr = vessel_threshold_for(bundle.scan.meta.scan_type);
      s.vessel = binarize(*bundle.vessel_input, thr);
      s.vessel_prob = bundle.vessel_input;
      break;
    }
  }
  return s;
}

std::string metrics_json(const ChoroidMetrics& m, ScanType type, Segmenter segmenter,
                         const std::vector<std::string>& flags) {
  json j;
  j["source_id"] = m.source_id;
  j["scan_type"] = to_string(type);
  j["segmenter"] = to_string(segmenter);
  j["fovea_column"] = m.fovea_column;
  j["roi"] = {{"centre_column", m.roi.centre_column},
              {"lo", m.roi.lo},
              {"hi", m.roi.hi},
              {"half_width_um", m.roi.half_width_um},
              {"clipped", m.roi.clipped}};
  json pts = json::array();
  for (std::size_t i = 0; i < 3; ++i) {
    pts.push_back(m.thickness.failed[i] ? json(nullptr) : json(m.thickness.points_um[i]));
  }
  j["thickness_columns"] = m.thickness.columns;
  j["thickness_um"] = pts;
  j["thickness_mean_um"] = opt(m.thickness.mean_um);
  j["area_mm2"] = m.area_mm2;
  j["vascular_index"] = m.vascular_index;
  j["soft_vascular_index"] = opt(m.soft_vascular_index);
  j["flags"] = flags;
  return j.dump(2) + "\n";
}

ScanOutcome analyze_scan(const fs::path& image, const PipelineConfig& cfg, const fs::path& out_dir) {
  ScanOutcome out;
  out.image = image;
  out.source_id = image.stem().string();
  try {
    auto t0 = Clock::now();
    const auto bundle = load_bundle(image, cfg);
    out.times.load_s = seconds_since(t0);
    out.scan_type = bundle.scan.meta.scan_type;

    t0 = Clock::now();
    const auto seg = segment(bundle, cfg);
    out.times.segment_s = seconds_since(t0);
    save_mask(out_dir / (out.source_id + ".vessel.png"), seg.vessel);
    if (seg.vessel_prob) {
      save_image(out_dir / (out.source_id + ".vessel_prob.png"), *seg.vessel_prob, 16);
    }

    t0 = Clock::now();
    if (bundle.fovea_decoded) out.flags.emplace_back("fovea_decoded");
    json j;
    if (out.scan_type == ScanType::kPeripapillary) {
      out.flags.emplace_back("no_fovea_roi");
      j["source_id"] = out.source_id;
      j["scan_type"] = to_string(out.scan_type);
      j["segmenter"] = to_string(cfg.segmenter);
      j["flags"] = out.flags;
      write_text(out_dir / (out.source_id + ".metrics.json"), j.dump(2) + "\n");
    } else {
      MetricInputs in{bundle.region, seg.vessel, seg.vessel_prob, bundle.scan.meta, bundle.fovea};
      in.meta.source_id = out.source_id;
      auto m = compute_all(in, cfg.metrics);
      for (auto& f : metric_flags(m)) out.flags.push_back(std::move(f));
      write_text(out_dir / (out.source_id + ".metrics.json"),
                 metrics_json(m, out.scan_type, cfg.segmenter, out.flags));
      out.metrics = std::move(m);
    }
    out.times.metrics_s = seconds_since(t0);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

AnalyzeSummary run_analyze(const std::vector<fs::path>& inputs, const PipelineConfig& cfg,
                           const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const auto scans = discover_scans(inputs);
  AnalyzeSummary summary;
  summary.outcomes.resize(scans.size());
  parallel_for(scans.size(), cfg.jobs, [&](std::size_t i) {
    summary.outcomes[i] = analyze_scan(scans[i], cfg, out_dir);
  });
  std::stable_sort(summary.outcomes.begin(), summary.outcomes.end(),
                   [](const ScanOutcome& a, const ScanOutcome& b) { return a.source_id < b.source_id; });

  std::string csv =
      "source_id,scan_type,fovea_col,thickness_pt1_um,thickness_pt2_um,thickness_pt3_um,"
      "thickness_mean_um,area_mm2,vi,soft_vi,flags\n";
  std::string log = "source_id,status,load_s,segment_s,metrics_s,total_s,message\n";
  for (const auto& o : summary.outcomes) {
    char times[160];
    std::snprintf(times, sizeof times, "%.4f,%.4f,%.4f,%.4f", o.times.load_s, o.times.segment_s,
                  o.times.metrics_s, o.times.total());
    if (!o.ok()) {
      ++summary.failures;
      log += o.source_id + ",failed," + times + ",\"" + o.error + "\"\n";
      continue;
    }
    log += o.source_id + ",ok," + times + ",\n";
    csv += o.source_id + "," + to_string(o.scan_type) + ",";
    if (o.metrics) {
      const auto& m = *o.metrics;
      csv += std::to_string(m.fovea_column) + ",";
      for (std::size_t i = 0; i < 3; ++i) {
        csv += (m.thickness.failed[i] ? std::string{} : num(m.thickness.points_um[i])) + ",";
      }
      csv += num(m.thickness.mean_um) + "," + num(m.area_mm2) + "," + num(m.vascular_index) + "," +
             num(m.soft_vascular_index) + ",";
    } else {
      csv += ",,,,,,,,";
    }
    csv += join(o.flags, ';') + "\n";
  }
  write_text(out_dir / "metrics.csv", csv);
  write_text(out_dir / "timings.log", log);
  return summary;
}

// ---------------------------------------------------------------- evaluate

namespace {

std::set<std::string> vessel_stems(const fs::path& dir) {
  std::set<std::string> stems;
  static const std::string kSuffix = ".vessel.png";
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.size() > kSuffix.size() &&
        name.compare(name.size() - kSuffix.size(), kSuffix.size(), kSuffix) == 0) {
      stems.insert(name.substr(0, name.size() - kSuffix.size()));
    }
  }
  return stems;
}

struct SideMetrics {
  std::optional<double> thickness;
  std::optional<double> area;
  std::optional<double> vi;
  std::optional<long> fovea;
  std::optional<ScanType> type;
};

std::optional<double> json_number(const json& j, const char* key) {
  if (j.contains(key) && j[key].is_number()) return j[key].get<double>();
  return std::nullopt;
}

/// Metrics for one side of a pair: from <stem>.metrics.json when present,
/// else computed from region + vessel masks and the sidecar.
SideMetrics side_metrics(const fs::path& dir, const std::string& stem, const BinaryMask& vessel,
                         const PipelineConfig& cfg) {
  SideMetrics s;
  const auto meta_path = dir / (stem + ".meta.json");
  std::optional<ScanMeta> meta;
  if (fs::exists(meta_path)) {
    meta = read_sidecar(meta_path);
    s.type = meta->scan_type;
    s.fovea = meta->fovea_column_gt;
  }
  if (const auto mp = dir / (stem + ".metrics.json"); fs::exists(mp)) {
    const auto j = read_json(mp);
    if (j.contains("scan_type")) s.type = parse_scan_type(j["scan_type"].get<std::string>());
    if (j.contains("fovea_column") && j["fovea_column"].is_number()) {
      s.fovea = j["fovea_column"].get<long>();
    }
    s.thickness = json_number(j, "thickness_mean_um");
    s.area = json_number(j, "area_mm2");
    s.vi = json_number(j, "vascular_index");
    return s;
  }
  const auto rp = dir / (stem + ".region.png");
  if (!meta || !fs::exists(rp) || meta->scan_type == ScanType::kPeripapillary) return s;
  MetricInputs in;
  in.region = load_mask(rp, kRegionThreshold);
  in.vessel = vessel;
  in.meta = *meta;
  if (meta->fovea_column_gt) in.fovea = FoveaLocation{*meta->fovea_column_gt, meta->fovea_row_gt};
  const auto m = compute_all(in, cfg.metrics);
  s.fovea = m.fovea_column;
  s.thickness = m.thickness.mean_um;
  s.area = m.area_mm2;
  s.vi = m.vascular_index;
  return s;
}

json agreement_json(const AgreementReport& r) {
  json j;
  j["mae"] = opt(r.mae);
  j["median_ae"] = opt(r.median_ae);
  j["pearson_r"] = opt(r.pearson_r);
  j["pearson_p"] = opt(r.pearson_p);
  j["spearman_rho"] = opt(r.spearman_rho);
  j["icc"] = opt(r.icc);
  if (r.bland_altman) {
    j["bland_altman"] = {{"mean_diff", r.bland_altman->mean_diff},
                         {"sd_diff", r.bland_altman->sd_diff},
                         {"loa_low", r.bland_altman->loa_low},
                         {"loa_high", r.bland_altman->loa_high}};
  } else {
    j["bland_altman"] = nullptr;
  }
  return j;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

EvaluateSummary run_evaluate(const fs::path& pred_dir, const fs::path& gt_dir,
                             const fs::path& out_dir, const PipelineConfig& cfg) {
  for (const auto& d : {pred_dir, gt_dir}) {
    if (!fs::is_directory(d)) throw Error(ErrorCode::kMissingFile, "not a directory: " + d.string());
  }
  fs::create_directories(out_dir);
  const auto pred = vessel_stems(pred_dir);
  const auto gt = vessel_stems(gt_dir);
  EvaluateSummary sum;
  std::set_intersection(pred.begin(), pred.end(), gt.begin(), gt.end(), std::back_inserter(sum.matched));
  std::set_difference(pred.begin(), pred.end(), gt.begin(), gt.end(),
                      std::back_inserter(sum.unmatched_pred));
  std::set_difference(gt.begin(), gt.end(), pred.begin(), pred.end(),
                      std::back_inserter(sum.unmatched_gt));

  struct Row {
    std::string stem;
    std::optional<ScanType> type;
    std::optional<double> vessel_dice, region_dice, auc;
    SideMetrics p, g;
    std::string error;
  };
  std::vector<Row> rows(sum.matched.size());
  std::vector<Raster<float>> pooled_scores(rows.size());
  std::vector<BinaryMask> pooled_labels(rows.size());

  parallel_for(rows.size(), cfg.jobs, [&](std::size_t i) {
    auto& row = rows[i];
    row.stem = sum.matched[i];
    try {
      const auto gt_vessel = load_mask(gt_dir / (row.stem + ".vessel.png"), kVesselThreshold);
      const auto pv = pred_dir / (row.stem + ".vessel.png");
      const auto pp = pred_dir / (row.stem + ".vessel_prob.png");
      const auto pred_map = read_grayscale(fs::exists(pp) ? pp : pv);
      require_same_shape(pred_map, gt_vessel, "prediction and ground truth differ in shape");

      row.g = side_metrics(gt_dir, row.stem, gt_vessel, cfg);
      const auto pred_raw = read_grayscale(pv);
      row.type = row.g.type;
      const double thr = vessel_threshold_for(row.type.value_or(ScanType::kHorizontal));
      const auto pred_vessel = binarize(pred_raw, thr);
      row.p = side_metrics(pred_dir, row.stem, pred_vessel, cfg);
      if (!row.type) row.type = row.p.type;

      row.vessel_dice = dice(pred_vessel, gt_vessel);
      const auto pr = pred_dir / (row.stem + ".region.png");
      const auto gr = gt_dir / (row.stem + ".region.png");
      if (fs::exists(pr) && fs::exists(gr)) {
        row.region_dice = dice(load_mask(pr, kRegionThreshold), load_mask(gr, kRegionThreshold));
      }
      if (cfg.pooled_auc) {
        pooled_scores[i] = pred_map;
        pooled_labels[i] = gt_vessel;
      } else {
        try {
          row.auc = pixel_auc(pred_map, gt_vessel);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kSingleClass) throw;
        }
      }
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });

  std::vector<double> vdice, rdice, aucs, fp, fg;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> series;
  std::string csv =
      "stem,scan_type,vessel_dice,region_dice,auc,fovea_pred,fovea_gt,fovea_abs_err,"
      "thickness_pred_um,thickness_gt_um,area_pred_mm2,area_gt_mm2,vi_pred,vi_gt\n";
  for (const auto& row : rows) {
    if (!row.error.empty()) {
      sum.errors.push_back(row.stem + ": " + row.error);
      continue;
    }
    if (row.vessel_dice) vdice.push_back(*row.vessel_dice);
    if (row.region_dice) rdice.push_back(*row.region_dice);
    if (row.auc) aucs.push_back(*row.auc);
    const bool centred = row.type && is_fovea_centred(*row.type);
    std::string fovea_cols = ",,";
    if (centred && row.p.fovea && row.g.fovea) {
      fp.push_back(static_cast<double>(*row.p.fovea));
      fg.push_back(static_cast<double>(*row.g.fovea));
      fovea_cols = std::to_string(*row.p.fovea) + "," + std::to_string(*row.g.fovea) + "," +
                   std::to_string(column_to_target_error(*row.p.fovea, *row.g.fovea));
    }
    auto add = [&](const char* name, const std::optional<double>& a, const std::optional<double>& b) {
      if (a && b) {
        series[name].first.push_back(*a);
        series[name].second.push_back(*b);
      }
    };
    add("thickness", row.p.thickness, row.g.thickness);
    add("area", row.p.area, row.g.area);
    add("vascular_index", row.p.vi, row.g.vi);
    csv += row.stem + "," + (row.type ? to_string(*row.type) : std::string{}) + "," +
           num(row.vessel_dice) + "," + num(row.region_dice) + "," + num(row.auc) + "," +
           fovea_cols + "," + num(row.p.thickness) + "," + num(row.g.thickness) + "," +
           num(row.p.area) + "," + num(row.g.area) + "," + num(row.p.vi) + "," + num(row.g.vi) +
           "\n";
  }
  write_text(out_dir / "per_scan.csv", csv);

  if (!vdice.empty()) sum.mean_vessel_dice = mean_of(vdice);
  if (!rdice.empty()) sum.mean_region_dice = mean_of(rdice);
  if (cfg.pooled_auc) {
    std::vector<float> scores;
    std::vector<std::uint8_t> labels;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!rows[i].error.empty()) continue;
      const auto s = pooled_scores[i].pixels();
      const auto l = pooled_labels[i].pixels();
      scores.insert(scores.end(), s.begin(), s.end());
      labels.insert(labels.end(), l.begin(), l.end());
    }
    try {
      if (!scores.empty()) sum.mean_auc = pixel_auc(scores, labels);
    } catch (const Error&) {
    }
  } else if (!aucs.empty()) {
    sum.mean_auc = mean_of(aucs);
  }
  if (!fp.empty()) {
    sum.fovea_mae = mae(fp, fg);
    sum.fovea_median_ae = median_ae(fp, fg);
  }

  json report;
  report["n_matched"] = sum.matched.size();
  report["unmatched"] = {{"pred_only", sum.unmatched_pred}, {"gt_only", sum.unmatched_gt}};
  report["errors"] = sum.errors;
  report["vessel_dice_mean"] = opt(sum.mean_vessel_dice);
  report["region_dice_mean"] = opt(sum.mean_region_dice);
  report["auc"] = opt(sum.mean_auc);
  report["auc_mode"] = cfg.pooled_auc ? "pooled" : "per_scan_mean";
  report["fovea"] = {{"n", fp.size()},
                     {"mae_px", opt(sum.fovea_mae)},
                     {"median_ae_px", opt(sum.fovea_median_ae)}};
  json metrics = json::object();
  for (const auto& [name, xy] : series) {
    const auto& [x, y] = xy;
    const auto rep = agree(x, y);
    auto j = agreement_json(rep);
    j["n"] = x.size();
    metrics[name] = j;
    std::string scatter = "pred,gt\n";
    for (std::size_t i = 0; i < x.size(); ++i) scatter += num(x[i]) + "," + num(y[i]) + "\n";
    write_text(out_dir / ("scatter_" + name + ".csv"), scatter);
    std::string ba = "mean,diff\n";
    if (rep.bland_altman) {
      for (const auto& [m, d] : rep.bland_altman->series) ba += num(m) + "," + num(d) + "\n";
    }
    write_text(out_dir / ("bland_altman_" + name + ".csv"), ba);
  }
  report["metrics"] = metrics;
  write_text(out_dir / "report.json", report.dump(2) + "\n");
  return sum;
}

// ---------------------------------------------------------------- simulate

SimulateSummary run_simulate_fovea(const std::vector<fs::path>& inputs,
                                   const std::optional<fs::path>& vessel_dir,
                                   const FoveaSimParams& params, const PipelineConfig& cfg,
                                   const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const auto scans = discover_scans(inputs);
  std::vector<std::optional<MetricInputs>> loaded(scans.size());
  std::vector<std::string> errors(scans.size());
  parallel_for(scans.size(), cfg.jobs, [&](std::size_t i) {
    try {
      auto b = load_bundle(scans[i], cfg);
      const auto stem = scans[i].stem().string();
      const auto vp = vessel_dir ? *vessel_dir / (stem + ".vessel.png")
                                 : companion_path(scans[i], ".vessel.png");
      MetricInputs in;
      in.vessel = load_mask(vp, vessel_threshold_for(b.scan.meta.scan_type));
      in.region = std::move(b.region);
      in.meta = std::move(b.scan.meta);
      in.meta.source_id = stem;
      in.fovea = b.fovea;
      loaded[i] = std::move(in);
    } catch (const std::exception& e) {
      errors[i] = scans[i].stem().string() + ": " + e.what();
    }
  });
  SimulateSummary sum;
  std::vector<MetricInputs> ready;
  for (std::size_t i = 0; i < scans.size(); ++i) {
    if (loaded[i]) ready.push_back(std::move(*loaded[i]));
    else sum.errors.push_back(errors[i]);
  }
  sum.result = perturb_fovea_sim(ready, params, cfg.metrics);

  std::string csv = "sim,metric,pearson_r,p_value\n";
  for (const auto& r : sum.result.rows) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.9f,%.6g", r.pearson_r, r.p_value);
    csv += std::to_string(r.sim) + "," + to_string(r.metric) + "," + buf + "\n";
  }
  write_text(out_dir / "fovea_sim.csv", csv);

  json summary;
  summary["n_sims"] = params.n_sims;
  summary["max_shift"] = params.max_shift;
  summary["seed"] = params.seed;
  summary["scans_used"] = sum.result.used;
  summary["scans_rejected"] = sum.result.rejected;
  summary["errors"] = sum.errors;
  json mins = json::object();
  for (auto m : {SimMetric::kThickness, SimMetric::kArea, SimMetric::kVascularIndex}) {
    const double r = sum.result.min_r(m);
    mins[to_string(m)] = std::isfinite(r) ? json(r) : json(nullptr);
  }
  summary["min_r"] = mins;
  write_text(out_dir / "fovea_sim_summary.json", summary.dump(2) + "\n");
  return sum;
}

// ---------------------------------------------------------------- phantom

std::vector<std::string> run_phantom(const fs::path& out_dir, std::uint64_t seed) {
  fs::create_directories(out_dir);
  const auto suite = standard_suite(seed);
  std::vector<std::string> names(suite.size());
  parallel_for(suite.size(), 1, [&](std::size_t i) {
    const auto& spec = suite[i].spec;
    const auto r = render(spec);
    const auto base = out_dir / spec.name;
    save_image(fs::path(base.string() + ".png"), r.image, 8);
    write_sidecar(fs::path(base.string() + ".meta.json"), spec.meta());
    save_mask(fs::path(base.string() + ".region.png"), r.region);
    save_mask(fs::path(base.string() + ".vessel.png"), r.vessel);
    json t;
    t["name"] = spec.name;
    t["seed"] = spec.seed;
    t["noise"] = to_string(spec.noise);
    t["has_vessels"] = suite[i].has_vessels;
    t["fovea"] = {{"column", r.fovea.column}, {"row", r.fovea.row ? json(*r.fovea.row) : json()}};
    t["vessel_fraction"] = r.truth.vessel_fraction;
    t["vessel_count"] = spec.vessels.size();
    if (r.truth.roi) {
      t["roi"] = {{"lo", r.truth.roi->lo}, {"centre_column", r.truth.roi->centre_column},
                  {"hi", r.truth.roi->hi}};
      t["roi_thickness_um"] = r.truth.roi_thickness_um;
      t["roi_thickness_mean_um"] = r.truth.roi_thickness_mean_um;
      t["roi_area_mm2"] = r.truth.roi_area_mm2;
    }
    json profile = json::array();
    for (double v : r.truth.thickness_profile_um) profile.push_back(std::isfinite(v) ? json(v) : json());
    t["thickness_profile_um"] = profile;
    write_text(fs::path(base.string() + ".truth.json"), t.dump(2) + "\n");
    names[i] = spec.name;
  });
  return names;
}

// ---------------------------------------------------------------- bench

std::vector<StageStats> run_bench(const std::vector<fs::path>& inputs, const PipelineConfig& cfg) {
  const auto scans = discover_scans(inputs);
  std::map<std::string, std::vector<double>> samples;
  const std::vector<std::string> order{"load", "mmcq_ensemble", "niblack", "metrics",
                                       "analyze_mmcq", "analyze_niblack"};
  for (const auto& image : scans) {
    auto t0 = Clock::now();
    const auto b = load_bundle(image, cfg);
    const double load = seconds_since(t0);
    t0 = Clock::now();
    const auto ens = segment_ensemble(b.scan.image, b.region, cfg.mmcq);
    const double mm = seconds_since(t0);
    t0 = Clock::now();
    const auto nb = niblack_segment(b.scan.image, b.region, cfg.niblack);
    const double nbs = seconds_since(t0);
    double met = 0.0;
    if (b.scan.meta.scan_type != ScanType::kPeripapillary) {
      t0 = Clock::now();
      MetricInputs in{b.region, ens.vessel, vote_fraction(ens.votes), b.scan.meta, b.fovea};
      (void)compute_all(in, cfg.metrics);
      met = seconds_since(t0);
    }
    samples["load"].push_back(load);
    samples["mmcq_ensemble"].push_back(mm);
    samples["niblack"].push_back(nbs);
    samples["metrics"].push_back(met);
    samples["analyze_mmcq"].push_back(load + mm + met);
    samples["analyze_niblack"].push_back(load + nbs + met);
  }
  std::vector<StageStats> out;
  for (const auto& name : order) {
    const auto& v = samples[name];
    StageStats s;
    s.stage = name;
    s.n = v.size();
    if (!v.empty()) {
      s.mean_s = mean_of(v);
      double ss = 0.0;
      for (double x : v) ss += (x - s.mean_s) * (x - s.mean_s);
      s.sd_s = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace choroid
