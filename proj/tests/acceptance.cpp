// Acceptance run: one PASS/FAIL line per headline criterion, nonzero exit if
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "choroid/enhance.hpp"
#include "choroid/evalstats.hpp"
#include "choroid/fovea.hpp"
#include "choroid/metrics.hpp"
#include "choroid/mmcq.hpp"
#include "choroid/niblack.hpp"
#include "choroid/phantom.hpp"
#include "choroid/pipeline.hpp"

namespace fs = std::filesystem;
using namespace choroid;
using Clock = std::chrono::steady_clock;

namespace {

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// Shared fixture: the suite under a seed that was not used for tuning.
constexpr std::uint64_t kSeed = 1;

const std::vector<SuiteMember>& suite() {
  static const auto s = standard_suite(kSeed);
  return s;
}

const std::map<std::string, PhantomRender>& renders() {
  static const auto r = [] {
    std::map<std::string, PhantomRender> out;
    for (const auto& m : suite()) out.emplace(m.spec.name, render(m.spec));
    return out;
  }();
  return r;
}

const SuiteMember& member(const std::string& name) {
  for (const auto& m : suite())
    if (m.spec.name == name) return m;
  throw Error(ErrorCode::kInvalidArgument, "no suite member " + name);
}

Verdict fovea_round_trip() {
  const auto t0 = Clock::now();
  std::size_t wrong = 0, total = 0;
  for (long c = 10; c <= 757; ++c) {
    for (long row : {0L, 384L, 767L}) {
      ++total;
      wrong += decode_fovea_column(encode_fovea_target({c, row}, 768, 768)).column != c;
    }
  }
  const double s = since(t0);
  return {wrong == 0 && s < 5.0,
          fmt("%.0f/%.0f exact, %.2f s (limit 5 s)", static_cast<double>(total - wrong),
              static_cast<double>(total), s)};
}

Verdict fovea_perturbation() {
  const auto t0 = Clock::now();
  std::vector<MetricInputs> scans;
  for (const auto& m : suite()) {
    const auto p = render(m.spec);
    scans.push_back({p.region, p.vessel, std::nullopt, m.spec.meta(), p.fovea});
  }
  const auto res = perturb_fovea_sim(scans, {50, 6, 0});
  const double s = since(t0);
  double lo = 1.0, p_hi = 0.0;
  for (const auto& row : res.rows) {
    lo = std::min(lo, row.pearson_r);
    p_hi = std::max(p_hi, row.p_value);
  }
  return {lo > 0.99 && res.rows.size() == 150 && s < 120.0,
          fmt("%.0f scans x 50 sims, min r %.6f, max p %.2e, %.1f s (limit 120 s)",
              static_cast<double>(res.used.size()), lo, p_hi, s)};
}

Verdict mmcq_ensemble_oracle() {
  const MmcqConfig cfg;
  std::size_t mismatches = 0, at14 = 0, at15 = 0;
  const std::vector<std::string> names{"flat_vessels", "curved_thin", "sinusoid_mid", "tilt_negative",
                                       "offcentre_fovea_b"};
  for (const auto& name : names) {
    const auto& p = renders().at(name);
    const auto ens = segment_ensemble(p.image, p.region, cfg);
    std::vector<int> votes(p.image.size(), 0);
    for (const auto& variant : build_variant_grid(p.image).variants) {
      const auto once = segment_once(variant, p.region, cfg);
      for (std::size_t i = 0; i < votes.size(); ++i) votes[i] += once.pixels()[i];
    }
    for (std::size_t i = 0; i < votes.size(); ++i) {
      const bool expect = votes[i] >= 15;
      mismatches += ens.votes.votes.pixels()[i] != votes[i];
      mismatches += (ens.vessel.pixels()[i] != 0) != expect;
      if (votes[i] == 14) at14 += ens.vessel.pixels()[i] == 0;
      if (votes[i] == 15) at15 += ens.vessel.pixels()[i] == 1;
    }
  }
  // Synthetic boundary as well, independent of what the phantoms happen to hit.
  VesselVoteMap synthetic{Raster<std::uint8_t>(1, 2)};
  synthetic.votes(0, 0) = 14;
  synthetic.votes(0, 1) = 15;
  const auto m = votes_to_mask(synthetic, cfg.vote_threshold);
  const bool boundary = m(0, 0) == 0 && m(0, 1) == 1 && at14 > 0 && at15 > 0;
  return {mismatches == 0 && boundary,
          fmt("5 phantoms, %.0f mismatches; 14-vote px kept out %.0f, 15-vote px kept in %.0f",
              static_cast<double>(mismatches), static_cast<double>(at14), static_cast<double>(at15))};
}

Verdict mmcq_quality() {
  double mm = 0.0, nb = 0.0;
  std::size_t n = 0;
  for (const auto& m : suite()) {
    if (m.spec.noise != NoiseLevel::kModerate || !m.has_vessels) continue;
    const auto& p = renders().at(m.spec.name);
    mm += dice(segment_ensemble(p.image, p.region).vessel, p.vessel);
    nb += dice(niblack_segment(p.image, p.region, {51, -0.05}), p.vessel);
    ++n;
  }
  mm /= static_cast<double>(n);
  nb /= static_cast<double>(n);
  return {n > 0 && mm >= 0.80,
          fmt("%.0f noise-moderate members, MMCQ Dice %.4f (floor 0.80), Niblack Dice %.4f",
              static_cast<double>(n), mm, nb)};
}

Verdict metric_oracle() {
  const auto run = [](const std::string& name) {
    const auto& m = member(name);
    const auto& p = renders().at(name);
    return std::pair{compute_all({p.region, p.vessel, std::nullopt, m.spec.meta(), p.fovea}), &m};
  };
  const auto [flat, flat_m] = run("flat_clean");
  const auto [fv, fv_m] = run("flat_vessels");
  const auto [tilt, tilt_m] = run("tilted45");

  bool ok = true;
  double worst_flat = 0.0;
  for (const auto* r : {&flat, &fv}) {
    for (std::size_t i = 0; i < 3; ++i) {
      ok &= !r->thickness.failed[i];
      worst_flat = std::max(worst_flat, std::abs(r->thickness.points_um[i] - 400.0));
    }
  }
  ok &= worst_flat <= 1.0;
  const double closed_area = analytic_area_mm2(flat_m->spec, flat.roi.lo, flat.roi.hi);
  const double area_err = std::abs(flat.area_mm2 - closed_area) / closed_area;
  ok &= area_err <= 0.01;
  const double vi_err = std::abs(fv.vascular_index - 0.40);
  ok &= vi_err <= 0.02;
  const double tilt_expect = 450.0 / std::sqrt(2.0);
  const double tilt_err = std::abs(tilt.thickness_mean_um - tilt_expect) / tilt_expect;
  ok &= tilt_err <= 0.02;
  (void)fv_m;
  (void)tilt_m;
  return {ok, fmt("flat |dt| %.3f um, area err %.3f%%, VI err %.4f, tilt err %.3f%%", worst_flat,
                  100.0 * area_err, vi_err, 100.0 * tilt_err)};
}

Verdict statistics_oracles() {
  std::vector<std::string> fails;
  const auto check = [&](const std::string& what, double got, double want, double tol = 1e-9) {
    if (!(std::abs(got - want) <= tol)) fails.push_back(what);
  };
  const auto strip = [](std::size_t from, std::size_t to) {
    BinaryMask m(1, 40);
    for (std::size_t c = from; c < to; ++c) m(0, c) = 1;
    return m;
  };
  check("dice identical", dice(strip(0, 10), strip(0, 10)), 1.0);
  check("dice disjoint", dice(strip(0, 10), strip(20, 30)), 0.0);
  check("dice overlap", dice(strip(0, 10), strip(5, 15)), 0.5);

  const std::vector<std::uint8_t> y{0, 0, 1, 1};
  const std::vector<float> s{0.1f, 0.4f, 0.35f, 0.8f}, perfect{0, 0, 1, 1}, flat(4, 0.3f);
  check("auc 4-pixel", pixel_auc(s, y), 0.75);
  check("auc perfect", pixel_auc(perfect, y), 1.0);
  check("auc constant", pixel_auc(flat, y), 0.5);

  const std::vector<double> x{-2, -1, 0, 1, 2};
  std::vector<double> lin, cube;
  for (double v : x) lin.push_back(2 * v + 1), cube.push_back(v * v * v);
  check("pearson affine", pearson(x, lin).r, 1.0);
  check("spearman cubic", spearman(x, cube), 1.0);
  if (!(pearson(x, cube).r < 1.0)) fails.push_back("pearson cubic < 1");
  check("mae self", mae(x, x), 0.0);
  check("median ae self", median_ae(x, x), 0.0);

  const std::vector<std::pair<double, double>> same{{1, 1}, {2, 2}, {5, 5}};
  check("icc identical", icc(same), 1.0);
  // (1,2),(2,4),(3,6): MSR = 9/2, MSC = 6/1, MSE = 1/2 -> (4.5 - 0.5) / (4.5 + 0.5 + 2 (6 - 0.5) / 3).
  const std::vector<std::pair<double, double>> dbl{{1, 2}, {2, 4}, {3, 6}};
  check("icc anova", icc(dbl), (4.5 - 0.5) / (4.5 + 0.5 + 2.0 * (6.0 - 0.5) / 3.0));
  try {
    const std::vector<std::pair<double, double>> cst{{2, 2}, {2, 2}, {2, 2}};
    icc(cst);
    fails.push_back("icc constant raters");
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerate) fails.push_back("icc constant raters code");
  }

  const std::vector<double> bx{1, 2, 3}, by{1, 3, 2};
  const auto ba = bland_altman(bx, by);
  check("ba mean", ba.mean_diff, 0.0);
  check("ba low", ba.loa_low, -1.96);
  check("ba high", ba.loa_high, 1.96);
  const auto ba0 = bland_altman(bx, bx);
  check("ba self", ba0.loa_high - ba0.loa_low, 0.0);

  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  const std::size_t n = 100000;
  std::vector<double> gx(n), gy(n);
  for (std::size_t i = 0; i < n; ++i) gx[i] = g(rng), gy[i] = 0.5 * g(rng) - 0.2;
  const auto gba = bland_altman(gx, gy);
  std::size_t inside = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = gx[i] - gy[i];
    inside += d >= gba.loa_low && d <= gba.loa_high;
  }
  const double coverage = static_cast<double>(inside) / static_cast<double>(n);
  if (std::abs(coverage - 0.95) > 0.005) fails.push_back("ba coverage");

  std::string detail = fmt("BA coverage %.4f on 1e5 Gaussian diffs", coverage);
  for (const auto& f : fails) detail += "; failed: " + f;
  return {fails.empty(), detail};
}

fs::path write_phantoms() {
  static const fs::path dir = [] {
    const auto d = fs::temp_directory_path() / ("choroid_accept_" + std::to_string(std::random_device{}()));
    run_phantom(d, kSeed);
    return d;
  }();
  return dir;
}

Verdict throughput() {
  const auto dir = write_phantoms();
  const auto out = dir / "throughput_out";
  fs::create_directories(out);
  std::vector<fs::path> scans;
  for (const char* name : {"flat_vessels", "curved_thick", "sinusoid_mid", "dense_vessels",
                           "heidelberg_scale"}) {
    scans.push_back(dir / (std::string(name) + ".png"));
  }
  PipelineConfig mm, nb;
  nb.segmenter = Segmenter::kNiblack;
  const auto time_path = [&](const PipelineConfig& cfg) {
    std::vector<double> t;
    for (const auto& s : scans) {
      const auto t0 = Clock::now();
      const auto o = analyze_scan(s, cfg, out);
      if (!o.ok()) throw Error(ErrorCode::kInvalidArgument, o.source_id + ": " + o.error);
      t.push_back(since(t0));
    }
    return std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size());
  };
  const double mm_s = time_path(mm);
  const double nb_s = time_path(nb);
  return {mm_s <= 2.0 && nb_s <= 0.5,
          fmt("768x768 end to end, single thread: MMCQ %.3f s/scan (limit 2.0), Niblack %.3f s/scan "
              "(limit 0.5)",
              mm_s, nb_s)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism() {
  const auto dir = write_phantoms();
  std::vector<fs::path> scans;
  for (const char* name : {"flat_vessels", "tilted45", "peripapillary_style", "radial_scan"}) {
    scans.push_back(dir / (std::string(name) + ".png"));
  }
  std::vector<fs::path> outs;
  for (std::size_t jobs : {1u, 1u, 3u}) {
    PipelineConfig cfg;
    cfg.jobs = jobs;
    outs.push_back(dir / ("det_" + std::to_string(outs.size())));
    run_analyze(scans, cfg, outs.back());
  }
  std::size_t files = 0, differing = 0;
  for (const auto& e : fs::directory_iterator(outs[0])) {
    const auto name = e.path().filename();
    if (name == "timings.log") continue;
    ++files;
    const auto ref = slurp(e.path());
    for (std::size_t k = 1; k < outs.size(); ++k) differing += slurp(outs[k] / name) != ref;
  }
  return {files > 0 && differing == 0,
          fmt("%.0f output files over runs -j1, -j1, -j3; %.0f differ", static_cast<double>(files),
              static_cast<double>(differing))};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"fovea round-trip", fovea_round_trip},
      {"fovea perturbation", fovea_perturbation},
      {"mmcq ensemble oracle", mmcq_ensemble_oracle},
      {"mmcq quality floor", mmcq_quality},
      {"metric oracle", metric_oracle},
      {"statistics oracles", statistics_oracles},
      {"throughput", throughput},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %-22s %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
    std::fflush(stdout);
    failed += !v.pass;
  }
  std::error_code ec;
  fs::remove_all(write_phantoms(), ec);
  return failed == 0 ? 0 : 1;
}
