#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "test_util.hpp"

namespace fs = std::filesystem;
using choroid::testutil::TempDir;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(CHOROIDTOOL_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.output += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string line; std::getline(ss, line);) out.push_back(line);
  return out;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

/// The phantom suite is written once and shared (read-only) by all tests.
const fs::path& phantoms() {
  static TempDir dir("choroid_cli_phantoms");
  static const bool written = [] {
    const auto r = run("phantom -o " + q(dir.path()) + " --seed 1");
    return r.code == 0;
  }();
  EXPECT_TRUE(written);
  return dir.path();
}

/// Copies a few phantom scans (image, sidecar and masks) into `dst`.
void copy_members(const fs::path& dst, const std::vector<std::string>& names) {
  fs::create_directories(dst);
  for (const auto& n : names) {
    for (const char* suffix : {".png", ".meta.json", ".region.png", ".vessel.png", ".truth.json"}) {
      fs::copy_file(phantoms() / (n + suffix), dst / (n + suffix));
    }
  }
}

}  // namespace

TEST(Cli, PhantomWritesTheSuite) {
  std::size_t images = 0;
  for (const auto& e : fs::directory_iterator(phantoms())) {
    const auto name = e.path().filename().string();
    if (e.path().extension() == ".png" && e.path().stem().string().find('.') == std::string::npos) {
      ++images;
      EXPECT_TRUE(fs::exists(phantoms() / (e.path().stem().string() + ".meta.json"))) << name;
    }
  }
  EXPECT_EQ(images, 24u);
}

TEST(Cli, AnalyzeSuiteWithNiblack) {
  TempDir out;
  const auto r = run("analyze " + q(phantoms()) + " -o " + q(out.path()) +
                     " --segmenter niblack --niblack-window 31 --niblack-k -0.1");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto csv = lines(slurp(out / "metrics.csv"));
  ASSERT_EQ(csv.size(), 25u);
  EXPECT_EQ(csv[0],
            "source_id,scan_type,fovea_col,thickness_pt1_um,thickness_pt2_um,thickness_pt3_um,"
            "thickness_mean_um,area_mm2,vi,soft_vi,flags");
  bool saw_flat = false, saw_peri = false;
  for (const auto& line : csv) {
    if (line.rfind("flat_clean,", 0) == 0) {
      saw_flat = true;
      EXPECT_NE(line.find(",400.000000,400.000000,400.000000,400.000000,"), std::string::npos) << line;
    }
    if (line.rfind("peripapillary_style,", 0) == 0) {
      saw_peri = true;
      EXPECT_NE(line.find("no_fovea_roi"), std::string::npos) << line;
    }
  }
  EXPECT_TRUE(saw_flat);
  EXPECT_TRUE(saw_peri);
  EXPECT_TRUE(fs::exists(out / "flat_vessels.vessel.png"));
  EXPECT_TRUE(fs::exists(out / "timings.log"));

  const auto j = nlohmann::json::parse(slurp(out / "tilted45.metrics.json"));
  EXPECT_EQ(j["segmenter"], "niblack");
  EXPECT_NEAR(j["thickness_mean_um"].get<double>(), 450.0 / std::sqrt(2.0), 1.0);
}

TEST(Cli, CorruptScanFailsAloneWithExitOne) {
  TempDir in, out;
  copy_members(in.path(), {"flat_clean", "flat_vessels", "curved_thin"});
  std::ofstream(in / "flat_vessels.png", std::ios::trunc) << "not a png";
  const auto r = run("analyze " + q(in.path()) + " -o " + q(out.path()) + " --segmenter niblack");
  EXPECT_EQ(r.code, 1) << r.output;
  EXPECT_NE(r.output.find("failed: flat_vessels"), std::string::npos) << r.output;
  const auto csv = lines(slurp(out / "metrics.csv"));
  ASSERT_EQ(csv.size(), 3u);
  EXPECT_EQ(csv[1].substr(0, 12), "curved_thin,");
  EXPECT_EQ(csv[2].substr(0, 11), "flat_clean,");
  EXPECT_NE(slurp(out / "timings.log").find("flat_vessels,failed"), std::string::npos);
}

TEST(Cli, EvaluateGroundTruthAgainstItself) {
  TempDir out;
  const auto r = run("evaluate " + q(phantoms()) + " " + q(phantoms()) + " -o " + q(out.path()));
  ASSERT_EQ(r.code, 0) << r.output;
  const auto j = nlohmann::json::parse(slurp(out / "report.json"));
  EXPECT_EQ(j["n_matched"], 24);
  EXPECT_DOUBLE_EQ(j["region_dice_mean"].get<double>(), 1.0);
  EXPECT_EQ(j["fovea"]["mae_px"].get<double>(), 0.0);
  EXPECT_EQ(j["fovea"]["n"], 22);
  EXPECT_EQ(j["metrics"]["thickness"]["mae"].get<double>(), 0.0);
  // flat_clean has no vessels on either side: the empty masks agree.
  EXPECT_DOUBLE_EQ(j["vessel_dice_mean"].get<double>(), 1.0);
  for (const char* m : {"thickness", "area", "vascular_index"}) {
    EXPECT_TRUE(fs::exists(out / (std::string("bland_altman_") + m + ".csv"))) << m;
    EXPECT_TRUE(fs::exists(out / (std::string("scatter_") + m + ".csv"))) << m;
  }
}

TEST(Cli, EvaluateListsUnmatchedStems) {
  TempDir pred, gt, out;
  copy_members(pred.path(), {"flat_clean", "curved_thin"});
  copy_members(gt.path(), {"flat_clean", "wavy_thin"});
  const auto r = run("evaluate " + q(pred.path()) + " " + q(gt.path()) + " -o " + q(out.path()));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("unmatched (pred only): curved_thin"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("unmatched (gt only): wavy_thin"), std::string::npos) << r.output;
  const auto j = nlohmann::json::parse(slurp(out / "report.json"));
  EXPECT_EQ(j["n_matched"], 1);
  EXPECT_EQ(j["unmatched"]["pred_only"][0], "curved_thin");
  EXPECT_EQ(j["unmatched"]["gt_only"][0], "wavy_thin");
}

TEST(Cli, AnalyzeThenEvaluate) {
  TempDir in, out, rep;
  copy_members(in.path(), {"flat_vessels", "clean_vessels"});
  ASSERT_EQ(run("analyze " + q(in.path()) + " -o " + q(out.path())).code, 0);
  EXPECT_TRUE(fs::exists(out / "clean_vessels.vessel_prob.png"));
  const auto r = run("evaluate " + q(out.path()) + " " + q(in.path()) + " -o " + q(rep.path()));
  ASSERT_EQ(r.code, 0) << r.output;
  const auto j = nlohmann::json::parse(slurp(rep / "report.json"));
  // Plumbing check only; the quality floor is measured by the acceptance run.
  EXPECT_GT(j["vessel_dice_mean"].get<double>(), 0.6);
  EXPECT_GT(j["auc"].get<double>(), 0.9);
  EXPECT_EQ(j["auc_mode"], "per_scan_mean");
}

TEST(Cli, ConfigFileAndFlagPrecedence) {
  TempDir in, out_cfg, out_flag, out_ref;
  copy_members(in.path(), {"flat_vessels"});
  const auto ini = in / "run.ini";
  std::ofstream(ini) << "[analyze]\nsegmenter = niblack\n[niblack]\nwindow = 21\nk = -0.3\n";
  ASSERT_EQ(run("analyze " + q(in.path()) + " -o " + q(out_cfg.path()) + " --config " + q(ini)).code, 0);
  ASSERT_EQ(run("analyze " + q(in.path()) + " -o " + q(out_flag.path()) + " --config " + q(ini) +
                " --niblack-window 51 --niblack-k -0.05")
                .code,
            0);
  ASSERT_EQ(run("analyze " + q(in.path()) + " -o " + q(out_ref.path()) + " --segmenter niblack").code, 0);
  EXPECT_EQ(slurp(out_flag / "metrics.csv"), slurp(out_ref / "metrics.csv"));
  EXPECT_NE(slurp(out_cfg / "metrics.csv"), slurp(out_ref / "metrics.csv"));
}

TEST(Cli, BadInvocationsExitTwo) {
  TempDir out;
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("analyze -o " + q(out.path())).code, 2);
  EXPECT_EQ(run("analyze /no/such/dir -o " + q(out.path())).code, 2);
  EXPECT_EQ(run("analyze " + q(phantoms()) + " -o " + q(out.path()) + " --segmenter unet").code, 2);
  EXPECT_EQ(run("analyze " + q(phantoms()) + " -o " + q(out.path()) + " --niblack-window 50").code, 2);
  const auto bad = out / "bad.ini";
  std::ofstream(bad) << "[mmcq]\nclusters = 3\n";
  EXPECT_EQ(run("analyze " + q(phantoms()) + " -o " + q(out.path()) + " --config " + q(bad)).code, 2);
}

TEST(Cli, OutputsAreByteIdenticalAcrossJobsAndRuns) {
  TempDir in, a, b, c;
  copy_members(in.path(), {"flat_vessels", "tilted45", "peripapillary_style"});
  for (const auto* dir : {&a, &b}) {
    ASSERT_EQ(run("analyze " + q(in.path()) + " -o " + q(dir->path()) + " -j 1").code, 0);
  }
  ASSERT_EQ(run("analyze " + q(in.path()) + " -o " + q(c.path()) + " -j 3").code, 0);
  for (const char* f : {"metrics.csv", "flat_vessels.metrics.json", "tilted45.metrics.json",
                        "peripapillary_style.metrics.json", "tilted45.vessel.png",
                        "tilted45.vessel_prob.png"}) {
    const auto ref = slurp(a / f);
    ASSERT_FALSE(ref.empty()) << f;
    EXPECT_EQ(ref, slurp(b / f)) << f;
    EXPECT_EQ(ref, slurp(c / f)) << f;
  }
}

TEST(Cli, SimulateFoveaOnGroundTruthMasks) {
  TempDir in, out;
  copy_members(in.path(), {"flat_vessels", "curved_thin", "tilt_gentle", "volume_style"});
  const auto r = run("simulate-fovea " + q(in.path()) + " -o " + q(out.path()) + " --n-sims 5 --seed 3");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("rejected (not fovea-centred): volume_style"), std::string::npos);
  const auto csv = lines(slurp(out / "fovea_sim.csv"));
  EXPECT_EQ(csv.size(), 1u + 5u * 3u);
  const auto j = nlohmann::json::parse(slurp(out / "fovea_sim_summary.json"));
  EXPECT_EQ(j["n_sims"], 5);
}
