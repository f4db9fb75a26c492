#include "choroid/config.hpp"

#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace choroid {

namespace pt = boost::property_tree;

std::string to_string(Segmenter s) {
  switch (s) {
    case Segmenter::kMmcq: return "mmcq";
    case Segmenter::kNiblack: return "niblack";
    case Segmenter::kProbability: return "probability";
  }
  return "mmcq";
}

Segmenter parse_segmenter(const std::string& text) {
  if (text == "mmcq") return Segmenter::kMmcq;
  if (text == "niblack") return Segmenter::kNiblack;
  if (text == "probability") return Segmenter::kProbability;
  throw Error(ErrorCode::kInvalidConfig, "unknown segmenter '" + text + "'");
}

namespace {

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    out.push_back(std::stoul(item.substr(first)));
  }
  return out;
}

template <typename T>
T get(const pt::ptree& section, const std::string& key, T fallback) {
  // get(key, fallback) would also swallow values that fail to convert.
  if (!section.count(key)) return fallback;
  return section.get<T>(key);
}

void reject_unknown(const pt::ptree& section, const std::string& name,
                    const std::set<std::string>& known) {
  for (const auto& [key, value] : section) {
    if (!known.contains(key)) {
      throw Error(ErrorCode::kInvalidConfig, "unknown key '" + key + "' in [" + name + "]");
    }
  }
}

}  // namespace

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig cfg) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what());
  }

  try {
    for (const auto& [name, section] : tree) {
      if (name == "mmcq") {
        reject_unknown(section, name, {"scales", "clusters_per_patch", "global_clusters",
                                       "dark_clusters", "vote_threshold"});
        if (auto s = section.get_optional<std::string>("scales")) cfg.mmcq.scales = parse_sizes(*s);
        cfg.mmcq.clusters_per_patch = get(section, "clusters_per_patch", cfg.mmcq.clusters_per_patch);
        cfg.mmcq.global_clusters = get(section, "global_clusters", cfg.mmcq.global_clusters);
        cfg.mmcq.dark_clusters = get(section, "dark_clusters", cfg.mmcq.dark_clusters);
        cfg.mmcq.vote_threshold = get(section, "vote_threshold", cfg.mmcq.vote_threshold);
      } else if (name == "niblack") {
        reject_unknown(section, name, {"window", "k"});
        cfg.niblack.window = get(section, "window", cfg.niblack.window);
        cfg.niblack.k = get(section, "k", cfg.niblack.k);
      } else if (name == "metrics") {
        reject_unknown(section, name, {"vi_convention", "tangent_half_window", "roi_half_width_um"});
        if (auto v = section.get_optional<std::string>("vi_convention")) {
          if (*v == "total") cfg.metrics.vi_convention = VesselIndexConvention::kVesselToTotal;
          else if (*v == "non_vessel")
            cfg.metrics.vi_convention = VesselIndexConvention::kVesselToNonVessel;
          else throw Error(ErrorCode::kInvalidConfig, "vi_convention must be total or non_vessel");
        }
        cfg.metrics.tangent_half_window =
            get(section, "tangent_half_window", cfg.metrics.tangent_half_window);
        cfg.metrics.roi_half_width_um =
            get(section, "roi_half_width_um", cfg.metrics.roi_half_width_um);
      } else if (name == "analyze") {
        reject_unknown(section, name, {"segmenter", "jobs", "microns_per_px_y", "pooled_auc"});
        if (auto s = section.get_optional<std::string>("segmenter")) {
          cfg.segmenter = parse_segmenter(*s);
        }
        cfg.jobs = get(section, "jobs", cfg.jobs);
        if (auto y = section.get_optional<double>("microns_per_px_y")) cfg.microns_per_px_y = *y;
        cfg.pooled_auc = get(section, "pooled_auc", cfg.pooled_auc);
      } else {
        throw Error(ErrorCode::kInvalidConfig, "unknown section [" + name + "]");
      }
    }
  } catch (const pt::ptree_error& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what());
  } catch (const std::invalid_argument& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what());
  }
  cfg.mmcq.validate();
  return cfg;
}

}  // namespace choroid
