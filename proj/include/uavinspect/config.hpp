#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "uavinspect/crack.hpp"
#include "uavinspect/histoseg.hpp"
#include "uavinspect/mission.hpp"
#include "uavinspect/pointcloud.hpp"
#include "uavinspect/stitch.hpp"
#include "uavinspect/synth_wall.hpp"

namespace uavinspect {

struct InputPaths {
  std::vector<std::string> clouds;  // XYZ scans, registered in list order
  std::string images;               // directory of survey images to stitch
  std::string mosaic;               // pre-stitched image; used when `images` is empty
};

struct PointcloudConfig {
  double overlap_tau = 0.0;  // 0 disables overlap-restricted registration
  int icp_max_iterations = 50;
  double icp_tolerance = 1e-10;
  int outlier_k = 8;  // 0 disables outlier removal
  double outlier_alpha = 1.0;
  double voxel_leaf = 0.0;  // 0 disables downsampling
  int ransac_iterations = 500;
  double ransac_distance = 0.02;
  int min_inliers = 200;
  int max_planes = 4;
  double cluster_epsilon = 0.2;
};

struct MissionConfig {
  CameraModel camera;
  double gsd_mm_per_px = 0.5;
  double overlap = 0.3;
  GridParams grid{0.1, 1, 2.0};
  AStarWeights weights;
  double gps_sigma = 0.5;  // 0 disables the perturbed copy of the path
  double gps_clip = 1.5;
};

struct HistosegConfig {
  bool enabled = true;
  PeakParams peaks;
  int beta = 255;
};

struct CrackConfig {
  CrackParams params;
  bool exclude_removed = true;  // leave beta pixels out of the local statistics
};

struct PipelineConfig {
  std::uint64_t seed = 7;
  InputPaths input;
  std::string output = "out";
  PointcloudConfig pointcloud;
  MissionConfig mission;
  StitchParams stitch;
  HistosegConfig histoseg;
  CrackConfig crack;
  SynthWallSpec synth_wall;  // its seed field is ignored; see stage_seed()

  // Throws ConfigError naming the offending key.
  void validate() const;
};

nlohmann::json to_json(const PipelineConfig& c);
// Unknown keys and out-of-domain values raise ConfigError. Missing keys keep
// their defaults.
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig parse_config(std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);

// Overrides one dotted key ("crack.window") from its textual value. Strings
// are taken verbatim, lists accept JSON arrays or comma-separated items,
// everything else is parsed as JSON.
void set_config_value(PipelineConfig& c, std::string_view key, std::string_view value);

// Every settable dotted key, sorted.
std::vector<std::string> config_keys(const PipelineConfig& c);

// Per-stage seed derived from the config seed.
std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage);

}  // namespace uavinspect
