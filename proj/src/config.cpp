#include "uavinspect/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json_fields.hpp"
#include "uavinspect/error.hpp"

namespace uavinspect {
namespace {

using nlohmann::json;

void check(bool ok, const std::string& key, const std::string& domain) {
  if (!ok) fail(ErrorCode::ConfigError, key + " must be " + domain);
}

// Module-level validators raise InvalidParameter; the config reports them as
// configuration errors.
template <typename F>
void rethrow_as_config(const std::string& where, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    fail(ErrorCode::ConfigError, where + ": " + e.what());
  }
}

json synth_block(const SynthWallSpec& s) {
  json j = to_json(s);
  j.erase("seed");
  return j;
}

void flatten(const json& j, const std::string& prefix, std::vector<std::string>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(*it, prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else {
    out.push_back(prefix);
  }
}

}  // namespace

void PipelineConfig::validate() const {
  const PointcloudConfig& p = pointcloud;
  check(p.overlap_tau >= 0 && std::isfinite(p.overlap_tau), "pointcloud.overlap_tau", ">= 0");
  check(p.icp_max_iterations >= 1, "pointcloud.icp_max_iterations", ">= 1");
  check(p.icp_tolerance >= 0, "pointcloud.icp_tolerance", ">= 0");
  check(p.outlier_k >= 0, "pointcloud.outlier_k", ">= 0");
  check(std::isfinite(p.outlier_alpha), "pointcloud.outlier_alpha", "finite");
  check(p.voxel_leaf >= 0 && std::isfinite(p.voxel_leaf), "pointcloud.voxel_leaf", ">= 0");
  check(p.ransac_iterations >= 1, "pointcloud.ransac_iterations", ">= 1");
  check(p.ransac_distance > 0, "pointcloud.ransac_distance", "> 0");
  check(p.min_inliers >= 3, "pointcloud.min_inliers", ">= 3");
  check(p.max_planes >= 1, "pointcloud.max_planes", ">= 1");
  check(p.cluster_epsilon > 0, "pointcloud.cluster_epsilon", "> 0");

  const MissionConfig& m = mission;
  rethrow_as_config("mission.camera", [&] { m.camera.validate(); });
  check(m.gsd_mm_per_px > 0, "mission.gsd_mm_per_px", "> 0");
  check(m.overlap >= 0 && m.overlap < 1, "mission.overlap", "in [0, 1)");
  check(m.grid.resolution > 0, "mission.grid_resolution", "> 0");
  check(m.grid.inflation >= 0, "mission.inflation", ">= 0");
  check(m.grid.margin >= 0, "mission.margin", ">= 0");
  rethrow_as_config("mission weights", [&] { m.weights.validate(); });
  check(m.gps_sigma >= 0, "mission.gps_sigma", ">= 0");
  check(m.gps_clip >= 0, "mission.gps_clip", ">= 0");

  const StitchParams& s = stitch;
  check(s.sift.scales_per_octave >= 1, "stitch.scales_per_octave", ">= 1");
  check(s.sift.sigma > 0, "stitch.sigma", "> 0");
  check(s.sift.assumed_blur >= 0 && s.sift.assumed_blur < s.sift.sigma, "stitch.assumed_blur", "in [0, sigma)");
  check(s.sift.contrast_threshold >= 0, "stitch.contrast_threshold", ">= 0");
  check(s.sift.edge_ratio > 1, "stitch.edge_ratio", "> 1");
  check(s.sift.max_octaves >= 0, "stitch.max_octaves", ">= 0");
  check(s.ratio > 0 && s.ratio < 1, "stitch.ratio", "in (0, 1)");
  check(s.ransac.iterations >= 1, "stitch.ransac_iterations", ">= 1");
  check(s.ransac.inlier_tolerance > 0, "stitch.inlier_tolerance", "> 0");
  check(s.verify_alpha >= 0, "stitch.verify_alpha", ">= 0");
  check(s.verify_beta >= 0 && s.verify_beta <= 1, "stitch.verify_beta", "in [0, 1]");

  check(histoseg.peaks.smooth_window >= 1 && histoseg.peaks.smooth_window % 2 == 1, "histoseg.smooth_window",
        "odd and >= 1");
  check(histoseg.peaks.min_prominence >= 0 && histoseg.peaks.min_prominence <= 1, "histoseg.min_prominence",
        "in [0, 1]");
  check(histoseg.peaks.min_separation >= 1, "histoseg.min_separation", ">= 1");
  check(histoseg.beta >= 0 && histoseg.beta <= 255, "histoseg.beta", "in [0, 255]");

  rethrow_as_config("crack", [&] { crack.params.sauvola.validate(); });
  check(crack.params.min_elongation >= 1, "crack.min_elongation", ">= 1");

  rethrow_as_config("synth_wall", [&] { synth_wall.validate(); });
}

json to_json(const PipelineConfig& c) {
  const PointcloudConfig& p = c.pointcloud;
  const MissionConfig& m = c.mission;
  const StitchParams& s = c.stitch;
  const CrackParams& k = c.crack.params;
  return {
      {"seed", c.seed},
      {"input", {{"clouds", c.input.clouds}, {"images", c.input.images}, {"mosaic", c.input.mosaic}}},
      {"output", c.output},
      {"pointcloud",
       {{"overlap_tau", p.overlap_tau},
        {"icp_max_iterations", p.icp_max_iterations},
        {"icp_tolerance", p.icp_tolerance},
        {"outlier_k", p.outlier_k},
        {"outlier_alpha", p.outlier_alpha},
        {"voxel_leaf", p.voxel_leaf},
        {"ransac_iterations", p.ransac_iterations},
        {"ransac_distance", p.ransac_distance},
        {"min_inliers", p.min_inliers},
        {"max_planes", p.max_planes},
        {"cluster_epsilon", p.cluster_epsilon}}},
      {"mission",
       {{"focal_length_mm", m.camera.focal_length_mm},
        {"sensor_width_mm", m.camera.sensor_width_mm},
        {"sensor_height_mm", m.camera.sensor_height_mm},
        {"pixel_cols", m.camera.pixel_cols},
        {"pixel_rows", m.camera.pixel_rows},
        {"gsd_mm_per_px", m.gsd_mm_per_px},
        {"overlap", m.overlap},
        {"grid_resolution", m.grid.resolution},
        {"inflation", m.grid.inflation},
        {"margin", m.grid.margin},
        {"a1", m.weights.a1},
        {"a2", m.weights.a2},
        {"a3", m.weights.a3},
        {"gps_sigma", m.gps_sigma},
        {"gps_clip", m.gps_clip}}},
      {"stitch",
       {{"scales_per_octave", s.sift.scales_per_octave},
        {"sigma", s.sift.sigma},
        {"assumed_blur", s.sift.assumed_blur},
        {"contrast_threshold", s.sift.contrast_threshold},
        {"edge_ratio", s.sift.edge_ratio},
        {"max_octaves", s.sift.max_octaves},
        {"upsample", s.sift.upsample},
        {"ratio", s.ratio},
        {"ransac_iterations", s.ransac.iterations},
        {"inlier_tolerance", s.ransac.inlier_tolerance},
        {"verify_alpha", s.verify_alpha},
        {"verify_beta", s.verify_beta},
        {"blank_fill", s.blank_fill}}},
      {"histoseg",
       {{"enabled", c.histoseg.enabled},
        {"smooth_window", c.histoseg.peaks.smooth_window},
        {"min_prominence", c.histoseg.peaks.min_prominence},
        {"min_separation", c.histoseg.peaks.min_separation},
        {"beta", c.histoseg.beta}}},
      {"crack",
       {{"window", k.sauvola.window},
        {"k", k.sauvola.k},
        {"R", k.sauvola.r},
        {"polarity", to_string(k.sauvola.polarity)},
        {"min_area", k.min_area},
        {"min_elongation", k.min_elongation},
        {"median_prefilter", k.median_prefilter},
        {"exclude_removed", c.crack.exclude_removed}}},
      {"synth_wall", synth_block(c.synth_wall)},
  };
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  detail::FieldReader root(j, "config");
  root.read("seed", c.seed);
  root.read("output", c.output);
  if (const json* in = root.child("input")) {
    detail::FieldReader r(*in, "input");
    r.read("clouds", c.input.clouds);
    r.read("images", c.input.images);
    r.read("mosaic", c.input.mosaic);
    r.finish();
  }
  if (const json* pc = root.child("pointcloud")) {
    PointcloudConfig& p = c.pointcloud;
    detail::FieldReader r(*pc, "pointcloud");
    r.read("overlap_tau", p.overlap_tau);
    r.read("icp_max_iterations", p.icp_max_iterations);
    r.read("icp_tolerance", p.icp_tolerance);
    r.read("outlier_k", p.outlier_k);
    r.read("outlier_alpha", p.outlier_alpha);
    r.read("voxel_leaf", p.voxel_leaf);
    r.read("ransac_iterations", p.ransac_iterations);
    r.read("ransac_distance", p.ransac_distance);
    r.read("min_inliers", p.min_inliers);
    r.read("max_planes", p.max_planes);
    r.read("cluster_epsilon", p.cluster_epsilon);
    r.finish();
  }
  if (const json* mj = root.child("mission")) {
    MissionConfig& m = c.mission;
    detail::FieldReader r(*mj, "mission");
    r.read("focal_length_mm", m.camera.focal_length_mm);
    r.read("sensor_width_mm", m.camera.sensor_width_mm);
    r.read("sensor_height_mm", m.camera.sensor_height_mm);
    r.read("pixel_cols", m.camera.pixel_cols);
    r.read("pixel_rows", m.camera.pixel_rows);
    r.read("gsd_mm_per_px", m.gsd_mm_per_px);
    r.read("overlap", m.overlap);
    r.read("grid_resolution", m.grid.resolution);
    r.read("inflation", m.grid.inflation);
    r.read("margin", m.grid.margin);
    r.read("a1", m.weights.a1);
    r.read("a2", m.weights.a2);
    r.read("a3", m.weights.a3);
    r.read("gps_sigma", m.gps_sigma);
    r.read("gps_clip", m.gps_clip);
    r.finish();
  }
  if (const json* sj = root.child("stitch")) {
    StitchParams& s = c.stitch;
    detail::FieldReader r(*sj, "stitch");
    r.read("scales_per_octave", s.sift.scales_per_octave);
    r.read("sigma", s.sift.sigma);
    r.read("assumed_blur", s.sift.assumed_blur);
    r.read("contrast_threshold", s.sift.contrast_threshold);
    r.read("edge_ratio", s.sift.edge_ratio);
    r.read("max_octaves", s.sift.max_octaves);
    r.read("upsample", s.sift.upsample);
    r.read("ratio", s.ratio);
    r.read("ransac_iterations", s.ransac.iterations);
    r.read("inlier_tolerance", s.ransac.inlier_tolerance);
    r.read("verify_alpha", s.verify_alpha);
    r.read("verify_beta", s.verify_beta);
    int blank = s.blank_fill;
    r.read("blank_fill", blank);
    check(blank >= 0 && blank <= 255, "stitch.blank_fill", "in [0, 255]");
    s.blank_fill = static_cast<std::uint8_t>(blank);
    r.finish();
  }
  if (const json* hj = root.child("histoseg")) {
    detail::FieldReader r(*hj, "histoseg");
    r.read("enabled", c.histoseg.enabled);
    r.read("smooth_window", c.histoseg.peaks.smooth_window);
    r.read("min_prominence", c.histoseg.peaks.min_prominence);
    r.read("min_separation", c.histoseg.peaks.min_separation);
    r.read("beta", c.histoseg.beta);
    r.finish();
  }
  if (const json* kj = root.child("crack")) {
    CrackParams& k = c.crack.params;
    detail::FieldReader r(*kj, "crack");
    r.read("window", k.sauvola.window);
    r.read("k", k.sauvola.k);
    r.read("R", k.sauvola.r);
    std::string polarity = to_string(k.sauvola.polarity);
    r.read("polarity", polarity);
    rethrow_as_config("crack.polarity", [&] { k.sauvola.polarity = polarity_from_string(polarity); });
    r.read("min_area", k.min_area);
    r.read("min_elongation", k.min_elongation);
    r.read("median_prefilter", k.median_prefilter);
    r.read("exclude_removed", c.crack.exclude_removed);
    r.finish();
  }
  if (const json* wj = root.child("synth_wall")) {
    if (wj->is_object() && wj->contains("seed")) {
      fail(ErrorCode::ConfigError, "synth_wall: unknown key 'seed' (the top-level seed drives every stage)");
    }
    c.synth_wall = synth_wall_spec_from_json(*wj);
  }
  root.finish();
  c.validate();
  return c;
}

PipelineConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, "cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

void set_config_value(PipelineConfig& c, std::string_view key, std::string_view value) {
  json doc = to_json(c);
  json* node = &doc;
  std::string path;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part(key.substr(start, dot == std::string_view::npos ? key.npos : dot - start));
    if (!node->is_object() || !node->contains(part)) fail(ErrorCode::ConfigError, "unknown config key '" + std::string(key) + "'");
    node = &(*node)[part];
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  if (node->is_object()) fail(ErrorCode::ConfigError, "config key '" + std::string(key) + "' names a block, not a value");

  auto parse_scalar = [&](std::string_view text) -> json {
    try {
      return json::parse(text);
    } catch (const json::parse_error&) {
      fail(ErrorCode::ConfigError, "cannot parse value '" + std::string(text) + "' for " + std::string(key));
    }
  };
  json replacement;
  if (node->is_string()) {
    replacement = std::string(value);
  } else if (node->is_array()) {
    const std::string text(value);
    if (!text.empty() && text.front() == '[') {
      replacement = parse_scalar(text);
    } else {
      replacement = json::array();
      std::size_t pos = 0;
      while (!text.empty()) {
        const std::size_t comma = text.find(',', pos);
        const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        json parsed = json::parse(item, nullptr, false);
        replacement.push_back(parsed.is_discarded() || parsed.is_object() || parsed.is_array() ? json(item) : parsed);
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
    }
  } else {
    replacement = parse_scalar(value);
  }
  *node = replacement;
  c = config_from_json(doc);
}

std::vector<std::string> config_keys(const PipelineConfig& c) {
  std::vector<std::string> keys;
  flatten(to_json(c), "", keys);
  return keys;
}

std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage) {
  // FNV-1a over the stage name, mixed with the seed by splitmix64.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : stage) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  std::uint64_t x = seed ^ h;
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace uavinspect
