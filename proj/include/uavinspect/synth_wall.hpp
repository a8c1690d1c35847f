#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "uavinspect/crack.hpp"
#include "uavinspect/imaging.hpp"
#include "uavinspect/pointcloud.hpp"
#include "uavinspect/stitch.hpp"

namespace uavinspect {

using Rgb = std::array<int, 3>;

// Desk-scale replica of a panel wall: wooden panels joined by seams, pink
// stitching markers and dark random-walk cracks, photographed as overlapping
// tiles with slightly perturbed projective poses.
struct SynthWallSpec {
  int panel_rows = 3;
  int panel_cols = 3;
  double panel_width_mm = 600.0;
  double panel_height_mm = 900.0;
  double px_per_mm = 0.5;

  int pattern_count = 18;
  Rgb pattern_rgb{245, 105, 180};
  double pattern_size_mm = 180.0;

  int crack_count = 2;
  double crack_width_px = 3.0;
  Rgb crack_rgb{105, 18, 6};
  double crack_length_px = 240.0;

  Rgb surface_rgb{145, 118, 80};
  double grain_amplitude = 10.0;
  double pore_contrast = 30.0;
  double seam_width_px = 2.0;
  double seam_darkening = 0.8;

  int tile_rows = 3;
  int tile_cols = 3;
  double overlap = 0.3;
  double tile_rotation_deg = 1.5;
  double tile_scale_jitter = 0.02;
  double tile_perspective = 2e-5;

  // Multiplicative left-to-right light ramp: 1 - a at the left edge, 1 + a at the right.
  double illumination_gradient = 0.0;

  // Point cloud: sample spacing and the floating obstacle placed at the
  // expected camera standoff in front of the wall.
  double cloud_spacing_m = 0.03;
  double obstacle_standoff_m = 11.15;

  std::uint64_t seed = 7;

  void validate() const;
};

nlohmann::json to_json(const SynthWallSpec& spec);
SynthWallSpec synth_wall_spec_from_json(const nlohmann::json& j);

struct SynthWall {
  RasterImage wall;  // RGB, wall pixel coordinates
  BinaryMask pattern_mask;
  BinaryMask crack_mask;
  BinaryMask crack_skeleton;
  std::vector<std::vector<Point2>> crack_polylines;
  std::vector<RasterImage> tiles;
  std::vector<Homography> tile_to_wall;
  PointCloud cloud;  // metres; wall in the y = 0 plane, z up
};

SynthWall synth_wall(const SynthWallSpec& spec);

// tiles/tile_NN.png, wall.png, *_mask.png, ground_truth.json, cloud.xyz
void write_synth_wall(const SynthWall& wall, const SynthWallSpec& spec, const std::filesystem::path& dir);

// Ground truth for a mosaic built from the tiles: each valid mosaic pixel is
// traced back to the tile that wrote it (last writer wins) and from there
// through the tile's true pose into the wall mask.
enum class Support {
  Nearest,  // the nearest tile pixel is in the mask
  Any,      // any of the four bilinear source pixels is
  All,      // all four are: the mosaic value is a pure sample of the mask region
};
BinaryMask mask_in_mosaic(const BinaryMask& wall_mask, const Mosaic& mosaic, const SynthWall& wall,
                          Support support = Support::Nearest);

}  // namespace uavinspect
