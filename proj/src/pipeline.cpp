#include "uavinspect/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

namespace uavinspect {
namespace fs = std::filesystem;
using nlohmann::json;

StageError::StageError(std::string stage, const Error& cause)
    : Error(cause.code(), "stage " + stage + ": " + cause.what(), Verbatim{}), stage_(std::move(stage)) {}

std::string to_string(Command c) {
  switch (c) {
    case Command::SynthWall: return "synth-wall";
    case Command::Plan: return "plan";
    case Command::Stitch: return "stitch";
    case Command::Detect: return "detect";
    case Command::Pipeline: return "pipeline";
  }
  return "unknown";
}

json RunSummary::to_json() const {
  json stages = json::array();
  for (const StageTiming& t : timings) stages.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  json files = json::array();
  for (const fs::path& p : outputs) files.push_back(p.string());
  return {{"stages", stages}, {"outputs", files}};
}

namespace {

class Runner {
 public:
  Runner(const PipelineConfig& config, std::ostream* log) : c_(config), log_(log), out_(config.output) {}

  RunSummary run(Command command) {
    ensure_output();
    switch (command) {
      case Command::SynthWall:
        stage("synth-wall", [&] { synth(); });
        break;
      case Command::Plan:
        stage("plan", [&] { plan(); });
        break;
      case Command::Stitch:
        stage("stitch", [&] { stitch(); });
        break;
      case Command::Detect:
        detect_from_file();
        break;
      case Command::Pipeline:
        if (!c_.input.clouds.empty()) stage("plan", [&] { plan(); });
        if (!c_.input.images.empty()) {
          stage("stitch", [&] { stitch(); });
          analyse(mosaic_->image, "mosaic.png");
        } else {
          detect_from_file();
        }
        break;
    }
    return std::move(summary_);
  }

 private:
  template <typename F>
  void stage(const std::string& name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      body();
    } catch (const StageError&) {
      throw;
    } catch (const Error& e) {
      throw StageError(name, e);
    } catch (const std::exception& e) {
      throw StageError(name, Error(ErrorCode::IoError, e.what()));
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    summary_.timings.push_back({name, s});
    if (log_) *log_ << "stage " << name << ": " << std::fixed << std::setprecision(3) << s << " s\n";
  }

  void ensure_output() {
    std::error_code ec;
    fs::create_directories(out_, ec);
    if (ec) throw StageError("output", Error(ErrorCode::IoError, "cannot create " + out_.string() + ": " + ec.message()));
  }

  fs::path file(const std::string& name) {
    summary_.outputs.push_back(out_ / name);
    return out_ / name;
  }

  void write_json(const json& j, const std::string& name) {
    std::ofstream o(file(name));
    if (!o) fail(ErrorCode::IoError, "cannot write " + (out_ / name).string());
    o << j.dump(2) << '\n';
  }

  void synth() {
    SynthWallSpec spec = c_.synth_wall;
    spec.seed = stage_seed(c_.seed, "synth-wall");
    const SynthWall wall = synth_wall(spec);
    write_synth_wall(wall, spec, out_);
    for (const char* name : {"wall.png", "pattern_mask.png", "crack_mask.png", "crack_skeleton.png", "cloud.xyz",
                             "ground_truth.json"}) {
      summary_.outputs.push_back(out_ / name);
    }
    for (std::size_t i = 0; i < wall.tiles.size(); ++i) {
      std::ostringstream n;
      n << "tile_" << std::setw(2) << std::setfill('0') << i << ".png";
      summary_.outputs.push_back(out_ / "tiles" / n.str());
    }
  }

  void plan() {
    const PointcloudConfig& pc = c_.pointcloud;
    require(!c_.input.clouds.empty(), ErrorCode::InvalidParameter, "no point clouds configured (input.clouds)");
    PointCloud merged = load_xyz(c_.input.clouds.front());
    std::optional<Vec3> viewpoint = merged.scan_origin;
    PointCloud previous = merged;
    IcpOptions icp{pc.icp_max_iterations, pc.icp_tolerance, pc.overlap_tau};
    json registrations = json::array();
    for (std::size_t i = 1; i < c_.input.clouds.size(); ++i) {
      PointCloud next = load_xyz(c_.input.clouds[i]);
      const IcpResult r = icp_register(next, previous, icp);
      next = transform_cloud(next, r.transform);
      registrations.push_back({{"cloud", c_.input.clouds[i]}, {"rms", r.rms}, {"iterations", r.iterations}});
      merged.points.insert(merged.points.end(), next.points.begin(), next.points.end());
      previous = std::move(next);
    }
    if (pc.outlier_k > 0) merged = remove_outliers(merged, static_cast<std::size_t>(pc.outlier_k), pc.outlier_alpha);
    if (pc.voxel_leaf > 0) merged = voxel_downsample(merged, pc.voxel_leaf);

    SurfaceOptions so;
    so.min_inliers = static_cast<std::size_t>(pc.min_inliers);
    so.max_planes = static_cast<std::size_t>(pc.max_planes);
    so.ransac = {pc.ransac_iterations, pc.ransac_distance, stage_seed(c_.seed, "pointcloud")};
    SurfaceExtraction surfaces = extract_surfaces(merged, so);
    if (surfaces.patches.empty()) fail(ErrorCode::TooFewPoints, "no planar surface with enough inliers");
    if (viewpoint) {
      for (SurfacePatch& p : surfaces.patches) face_toward(p, *viewpoint);
    }
    json sj = json::array();
    for (const SurfacePatch& p : surfaces.patches) sj.push_back(to_json(p));
    write_json({{"registrations", registrations}, {"surfaces", sj}}, "surfaces.json");

    const ClusterSet clusters = euclidean_cluster(surfaces.residual, pc.cluster_epsilon);
    json boxes = json::array();
    for (const auto& cl : clusters.clusters) {
      Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
      Vec3 hi = -lo;
      for (std::size_t idx : cl) {
        lo = lo.cwiseMin(surfaces.residual.points[idx]);
        hi = hi.cwiseMax(surfaces.residual.points[idx]);
      }
      boxes.push_back({{"min", {lo.x(), lo.y(), lo.z()}}, {"max", {hi.x(), hi.y(), hi.z()}}, {"points", cl.size()}});
    }
    write_json({{"clusters", to_json(clusters)}, {"boxes", boxes}}, "obstacles.json");

    const MissionConfig& m = c_.mission;
    const MissionPlan plan = plan_mission(surfaces.patches, merged.points, m.camera, m.gsd_mm_per_px, m.overlap,
                                          m.grid, m.weights);
    export_waypoints(plan.path, file("waypoints.json"));
    if (m.gps_sigma > 0) {
      const FlightPath noisy = perturb_waypoints(plan.path, m.gps_sigma, m.gps_clip, stage_seed(c_.seed, "mission"));
      export_waypoints(noisy, file("waypoints_perturbed.json"));
    }
  }

  void stitch() {
    const fs::path dir = c_.input.images;
    require(!dir.empty(), ErrorCode::InvalidParameter, "no image directory configured (input.images)");
    if (!fs::is_directory(dir)) fail(ErrorCode::IoError, "image directory not found: " + dir.string());
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
      std::string ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
      if (entry.is_regular_file() && (ext == ".png" || ext == ".pgm" || ext == ".ppm")) paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) fail(ErrorCode::IoError, "no images in " + dir.string());
    std::vector<RasterImage> images;
    for (const fs::path& p : paths) {
      RasterImage img = load_image(p);
      images.push_back(img.channels() == 1 ? gray_to_rgb(img) : std::move(img));
    }
    StitchParams params = c_.stitch;
    params.ransac.seed = stage_seed(c_.seed, "stitch");
    StitchResult result = stitch_images(images, params);
    save_image(result.mosaic.image, file("mosaic.png"));
    save_image(result.mosaic.mask, file("mosaic_mask.png"));
    json j = to_json(result);
    json names = json::array();
    for (const fs::path& p : paths) names.push_back(p.filename().string());
    j["images"] = names;
    write_json(j, "homographies.json");
    mosaic_ = std::move(result.mosaic);
  }

  void detect_from_file() {
    RasterImage image;
    std::string id;
    stage("load", [&] {
      require(!c_.input.mosaic.empty(), ErrorCode::InvalidParameter,
              "detect needs input.mosaic (or input.images for the full pipeline)");
      image = load_image(c_.input.mosaic);
      id = fs::path(c_.input.mosaic).filename().string();
    });
    analyse(image, id);
  }

  void analyse(const RasterImage& image, const std::string& id) {
    RasterImage gray;
    if (c_.histoseg.enabled) {
      stage("histoseg", [&] {
        require(image.channels() == 3, ErrorCode::InvalidChannelCount, "pattern removal needs an RGB mosaic");
        Segmentation seg =
            segment_patterns(image, nullptr, c_.histoseg.peaks, static_cast<std::uint8_t>(c_.histoseg.beta));
        save_image(seg.gray, file("segmented.png"));
        write_json(to_json(seg), "histoseg.json");
        gray = std::move(seg.gray);
      });
    } else {
      gray = image.channels() == 3 ? to_gray(image) : image;
    }
    stage("detect", [&] {
      CrackParams params = c_.crack.params;
      params.sauvola.ignore_value = c_.histoseg.enabled && c_.crack.exclude_removed ? c_.histoseg.beta : -1;
      const CrackReport report = detect_cracks(gray, params, id);
      write_json(to_json(report), "crack_report.json");
      save_image(component_mask(report.components, gray.width(), gray.height()).to_image(), file("crack_mask.png"));
      save_image(report.mask.to_image(), file("threshold_mask.png"));
    });
  }

  const PipelineConfig& c_;
  std::ostream* log_;
  fs::path out_;
  RunSummary summary_;
  std::optional<Mosaic> mosaic_;
};

}  // namespace

RunSummary run_command(Command command, const PipelineConfig& config, std::ostream* log) {
  return Runner(config, log).run(command);
}

}  // namespace uavinspect
