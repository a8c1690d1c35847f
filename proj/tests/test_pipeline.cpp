#include <doctest.h>

#include <fstream>
#include <sstream>

#include "support.hpp"
#include "uavinspect/pipeline.hpp"

using namespace uavinspect;
namespace fs = std::filesystem;

namespace {

PipelineConfig small_config(const fs::path& out) {
  PipelineConfig c;
  c.seed = 11;
  c.output = out.string();
  c.synth_wall.panel_rows = 1;
  c.synth_wall.panel_cols = 2;
  c.synth_wall.px_per_mm = 0.3;
  c.synth_wall.pattern_count = 4;
  c.synth_wall.crack_count = 1;
  c.synth_wall.crack_length_px = 120;
  c.synth_wall.tile_rows = 1;
  c.synth_wall.tile_cols = 2;
  c.synth_wall.overlap = 0.4;
  return c;
}

std::vector<std::string> stage_names(const RunSummary& s) {
  std::vector<std::string> out;
  for (const StageTiming& t : s.timings) out.push_back(t.stage);
  return out;
}

std::string failing_stage(Command cmd, const PipelineConfig& c) {
  try {
    run_command(cmd, c);
  } catch (const StageError& e) {
    CHECK(std::string(e.what()).rfind("stage " + e.stage() + ": ", 0) == 0);
    return e.stage();
  }
  FAIL("expected a StageError");
  return {};
}

}  // namespace

TEST_CASE("command names") {
  CHECK(to_string(Command::SynthWall) == "synth-wall");
  CHECK(to_string(Command::Pipeline) == "pipeline");
}

TEST_CASE("synthetic wall through the whole pipeline") {
  testing::TempDir dir;
  PipelineConfig gen = small_config(dir / "wall");
  std::ostringstream log;
  const RunSummary made = run_command(Command::SynthWall, gen, &log);
  CHECK(stage_names(made) == std::vector<std::string>{"synth-wall"});
  CHECK(log.str().rfind("stage synth-wall: ", 0) == 0);
  for (const char* f : {"wall.png", "cloud.xyz", "ground_truth.json", "tiles/tile_00.png", "tiles/tile_01.png"})
    CHECK(fs::exists(dir / "wall" / f));

  PipelineConfig run = small_config(dir / "out");
  run.input.images = (dir / "wall" / "tiles").string();
  run.input.clouds = {(dir / "wall" / "cloud.xyz").string()};
  const RunSummary s = run_command(Command::Pipeline, run);
  CHECK(stage_names(s) == std::vector<std::string>{"plan", "stitch", "histoseg", "detect"});
  for (const char* f : {"surfaces.json", "obstacles.json", "waypoints.json", "mosaic.png", "mosaic_mask.png",
                        "homographies.json", "segmented.png", "histoseg.json", "crack_report.json", "crack_mask.png",
                        "threshold_mask.png"})
    CHECK(fs::exists(dir / "out" / f));
  for (const fs::path& p : s.outputs) CHECK(fs::exists(p));

  const auto report = nlohmann::json::parse(std::ifstream(dir / "out" / "crack_report.json"));
  CHECK(report["image"] == "mosaic.png");
  CHECK(report["params"]["ignore_value"] == 255);
  CHECK(report["components"].size() >= 1);
  const auto surfaces = nlohmann::json::parse(std::ifstream(dir / "out" / "surfaces.json"));
  CHECK(surfaces["surfaces"].size() == 1);
  const auto waypoints = nlohmann::json::parse(std::ifstream(dir / "out" / "waypoints.json"));
  CHECK(!waypoints.empty());

  const nlohmann::json sj = s.to_json();
  CHECK(sj["stages"].size() == 4);
  CHECK(sj["outputs"].size() == s.outputs.size());

  // Same config, same bytes.
  PipelineConfig again = run;
  again.output = (dir / "out2").string();
  again.input.clouds.clear();
  run_command(Command::Pipeline, again);
  std::ifstream a(dir / "out" / "crack_report.json"), b(dir / "out2" / "crack_report.json");
  CHECK(std::string(std::istreambuf_iterator<char>(a), {}) == std::string(std::istreambuf_iterator<char>(b), {}));

  // Detection straight from an image file, without pattern removal.
  PipelineConfig detect = small_config(dir / "detect");
  detect.input.mosaic = (dir / "wall" / "wall.png").string();
  detect.histoseg.enabled = false;
  const RunSummary d = run_command(Command::Detect, detect);
  CHECK(stage_names(d) == std::vector<std::string>{"load", "detect"});
  const auto dr = nlohmann::json::parse(std::ifstream(dir / "detect" / "crack_report.json"));
  CHECK(dr["image"] == "wall.png");
  CHECK(!dr["params"].contains("ignore_value"));
}

TEST_CASE("failures are tagged with their stage") {
  testing::TempDir dir;
  PipelineConfig c = small_config(dir / "out");
  c.input.images = (dir / "missing").string();
  CHECK(failing_stage(Command::Pipeline, c) == "stitch");
  CHECK(failing_stage(Command::Stitch, c) == "stitch");

  PipelineConfig d = small_config(dir / "out");
  CHECK(failing_stage(Command::Detect, d) == "load");
  d.input.mosaic = (dir / "nothing.png").string();
  CHECK(failing_stage(Command::Pipeline, d) == "load");

  PipelineConfig p = small_config(dir / "out");
  CHECK(failing_stage(Command::Plan, p) == "plan");
  p.input.clouds = {(dir / "absent.xyz").string()};
  CHECK(failing_stage(Command::Pipeline, p) == "plan");

  {
    std::ofstream(dir / "blocker") << "x";
  }
  PipelineConfig o = small_config(dir / "blocker" / "out");
  CHECK(failing_stage(Command::SynthWall, o) == "output");
}
