#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavinspect/config.hpp"
#include "uavinspect/error.hpp"

namespace uavinspect {

// A library error tagged with the pipeline stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause);

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

enum class Command { SynthWall, Plan, Stitch, Detect, Pipeline };

std::string to_string(Command c);

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct RunSummary {
  std::vector<StageTiming> timings;
  std::vector<std::filesystem::path> outputs;  // files written, in order

  nlohmann::json to_json() const;
};

// Runs one subcommand against config.output. Stage names are "synth-wall",
// "plan", "stitch", "histoseg" and "detect"; `pipeline` runs plan (when clouds
// are given), stitch (when an image directory is given, otherwise
// input.mosaic is used), histoseg and detect, in that order.
// Timings go to `log` when it is non-null.
RunSummary run_command(Command command, const PipelineConfig& config, std::ostream* log = nullptr);

}  // namespace uavinspect
