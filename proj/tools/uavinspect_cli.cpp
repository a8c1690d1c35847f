// uavinspect command-line front end. Talks to the library only through the C API.
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uavinspect/uavinspect.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

std::string take(char* s) {
  std::string out = s ? s : "";
  uvi_string_free(s);
  return out;
}

std::vector<std::string> default_keys() {
  uvi_config* c = nullptr;
  std::vector<std::string> keys;
  char* text = nullptr;
  if (uvi_config_new(&c) == UVI_OK && uvi_config_keys(c, &text) == UVI_OK) {
    std::istringstream in(take(text));
    for (std::string line; std::getline(in, line);) {
      if (!line.empty()) keys.push_back(line);
    }
  }
  uvi_config_free(c);
  return keys;
}

int config_error(const std::string& what) {
  std::cerr << "uavinspect: config error: " << what << '\n';
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV inspection pipeline: surface extraction, flight planning, stitching and crack detection"};
  app.set_version_flag("--version", std::string("uavinspect ") + uvi_version());

  std::string config_path;
  bool dump_config = false;
  app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_flag("--dump-config", dump_config, "print the effective configuration and exit");

  std::map<std::string, std::string> overrides;
  for (const std::string& key : default_keys()) {
    app.add_option_function<std::string>(
           "--" + key, [&overrides, key](const std::string& v) { overrides[key] = v; }, "config key " + key)
        ->group("Config overrides");
  }

  struct Sub {
    const char* name;
    uvi_command command;
    const char* help;
  };
  const Sub subs[] = {
      {"synth-wall", UVI_CMD_SYNTH_WALL, "render the synthetic panel wall, its tiles and ground truth"},
      {"plan", UVI_CMD_PLAN, "point clouds to surfaces and a waypoint flight path"},
      {"stitch", UVI_CMD_STITCH, "stitch survey images into a mosaic"},
      {"detect", UVI_CMD_DETECT, "pattern removal and crack detection on a stitched mosaic"},
      {"pipeline", UVI_CMD_PIPELINE, "every stage the configured inputs allow"},
  };
  std::vector<CLI::App*> sub_apps;
  for (const Sub& s : subs) sub_apps.push_back(app.add_subcommand(s.name, s.help)->fallthrough());
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  uvi_config* config = nullptr;
  const uvi_status loaded = config_path.empty() ? uvi_config_new(&config) : uvi_config_load(config_path.c_str(), &config);
  if (loaded != UVI_OK) return config_error(uvi_last_error());
  for (const auto& [key, value] : overrides) {
    if (uvi_config_set(config, key.c_str(), value.c_str()) != UVI_OK) {
      const std::string msg = uvi_last_error();
      uvi_config_free(config);
      return config_error(msg);
    }
  }

  if (dump_config) {
    char* text = nullptr;
    uvi_config_dump(config, &text);
    std::cout << take(text) << '\n';
    uvi_config_free(config);
    return 0;
  }

  const Sub* chosen = nullptr;
  for (std::size_t i = 0; i < sub_apps.size(); ++i) {
    if (sub_apps[i]->parsed()) chosen = &subs[i];
  }
  if (!chosen) {
    uvi_config_free(config);
    std::cerr << app.help();
    return config_error("no subcommand given");
  }

  const uvi_status st = uvi_run(config, chosen->command, 1, nullptr);
  uvi_config_free(config);
  if (st != UVI_OK) {
    std::cerr << "uavinspect: " << chosen->name << " failed";
    if (*uvi_last_stage()) std::cerr << " in stage " << uvi_last_stage();
    std::cerr << ": " << uvi_last_error() << '\n';
    return kExitStage;
  }
  return 0;
}
