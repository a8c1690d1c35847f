#include <doctest.h>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavinspect/uavinspect.h"

namespace fs = std::filesystem;

namespace {

std::string take(char* s) {
  REQUIRE(s != nullptr);
  std::string out = s;
  uvi_string_free(s);
  return out;
}

struct ScratchDir {
  ScratchDir() : path(fs::temp_directory_path() / ("uvi_capi_" + std::to_string(std::random_device{}()))) {
    fs::create_directories(path);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  fs::path path;
};

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(uvi_version()) == "0.3.0");
  CHECK(std::string(uvi_status_name(UVI_OK)) == "OK");
  CHECK(std::string(uvi_status_name(UVI_PEAKS_NOT_FOUND)) == "PeaksNotFound");
  CHECK(std::string(uvi_status_name(UVI_CONFIG_ERROR)) == "ConfigError");
}

TEST_CASE("config handles") {
  uvi_config* c = nullptr;
  REQUIRE(uvi_config_new(&c) == UVI_OK);
  const auto before = nlohmann::json::parse([&] {
    char* t = nullptr;
    REQUIRE(uvi_config_dump(c, &t) == UVI_OK);
    return take(t);
  }());
  CHECK(before["crack"]["window"] == 31);

  CHECK(uvi_config_set(c, "crack.window", "15") == UVI_OK);
  CHECK(uvi_config_set(c, "crack.window", "16") == UVI_CONFIG_ERROR);
  CHECK(std::string(uvi_last_error()).find("window") != std::string::npos);
  CHECK(uvi_config_set(c, "crack.nope", "1") == UVI_CONFIG_ERROR);
  CHECK(uvi_config_set(c, "crack.window", "abc") != UVI_OK);
  char* t = nullptr;
  REQUIRE(uvi_config_dump(c, &t) == UVI_OK);
  CHECK(nlohmann::json::parse(take(t))["crack"]["window"] == 15);

  char* keys = nullptr;
  REQUIRE(uvi_config_keys(c, &keys) == UVI_OK);
  const std::string k = take(keys);
  CHECK(k.find("crack.window\n") != std::string::npos);
  CHECK(k.find("stitch.ratio\n") != std::string::npos);

  uvi_config* parsed = nullptr;
  CHECK(uvi_config_parse("{\"crack\": {\"k\": 0.3}}", &parsed) == UVI_OK);
  REQUIRE(uvi_config_dump(parsed, &t) == UVI_OK);
  CHECK(nlohmann::json::parse(take(t))["crack"]["k"] == 0.3);
  uvi_config_free(parsed);
  parsed = nullptr;
  CHECK(uvi_config_parse("{\"crack\": {\"bogus\": 1}}", &parsed) != UVI_OK);
  CHECK(parsed == nullptr);
  CHECK(uvi_config_parse("{", &parsed) != UVI_OK);
  CHECK(uvi_config_load("/nonexistent/config.json", &parsed) != UVI_OK);

  CHECK(uvi_config_new(nullptr) == UVI_INVALID_PARAMETER);
  uvi_config_free(c);
  uvi_config_free(nullptr);
}

TEST_CASE("images") {
  ScratchDir dir;
  std::vector<std::uint8_t> px(6 * 4 * 3);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<std::uint8_t>(i * 7);
  uvi_image* img = nullptr;
  REQUIRE(uvi_image_create(6, 4, 3, px.data(), &img) == UVI_OK);
  CHECK(uvi_image_width(img) == 6);
  CHECK(uvi_image_height(img) == 4);
  CHECK(uvi_image_channels(img) == 3);
  const std::string file = (dir.path / "a.png").string();
  REQUIRE(uvi_image_save(img, file.c_str()) == UVI_OK);
  uvi_image* back = nullptr;
  REQUIRE(uvi_image_load(file.c_str(), &back) == UVI_OK);
  CHECK(std::vector<std::uint8_t>(uvi_image_data(back), uvi_image_data(back) + px.size()) == px);
  uvi_image_free(back);
  uvi_image_free(img);

  CHECK(uvi_image_create(0, 4, 1, nullptr, &img) == UVI_INVALID_PARAMETER);
  CHECK(uvi_image_create(4, 4, 2, nullptr, &img) == UVI_INVALID_CHANNEL_COUNT);
  CHECK(uvi_image_load((dir.path / "missing.png").string().c_str(), &img) == UVI_IO_ERROR);
  CHECK(!std::string(uvi_last_error()).empty());
}

TEST_CASE("crack detection through the C interface") {
  const int w = 120, h = 80;
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h, 200);
  for (int x = 10; x < 110; ++x) px[static_cast<std::size_t>(40) * w + x] = 40;
  uvi_image* img = nullptr;
  REQUIRE(uvi_image_create(w, h, 1, px.data(), &img) == UVI_OK);
  uvi_config* c = nullptr;
  REQUIRE(uvi_config_new(&c) == UVI_OK);
  char* report = nullptr;
  uvi_image* mask = nullptr;
  REQUIRE(uvi_detect_cracks(img, c, &report, &mask) == UVI_OK);
  const auto j = nlohmann::json::parse(take(report));
  REQUIRE(j["components"].size() == 1);
  CHECK(j["components"][0]["area_px"] == 100);
  CHECK(uvi_image_data(mask)[40 * w + 50] == 255);
  CHECK(uvi_image_data(mask)[20 * w + 50] == 0);
  uvi_image_free(mask);

  REQUIRE(uvi_detect_cracks(img, c, &report, nullptr) == UVI_OK);
  uvi_string_free(report);
  CHECK(uvi_detect_cracks(nullptr, c, &report, nullptr) == UVI_INVALID_PARAMETER);
  uvi_config_free(c);
  uvi_image_free(img);
}

TEST_CASE("run failures report their stage") {
  ScratchDir dir;
  uvi_config* c = nullptr;
  REQUIRE(uvi_config_new(&c) == UVI_OK);
  REQUIRE(uvi_config_set(c, "output", (dir.path / "out").string().c_str()) == UVI_OK);
  REQUIRE(uvi_config_set(c, "input.images", (dir.path / "none").string().c_str()) == UVI_OK);
  char* summary = nullptr;
  CHECK(uvi_run(c, UVI_CMD_STITCH, 0, &summary) == UVI_IO_ERROR);
  CHECK(std::string(uvi_last_stage()) == "stitch");
  CHECK(std::string(uvi_last_error()).find("stage stitch") != std::string::npos);

  CHECK(uvi_run(c, UVI_CMD_DETECT, 0, nullptr) == UVI_INVALID_PARAMETER);
  CHECK(std::string(uvi_last_stage()) == "load");

  REQUIRE(uvi_config_set(c, "synth_wall.panel_cols", "1") == UVI_OK);
  REQUIRE(uvi_config_set(c, "synth_wall.panel_rows", "1") == UVI_OK);
  REQUIRE(uvi_config_set(c, "synth_wall.tile_cols", "1") == UVI_OK);
  REQUIRE(uvi_config_set(c, "synth_wall.tile_rows", "1") == UVI_OK);
  REQUIRE(uvi_config_set(c, "synth_wall.px_per_mm", "0.2") == UVI_OK);
  REQUIRE(uvi_config_set(c, "synth_wall.crack_length_px", "60") == UVI_OK);
  REQUIRE(uvi_config_set(c, "synth_wall.pattern_count", "2") == UVI_OK);
  REQUIRE(uvi_run(c, UVI_CMD_SYNTH_WALL, 0, &summary) == UVI_OK);
  CHECK(std::string(uvi_last_stage()).empty());
  const auto s = nlohmann::json::parse(take(summary));
  CHECK(s["stages"][0]["stage"] == "synth-wall");
  CHECK(fs::exists(dir.path / "out" / "ground_truth.json"));
  uvi_config_free(c);
}
