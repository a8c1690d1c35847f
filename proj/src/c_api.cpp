#include "uavinspect/uavinspect.h"

#include <cstring>
#include <iostream>
#include <new>
#include <string>

#include "uavinspect/config.hpp"
#include "uavinspect/crack.hpp"
#include "uavinspect/imaging.hpp"
#include "uavinspect/pipeline.hpp"

struct uvi_config {
  uavinspect::PipelineConfig value;
};

struct uvi_image {
  uavinspect::RasterImage value;
};

namespace {

using namespace uavinspect;

thread_local std::string g_last_error;
thread_local std::string g_last_stage;

uvi_status to_status(ErrorCode code) {
  // ErrorCode and uvi_status list the codes in the same order.
  return static_cast<uvi_status>(static_cast<int>(code) + 1);
}

template <typename F>
uvi_status guarded(F&& f) {
  g_last_error.clear();
  g_last_stage.clear();
  try {
    f();
    return UVI_OK;
  } catch (const StageError& e) {
    g_last_error = e.what();
    g_last_stage = e.stage();
    return to_status(e.code());
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return UVI_INTERNAL_ERROR;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return UVI_INTERNAL_ERROR;
  } catch (...) {
    g_last_error = "unknown error";
    return UVI_INTERNAL_ERROR;
  }
}

void need(const void* p, const char* what) {
  if (!p) fail(ErrorCode::InvalidParameter, std::string(what) + " must not be NULL");
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* uvi_version(void) { return UAVINSPECT_VERSION; }

const char* uvi_status_name(uvi_status status) {
  if (status == UVI_OK) return "OK";
  if (status == UVI_INTERNAL_ERROR) return "InternalError";
  if (status > UVI_OK && status < UVI_INTERNAL_ERROR) {
    return to_string(static_cast<ErrorCode>(static_cast<int>(status) - 1)).data();
  }
  return "Unknown";
}

const char* uvi_last_error(void) { return g_last_error.c_str(); }
const char* uvi_last_stage(void) { return g_last_stage.c_str(); }
void uvi_string_free(char* s) { delete[] s; }

uvi_status uvi_config_new(uvi_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new uvi_config{};
  });
}

uvi_status uvi_config_parse(const char* json, uvi_config** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    *out = new uvi_config{parse_config(json)};
  });
}

uvi_status uvi_config_load(const char* path, uvi_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new uvi_config{load_config(path)};
  });
}

uvi_status uvi_config_set(uvi_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    PipelineConfig copy = config->value;
    set_config_value(copy, key, value);
    config->value = std::move(copy);
  });
}

uvi_status uvi_config_dump(const uvi_config* config, char** json_out) {
  return guarded([&] {
    need(config, "config");
    need(json_out, "json_out");
    *json_out = copy_string(to_json(config->value).dump(2));
  });
}

uvi_status uvi_config_keys(const uvi_config* config, char** keys_out) {
  return guarded([&] {
    need(config, "config");
    need(keys_out, "keys_out");
    std::string text;
    for (const std::string& k : config_keys(config->value)) text += k + '\n';
    *keys_out = copy_string(text);
  });
}

void uvi_config_free(uvi_config* config) { delete config; }

uvi_status uvi_run(const uvi_config* config, uvi_command command, int log_timings, char** summary_out) {
  return guarded([&] {
    need(config, "config");
    if (command < UVI_CMD_SYNTH_WALL || command > UVI_CMD_PIPELINE) fail(ErrorCode::InvalidParameter, "unknown command");
    const RunSummary s = run_command(static_cast<Command>(command), config->value, log_timings ? &std::cerr : nullptr);
    if (summary_out) *summary_out = copy_string(s.to_json().dump(2));
  });
}

uvi_status uvi_image_load(const char* path, uvi_image** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new uvi_image{load_image(path)};
  });
}

uvi_status uvi_image_create(int width, int height, int channels, const uint8_t* data, uvi_image** out) {
  return guarded([&] {
    need(out, "out");
    RasterImage img(width, height, channels);
    if (data) std::memcpy(img.data().data(), data, img.data().size());
    *out = new uvi_image{std::move(img)};
  });
}

uvi_status uvi_image_save(const uvi_image* image, const char* path) {
  return guarded([&] {
    need(image, "image");
    need(path, "path");
    save_image(image->value, path);
  });
}

int uvi_image_width(const uvi_image* image) { return image ? image->value.width() : 0; }
int uvi_image_height(const uvi_image* image) { return image ? image->value.height() : 0; }
int uvi_image_channels(const uvi_image* image) { return image ? image->value.channels() : 0; }
const uint8_t* uvi_image_data(const uvi_image* image) { return image ? image->value.data().data() : nullptr; }
void uvi_image_free(uvi_image* image) { delete image; }

uvi_status uvi_detect_cracks(const uvi_image* image, const uvi_config* config, char** report_json_out,
                             uvi_image** mask_out) {
  return guarded([&] {
    need(image, "image");
    need(config, "config");
    need(report_json_out, "report_json_out");
    const PipelineConfig& c = config->value;
    const RasterImage& src = image->value;
    const RasterImage gray = src.channels() == 3 ? to_gray(src) : src;
    CrackParams params = c.crack.params;
    params.sauvola.ignore_value = c.histoseg.enabled && c.crack.exclude_removed ? c.histoseg.beta : -1;
    const CrackReport report = detect_cracks(gray, params, "image");
    std::string text = to_json(report).dump(2);
    uvi_image* mask = nullptr;
    if (mask_out) mask = new uvi_image{component_mask(report.components, gray.width(), gray.height()).to_image()};
    *report_json_out = copy_string(text);
    if (mask_out) *mask_out = mask;
  });
}

}  // extern "C"
