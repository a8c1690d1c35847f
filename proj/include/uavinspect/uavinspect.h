/* C interface to the uavinspect library. Every call returns a uvi_status;
 * on failure uvi_last_error() describes the problem (per thread). Strings
 * returned through char** must be released with uvi_string_free. */
#ifndef UAVINSPECT_H
#define UAVINSPECT_H

#include <stddef.h>
#include <stdint.h>

#if defined(UVI_BUILDING_LIBRARY)
#define UVI_API __attribute__((visibility("default")))
#else
#define UVI_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum uvi_status {
  UVI_OK = 0,
  UVI_INVALID_PARAMETER,
  UVI_INVALID_CHANNEL_COUNT,
  UVI_DIMENSION_MISMATCH,
  UVI_PARSE_ERROR,
  UVI_IO_ERROR,
  UVI_MISSING_ORIGIN,
  UVI_TOO_FEW_POINTS,
  UVI_DEGENERATE_GEOMETRY,
  UVI_OUT_OF_BOUNDS,
  UVI_INVALID_MOVE,
  UVI_INVALID_ENDPOINT,
  UVI_UNREACHABLE,
  UVI_IMAGE_TOO_SMALL,
  UVI_TOO_FEW_MATCHES,
  UVI_STITCH_GRAPH_DISCONNECTED,
  UVI_PEAKS_NOT_FOUND,
  UVI_CONFIG_ERROR,
  UVI_INTERNAL_ERROR
} uvi_status;

typedef enum uvi_command {
  UVI_CMD_SYNTH_WALL = 0,
  UVI_CMD_PLAN,
  UVI_CMD_STITCH,
  UVI_CMD_DETECT,
  UVI_CMD_PIPELINE
} uvi_command;

typedef struct uvi_config uvi_config;
typedef struct uvi_image uvi_image;

UVI_API const char* uvi_version(void);
UVI_API const char* uvi_status_name(uvi_status status);
/* Message of the last failed call on this thread, "" if none. */
UVI_API const char* uvi_last_error(void);
/* Pipeline stage of the last failed uvi_run on this thread, "" otherwise. */
UVI_API const char* uvi_last_stage(void);
UVI_API void uvi_string_free(char* s);

/* ---- configuration ---- */
UVI_API uvi_status uvi_config_new(uvi_config** out);
UVI_API uvi_status uvi_config_parse(const char* json, uvi_config** out);
UVI_API uvi_status uvi_config_load(const char* path, uvi_config** out);
/* Dotted key such as "crack.window"; the config is unchanged on failure. */
UVI_API uvi_status uvi_config_set(uvi_config* config, const char* key, const char* value);
UVI_API uvi_status uvi_config_dump(const uvi_config* config, char** json_out);
/* Settable keys, one per line. */
UVI_API uvi_status uvi_config_keys(const uvi_config* config, char** keys_out);
UVI_API void uvi_config_free(uvi_config* config);

/* ---- runs ---- */
/* summary_out (optional) receives JSON with stage timings and written files.
 * Timings are also printed to stderr when log_timings is non-zero. */
UVI_API uvi_status uvi_run(const uvi_config* config, uvi_command command, int log_timings, char** summary_out);

/* ---- images ---- */
UVI_API uvi_status uvi_image_load(const char* path, uvi_image** out);
/* data may be NULL for a zero-filled image; otherwise width*height*channels bytes. */
UVI_API uvi_status uvi_image_create(int width, int height, int channels, const uint8_t* data, uvi_image** out);
UVI_API uvi_status uvi_image_save(const uvi_image* image, const char* path);
UVI_API int uvi_image_width(const uvi_image* image);
UVI_API int uvi_image_height(const uvi_image* image);
UVI_API int uvi_image_channels(const uvi_image* image);
UVI_API const uint8_t* uvi_image_data(const uvi_image* image);
UVI_API void uvi_image_free(uvi_image* image);

/* Crack detection with the config's crack block. RGB input is converted to
 * luma first. report_json_out receives the crack report; mask_out (optional)
 * the accepted components as a 0/255 image. */
UVI_API uvi_status uvi_detect_cracks(const uvi_image* image, const uvi_config* config, char** report_json_out,
                                     uvi_image** mask_out);

#ifdef __cplusplus
}
#endif

#endif
