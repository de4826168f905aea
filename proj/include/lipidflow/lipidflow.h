#ifndef LIPIDFLOW_H
#define LIPIDFLOW_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(LIPIDFLOW_BUILDING)
#    define LF_API __declspec(dllexport)
#  else
#    define LF_API __declspec(dllimport)
#  endif
#else
#  define LF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lf_status {
    LF_OK = 0,
    LF_ERR_INVALID_ARGUMENT = 1,
    LF_ERR_IO = 2,
    LF_ERR_PARSE = 3,
    LF_ERR_TRUNCATED = 4,
    LF_ERR_EMPTY_INPUT = 5,
    LF_ERR_DIMENSION_MISMATCH = 6,
    LF_ERR_PUPIL_NOT_FOUND = 7,
    LF_ERR_ALIGNMENT = 8,
    LF_ERR_NUMERICAL = 9,
    LF_ERR_MASK_TOO_SMALL = 10,
    LF_ERR_NO_SEEDS = 11,
    LF_ERR_NO_TRAJECTORIES = 12,
    LF_ERR_NO_INTERBLINKS = 13,
    LF_ERR_INSUFFICIENT_DATA = 14,
    LF_ERR_OUT_OF_BOUNDS = 15,
    LF_ERR_INTERNAL = 99
} lf_status;

typedef struct lf_video lf_video;
typedef struct lf_flow_field lf_flow_field;

typedef struct lf_fit_result {
    double rho;
    double lambda_s;
    double c;
    double rmse;
    int n;
    int degenerate;
} lf_fit_result;

typedef struct lf_correlation {
    double r;
    double slope;
    double intercept;
    int n;
} lf_correlation;

/* Library version string, e.g. "1.0.0". */
LF_API const char* lf_version(void);
/* Short stable name of a status code, e.g. "pupil-not-found". */
LF_API const char* lf_status_name(lf_status status);
/* Message of the last failed call on this thread; empty if none. */
LF_API const char* lf_last_error_message(void);
/* Releases strings returned through char** out-parameters. */
LF_API void lf_free_string(char* s);

/* Videos: 8-bit grayscale frame sequences. */
LF_API lf_status lf_video_load_y4m(const char* path, lf_video** out);
LF_API lf_status lf_video_load_pgm_dir(const char* dir, double fps, lf_video** out);
/* Y4M file, PGM directory or a single PGM image; fps > 0 overrides the stored rate. */
LF_API lf_status lf_video_load(const char* path, double fps, lf_video** out);
/* `data` holds `frames` consecutive row-major width*height images. */
LF_API lf_status lf_video_create(int width, int height, int frames, const uint8_t* data, double fps,
                                 lf_video** out);
LF_API void lf_video_free(lf_video* video);
LF_API lf_status lf_video_info(const lf_video* video, int* width, int* height, int* frames, double* fps);
LF_API lf_status lf_video_frame(const lf_video* video, int index, uint8_t* buffer, size_t buffer_size);
/* Inclusive frame range. */
LF_API lf_status lf_video_slice(const lf_video* video, int first, int last, lf_video** out);
LF_API lf_status lf_video_save_pgm_dir(const lf_video* video, const char* dir);
LF_API lf_status lf_video_save_y4m(const lf_video* video, const char* path);
LF_API lf_status lf_video_save_pgm(const lf_video* video, int index, const char* path);

/* Synthetic eye video from a JSON configuration ("{}" for defaults). */
LF_API lf_status lf_synth_generate(const char* config_json, lf_video** video, char** manifest_json);

/* {"blinks":[[s,e],...],"interblinks":[[s,e],...]} */
LF_API lf_status lf_detect_blinks(const lf_video* video, double k, double min_interblink_s, char** json_out);

/* Pupil-aligned frames of one inter-blink plus "frame,dx,dy" offsets CSV. */
LF_API lf_status lf_align_interblink(const lf_video* video, int interblink, double k, double min_interblink_s,
                                     lf_video** aligned, char** offsets_csv);

/* kind: original, avgsub, unsharp, lappyr or clahe. params_json may be NULL. */
LF_API lf_status lf_enhance(const lf_video* video, const char* kind, const char* params_json, lf_video** out);

/* Iris mask of one frame as a 0/255 single-frame video plus the "x,y" contour CSV.
   pupil may be NULL (located automatically) or point to {cx, cy, r}. */
LF_API lf_status lf_build_mask(const lf_video* video, int frame, const double* pupil, const char* params_json,
                               lf_video** mask, char** contour_csv);

/* FAST corners of one frame as "x,y,score" CSV sorted by (y, x). */
LF_API lf_status lf_detect_features(const lf_video* video, int frame, int threshold, int arc, char** csv);

/* Dense Farneback flow from frame 0 of `from` to frame 0 of `to`. */
LF_API lf_status lf_flow_farneback(const lf_video* from, const lf_video* to, const char* params_json,
                                   lf_flow_field** out);
/* Pyramidal LK on a regular grid: "x,y,u,v,status" CSV. */
LF_API lf_status lf_flow_lk(const lf_video* from, const lf_video* to, int grid_step, const char* params_json,
                            char** csv);
LF_API void lf_flow_field_free(lf_flow_field* field);
LF_API lf_status lf_flow_field_info(const lf_flow_field* field, int* width, int* height);
LF_API lf_status lf_flow_field_sample(const lf_flow_field* field, double x, double y, double* u, double* v);
/* format: "csv" or "bin" (FLO1 header followed by the u and v planes as little-endian float32). */
LF_API lf_status lf_flow_field_save(const lf_flow_field* field, const char* path, const char* format);

/* Seeds on the last frame of an aligned inter-blink, tracked backwards with one variant ("farneback:lappyr").
   Outputs the trajectories CSV and the displacement CSV. */
LF_API lf_status lf_track(const lf_video* aligned, const char* variant, const char* config_json, char** trajectories_csv,
                          char** displacement_csv);

LF_API lf_status lf_fit_exponential(const double* t, const double* d, size_t n, lf_fit_result* out);
/* Fits a displacement CSV (t,dx,dy,... or t,d); axis "x" or "y". Returns {rho,lambda_s,c,rmse,degenerate}. */
LF_API lf_status lf_fit_series_csv(const char* csv_text, const char* axis, char** json_out);
LF_API lf_status lf_pearson(const double* x, const double* y, size_t n, lf_correlation* out);

/* Annotation-derived fits against the report entry of `variant` (NULL for the default). */
LF_API lf_status lf_compare(const char* annotations_json, const char* report_json, const char* variant, char** csv,
                            char** json_out);

/* Full pipeline; config_json may be NULL. trajectories_csv may be NULL when not needed. */
LF_API lf_status lf_analyze(const lf_video* video, const char* config_json, char** report_json,
                            char** trajectories_csv);

/* field: "osdi" or "thinning_time"; axis: "x" or "y"; variant may be NULL. svg may be NULL. */
LF_API lf_status lf_correlate(const char* const* report_jsons, size_t n_reports, const char* meta_csv,
                              const char* field, const char* axis, const char* variant, int per_interblink,
                              char** json_out, char** svg);

#ifdef __cplusplus
}
#endif

#endif
