/*
 * omnibox C API.
 *
 * Opaque handles own their data and are released with the matching *_free
 * call. Every fallible call returns an obx_status; on failure a message for
 * the calling thread is available from obx_last_error() until the next call
 * on that thread. Strings returned through char** out-parameters are
 * heap-allocated and must be released with obx_string_free().
 */
#ifndef OMNIBOX_OMNIBOX_H_
#define OMNIBOX_OMNIBOX_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define OBX_API __declspec(dllexport)
#else
#define OBX_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum obx_status {
  OBX_OK = 0,
  OBX_ERR_INVALID_ARGUMENT = 1,
  OBX_ERR_FORMAT = 2,
  OBX_ERR_IO = 3,
  OBX_ERR_PARTIAL = 4, /* some records failed; output was written for the rest */
  OBX_ERR_INTERNAL = 5
} obx_status;

OBX_API const char* obx_version(void);
OBX_API const char* obx_last_error(void);
OBX_API void obx_string_free(char* s);

/* ---- datasets ------------------------------------------------------- */

/* COCO-style segmentation annotations filtered to one category. */
typedef struct obx_coco obx_coco;
/* Rotated-box dataset (ground truth or predictions). */
typedef struct obx_dataset obx_dataset;

/* category: a name such as "person" or a numeric id. */
OBX_API obx_status obx_coco_load(const char* path, const char* category,
                                 obx_coco** out);
OBX_API obx_status obx_coco_parse(const char* json_text, size_t length,
                                  const char* category, obx_coco** out);
OBX_API void obx_coco_free(obx_coco* coco);
/* Ingestion counts, clamp count, record errors and warnings as JSON. */
OBX_API obx_status obx_coco_report_json(const obx_coco* coco, char** json_out);
/* Segmentation -> hull -> minimum-area rectangle for every usable instance.
 * workers <= 0 uses all cores; output does not depend on it. */
OBX_API obx_status obx_coco_generate(const obx_coco* coco, int workers,
                                     obx_dataset** out, char** report_json);

/* format: "internal-json" or "cepdof-json". */
OBX_API obx_status obx_dataset_load(const char* path, const char* format,
                                    obx_dataset** out);
OBX_API obx_status obx_dataset_parse(const char* json_text, size_t length,
                                     const char* format, obx_dataset** out);
OBX_API obx_status obx_dataset_save(const obx_dataset* dataset, const char* path);
OBX_API obx_status obx_dataset_to_json(const obx_dataset* dataset, char** json_out);
OBX_API size_t obx_dataset_image_count(const obx_dataset* dataset);
OBX_API size_t obx_dataset_box_count(const obx_dataset* dataset);
OBX_API obx_status obx_dataset_stats_json(const obx_dataset* dataset, char** json_out);
OBX_API void obx_dataset_free(obx_dataset* dataset);

/* ---- augmentation --------------------------------------------------- */

typedef struct obx_augment_config {
  int rotate;                 /* nonzero: random rotation first */
  double rotation_min;        /* radians */
  double rotation_max;
  double fisheye_probability; /* [0, 1] */
  double f_min;               /* focal range, multiples of half-diagonal */
  double f_max;
  double qc_jitter;           /* optical-axis jitter, fraction of image size */
  int out_w;                  /* 0: square of side min(W, H) */
  int out_h;
  uint64_t seed;
  int copies;                 /* augmented copies per input image */
  double min_visibility;      /* boxes less visible than this are dropped */
} obx_augment_config;

OBX_API void obx_augment_config_init(obx_augment_config* config);

/* Writes out_dir/images/<stem>_<copy>.png and out_dir/annotations.json.
 * Returns OBX_ERR_PARTIAL when some images could not be processed; the
 * report lists them. */
OBX_API obx_status obx_augment_coco(const obx_coco* coco, const char* images_dir,
                                    const char* out_dir,
                                    const obx_augment_config* config, int workers,
                                    char** report_json);
/* Same, with each rotated box used as a 4-vertex segment. */
OBX_API obx_status obx_augment_dataset(const obx_dataset* dataset,
                                       const char* images_dir, const char* out_dir,
                                       const obx_augment_config* config,
                                       int workers, char** report_json);

/* ---- matching loss -------------------------------------------------- */

typedef struct obx_loss_weights {
  double lambda_c;
  double lambda_b;
  double lambda_u;
  double lambda_a;
  double focal_alpha;
  double focal_gamma;
} obx_loss_weights;

/* (2, 5, 2, 0.1), alpha 0.25, gamma 2. */
OBX_API void obx_loss_weights_init(obx_loss_weights* weights);

/* Per image: ground truth padded with "no object" entries up to the number of
 * predictions, Hungarian matching, matched loss. The aggregate is normalized
 * by the total number of real ground truths. Image id sets must agree. */
OBX_API obx_status obx_match_loss(const obx_dataset* gt, const obx_dataset* pred,
                                  const obx_loss_weights* weights, char** json_out);

/* ---- evaluation ----------------------------------------------------- */

enum { OBX_STRATA_DISTANCE = 1, OBX_STRATA_ANGLE = 2 };

typedef struct obx_eval_options {
  int interpolation_points;   /* 101, or 0 for all-point integration */
  int strata;                 /* OBX_STRATA_* bitmask, 0 for none */
  int distance_bins;
  double angle_bin_deg;
  double rotate_interval_deg; /* 0: no rotated copies */
  int default_width;          /* used when the ground truth lacks sizes */
  int default_height;
} obx_eval_options;

OBX_API void obx_eval_options_init(obx_eval_options* options);
OBX_API obx_status obx_evaluate(const obx_dataset* gt, const obx_dataset* pred,
                                const obx_eval_options* options, char** json_out);

/* ---- array-level entry points --------------------------------------- */

typedef struct obx_rotated_box {
  double cx;
  double cy;
  double w;
  double h;
  double theta; /* radians, canonical: h >= w, theta in [-pi/2, pi/2) */
} obx_rotated_box;

/* xy holds n_vertices interleaved (x, y) pairs in pixels. */
OBX_API obx_status obx_generate_box(const double* xy, size_t n_vertices,
                                    int image_w, int image_h, obx_rotated_box* box,
                                    obx_rotated_box* normalized, int* degenerate);

typedef struct obx_fisheye_params {
  double f;
  double qc_x;
  double qc_y;
  int out_w;
  int out_h;
} obx_fisheye_params;

/* Draws parameters from config for stream `stream` of config->seed. */
OBX_API obx_status obx_fisheye_sample(const obx_augment_config* config, int src_w,
                                      int src_h, uint64_t stream,
                                      obx_fisheye_params* out);
/* src: src_h x src_w x 3 bytes. dst: out_h x out_w x 3 bytes. mask: out_h x
 * out_w bytes or NULL. */
OBX_API obx_status obx_fisheye_warp(const uint8_t* src, int src_w, int src_h,
                                    const obx_fisheye_params* params, uint8_t* dst,
                                    uint8_t* mask);
/* out_xy must hold 2 * n_vertices doubles; *n_out receives the kept count. */
OBX_API obx_status obx_fisheye_map_vertices(const double* xy, size_t n_vertices,
                                            const obx_fisheye_params* params,
                                            double* out_xy, size_t* n_out);

/* Single-class (pedestrian) loss inputs, boxes normalized to [0, 1]. */
typedef struct obx_prediction {
  double prob;
  double cx;
  double cy;
  double w;
  double h;
  double a_hat;
} obx_prediction;

typedef struct obx_ground_truth {
  double cx;
  double cy;
  double w;
  double h;
  double theta;
  int is_phi;
} obx_ground_truth;

typedef struct obx_loss_breakdown {
  double total;
  double class_loss;
  double box_l1;
  double giou_loss;
  double angle_loss;
} obx_loss_breakdown;

/* assignment: n entries (ground truth i -> prediction) or NULL. */
OBX_API obx_status obx_compute_loss(const obx_ground_truth* gts,
                                    const obx_prediction* preds, size_t n,
                                    const obx_loss_weights* weights,
                                    obx_loss_breakdown* out, size_t* assignment);

typedef struct obx_detection {
  int64_t image_id;
  obx_rotated_box box;
  double score;
} obx_detection;

typedef struct obx_gt_box {
  int64_t image_id;
  obx_rotated_box box;
} obx_gt_box;

/* Absent values (no ground truth in the stratum) are NaN. */
typedef struct obx_ap_summary {
  double ap;
  double ap50;
  double ap75;
  double ap_small;
  double ap_medium;
  double ap_large;
} obx_ap_summary;

OBX_API obx_status obx_coco_ap(const obx_detection* dets, size_t n_dets,
                               const obx_gt_box* gts, size_t n_gts,
                               int interpolation_points, obx_ap_summary* out);

#ifdef __cplusplus
}
#endif

#endif /* OMNIBOX_OMNIBOX_H_ */
