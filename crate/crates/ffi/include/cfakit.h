#ifndef CFAKIT_H
#define CFAKIT_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CfakitStatus {
  CFAKIT_STATUS_OK = 0,
  CFAKIT_STATUS_NULL_POINTER = 1,
  CFAKIT_STATUS_DIMENSION_MISMATCH = 2,
  CFAKIT_STATUS_UNSUPPORTED_LAYOUT = 3,
  CFAKIT_STATUS_INVALID_ARGUMENT = 4,
  CFAKIT_STATUS_CALIBRATION = 5,
  CFAKIT_STATUS_NO_DONOR = 6,
  CFAKIT_STATUS_DIVERGED = 7,
  CFAKIT_STATUS_FORMAT = 8,
  CFAKIT_STATUS_IO = 9,
  CFAKIT_STATUS_PANIC = 10,
} CfakitStatus;

typedef enum CfakitCfa {
  CFAKIT_CFA_SINGLE = 0,
  CFAKIT_CFA_QUAD = 1,
  CFAKIT_CFA_NONA = 2,
} CfakitCfa;

typedef enum CfakitDemosaicMethod {
  CFAKIT_DEMOSAIC_METHOD_BILINEAR = 0,
  CFAKIT_DEMOSAIC_METHOD_EDGE_AWARE = 1,
  CFAKIT_DEMOSAIC_METHOD_TENT = 2,
} CfakitDemosaicMethod;

typedef struct CfakitImage CfakitImage;

typedef struct CfakitMask CfakitMask;

typedef struct CfakitModel CfakitModel;

typedef struct CfakitMosaic CfakitMosaic;

typedef struct CfakitNoiseModel CfakitNoiseModel;

typedef struct CfakitMetrics {
  double psnr_db;
  double ssim;
  double delta_e;
} CfakitMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread ("" after a success).
 * The pointer stays valid until the next call on the same thread.
 */
const char *cfakit_last_error(void);

/**
 * Library version, static NUL-terminated string.
 */
const char *cfakit_version(void);

/**
 * Copies `height * width * 3` samples into a new image.
 *
 * # Safety
 * `data` must point to `len` readable doubles; `out` must be writable.
 */
enum CfakitStatus cfakit_image_new(size_t height,
                                   size_t width,
                                   const double *data,
                                   size_t len,
                                   struct CfakitImage **out);

/**
 * # Safety
 * `image` must be null or a handle from this library, freed once.
 */
void cfakit_image_free(struct CfakitImage *image);

/**
 * # Safety
 * `image` must be a valid handle or null (returns 0).
 */
size_t cfakit_image_height(const struct CfakitImage *image);

/**
 * # Safety
 * `image` must be a valid handle or null (returns 0).
 */
size_t cfakit_image_width(const struct CfakitImage *image);

/**
 * Copies the samples into `out`, which must hold exactly `height * width * 3`.
 *
 * # Safety
 * `image` must be valid; `out` must point to `len` writable doubles.
 */
enum CfakitStatus cfakit_image_copy_data(const struct CfakitImage *image, double *out, size_t len);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum CfakitStatus cfakit_image_read_png(const char *path, struct CfakitImage **out);

/**
 * Writes a 16-bit RGB PNG.
 *
 * # Safety
 * `image` must be valid; `path` must be a NUL-terminated string.
 */
enum CfakitStatus cfakit_image_write_png(const struct CfakitImage *image, const char *path);

/**
 * # Safety
 * `data` must point to `len` readable doubles; `out` must be writable.
 */
enum CfakitStatus cfakit_mosaic_new(enum CfakitCfa cfa,
                                    size_t height,
                                    size_t width,
                                    const double *data,
                                    size_t len,
                                    struct CfakitMosaic **out);

/**
 * # Safety
 * `mosaic` must be null or a handle from this library, freed once.
 */
void cfakit_mosaic_free(struct CfakitMosaic *mosaic);

/**
 * # Safety
 * `mosaic` must be a valid handle or null (returns 0).
 */
size_t cfakit_mosaic_height(const struct CfakitMosaic *mosaic);

/**
 * # Safety
 * `mosaic` must be a valid handle or null (returns 0).
 */
size_t cfakit_mosaic_width(const struct CfakitMosaic *mosaic);

/**
 * # Safety
 * `mosaic` must be valid; `out` must be writable.
 */
enum CfakitStatus cfakit_mosaic_cfa(const struct CfakitMosaic *mosaic, enum CfakitCfa *out);

/**
 * # Safety
 * `mosaic` must be valid; `out` must point to `len` writable doubles.
 */
enum CfakitStatus cfakit_mosaic_copy_data(const struct CfakitMosaic *mosaic,
                                          double *out,
                                          size_t len);

/**
 * Samples `image` through the `cfa` layout.
 *
 * # Safety
 * `image` must be valid; `out` must be writable.
 */
enum CfakitStatus cfakit_mosaic_sample(const struct CfakitImage *image,
                                       enum CfakitCfa cfa,
                                       struct CfakitMosaic **out);

/**
 * Quad/Nona to Single-Bayer by pixel shuffling.
 *
 * # Safety
 * `mosaic` must be valid; `out` must be writable.
 */
enum CfakitStatus cfakit_mosaic_shuffle(const struct CfakitMosaic *mosaic,
                                        struct CfakitMosaic **out);

/**
 * Averages each same-color block into one Single-Bayer pixel.
 *
 * # Safety
 * `mosaic` must be valid; `out` must be writable.
 */
enum CfakitStatus cfakit_mosaic_bin(const struct CfakitMosaic *mosaic, struct CfakitMosaic **out);

/**
 * # Safety
 * `mosaic` and `model` must be valid; `out` must be writable.
 */
enum CfakitStatus cfakit_mosaic_add_noise(const struct CfakitMosaic *mosaic,
                                          const struct CfakitNoiseModel *model,
                                          uint64_t seed,
                                          struct CfakitMosaic **out);

/**
 * Replaces the pixels of `mask` by same-channel Gaussian interpolation.
 *
 * # Safety
 * `mosaic` and `mask` must be valid; `out` must be writable.
 */
enum CfakitStatus cfakit_mosaic_interpolate_dead(const struct CfakitMosaic *mosaic,
                                                 const struct CfakitMask *mask,
                                                 struct CfakitMosaic **out);

/**
 * # Safety
 * `mosaic` must be valid; `out` must be writable.
 */
enum CfakitStatus cfakit_demosaic(const struct CfakitMosaic *mosaic,
                                  enum CfakitDemosaicMethod method,
                                  struct CfakitImage **out);

/**
 * Preset Poisson-Gaussian model for a supported ISO (400 ... 12800).
 *
 * # Safety
 * `out` must be writable.
 */
enum CfakitStatus cfakit_noise_preset(uint32_t iso, struct CfakitNoiseModel **out);

/**
 * Parses a noise-model JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum CfakitStatus cfakit_noise_from_json(const char *json, struct CfakitNoiseModel **out);

/**
 * Noise variance the model predicts at intensity `x`; NaN for a null model.
 *
 * # Safety
 * `model` must be a valid handle or null.
 */
double cfakit_noise_variance(const struct CfakitNoiseModel *model, double x);

/**
 * # Safety
 * `model` must be null or a handle from this library, freed once.
 */
void cfakit_noise_free(struct CfakitNoiseModel *model);

/**
 * Exactly `round(rate * height * width)` dead pixels at seeded positions.
 *
 * # Safety
 * `out` must be writable.
 */
enum CfakitStatus cfakit_mask_random(size_t height,
                                     size_t width,
                                     double rate,
                                     uint64_t seed,
                                     struct CfakitMask **out);

/**
 * # Safety
 * `mask` must be a valid handle or null (returns 0).
 */
size_t cfakit_mask_count(const struct CfakitMask *mask);

/**
 * # Safety
 * `mask` must be null or a handle from this library, freed once.
 */
void cfakit_mask_free(struct CfakitMask *mask);

/**
 * PSNR, SSIM and CIE76 delta E of `a` against `b` after cropping `border`.
 *
 * # Safety
 * `a`, `b` must be valid; `out` must be writable.
 */
enum CfakitStatus cfakit_metrics(const struct CfakitImage *a,
                                 const struct CfakitImage *b,
                                 size_t border,
                                 struct CfakitMetrics *out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum CfakitStatus cfakit_model_read(const char *path, struct CfakitModel **out);

/**
 * Demosaics and denoises `mosaic` with a trained network.
 *
 * # Safety
 * `model` and `mosaic` must be valid; `out` must be writable.
 */
enum CfakitStatus cfakit_model_run(const struct CfakitModel *model,
                                   const struct CfakitMosaic *mosaic,
                                   struct CfakitImage **out);

/**
 * # Safety
 * `model` must be null or a handle from this library, freed once.
 */
void cfakit_model_free(struct CfakitModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CFAKIT_H */
