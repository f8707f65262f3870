#ifndef SPADSIM_H
#define SPADSIM_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum SpadSampler {
  SPAD_SAMPLER_EXACT = 0,
  SPAD_SAMPLER_GAUSSIAN = 1,
} SpadSampler;

typedef enum SpadStatus {
  SPAD_STATUS_OK = 0,
  SPAD_STATUS_NULL_POINTER = 1,
  SPAD_STATUS_INVALID_ARGUMENT = 2,
  SPAD_STATUS_IO = 3,
  SPAD_STATUS_FORMAT = 4,
  SPAD_STATUS_PANIC = 5,
} SpadStatus;

// Per-pixel detection counts.
typedef struct SpadCountFrame SpadCountFrame;

// Per-pixel photon flux, photons per second.
typedef struct SpadFluxField SpadFluxField;

// Linear RGB radiance image.
typedef struct SpadHdrImage SpadHdrImage;

// Detector settings. Times are in seconds.
typedef struct SpadDetectorConfig {
  double quantum_efficiency;
  double dead_time;
  double exposure_time;
  enum SpadSampler sampler;
  uint64_t seed;
} SpadDetectorConfig;

typedef struct SpadExposureTargets {
  double target_x;
  double target_count;
} SpadExposureTargets;

typedef struct SpadExposurePlan {
  double exposure_time;
  double flux_scale;
  double median_flux;
} SpadExposurePlan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *spadsim_version(void);

// Message of the last failure on this thread, or null. Valid until the next
// call into the library from the same thread.
const char *spadsim_last_error(void);

struct SpadDetectorConfig spadsim_config_default(void);

struct SpadExposureTargets spadsim_exposure_targets_default(void);

enum SpadStatus spadsim_hdr_read(const char *path, struct SpadHdrImage **out);

// Decodes an in-memory Radiance `.hdr` file.
enum SpadStatus spadsim_hdr_decode(const uint8_t *data, size_t len, struct SpadHdrImage **out);

// Builds an image from `width * height * 3` interleaved RGB floats.
enum SpadStatus spadsim_hdr_new(size_t width,
                                size_t height,
                                const float *rgb,
                                struct SpadHdrImage **out);

enum SpadStatus spadsim_hdr_write(const struct SpadHdrImage *image, const char *path);

// Encodes to Radiance bytes; release the buffer with [`spadsim_bytes_free`].
enum SpadStatus spadsim_hdr_encode(const struct SpadHdrImage *image,
                                   uint8_t **out_data,
                                   size_t *out_len);

void spadsim_bytes_free(uint8_t *data, size_t len);

enum SpadStatus spadsim_hdr_dimensions(const struct SpadHdrImage *image,
                                       size_t *width,
                                       size_t *height);

// Interleaved RGB floats, `width * height * 3` long, owned by the image.
const float *spadsim_hdr_pixels(const struct SpadHdrImage *image);

void spadsim_hdr_free(struct SpadHdrImage *image);

// Mean detections, `q phi T / (1 + q phi tau)`.
double spadsim_expected_count(double phi, double q, double exposure, double dead_time);

// Count variance, `q phi T / (1 + q phi tau)^3`.
double spadsim_count_variance(double phi, double q, double exposure, double dead_time);

double spadsim_snr(double phi, double q, double exposure, double dead_time);

// Flux from a count; `saturated` is set when the count was clamped below the ceiling.
enum SpadStatus spadsim_invert_count(double count,
                                     double q,
                                     double exposure,
                                     double dead_time,
                                     double *flux,
                                     bool *saturated);

// Plans exposure time and flux scale from the image's luminance.
enum SpadStatus spadsim_plan_exposure(const struct SpadHdrImage *image,
                                      const struct SpadDetectorConfig *config,
                                      const struct SpadExposureTargets *targets,
                                      struct SpadExposurePlan *out);

// Flux field `scale * luminance(image)`.
enum SpadStatus spadsim_flux_from_image(const struct SpadHdrImage *image,
                                        double scale,
                                        struct SpadFluxField **out);

enum SpadStatus spadsim_flux_dimensions(const struct SpadFluxField *flux,
                                        size_t *width,
                                        size_t *height);

// Row-major flux values, owned by the field.
const double *spadsim_flux_values(const struct SpadFluxField *flux);

void spadsim_flux_free(struct SpadFluxField *flux);

// One exposure of `flux`. The result depends only on the config seed,
// `frame_index` and the flux, never on threading.
enum SpadStatus spadsim_simulate_frame(const struct SpadFluxField *flux,
                                       const struct SpadDetectorConfig *config,
                                       uint64_t frame_index,
                                       struct SpadCountFrame **out);

// Per-pixel mean of `count` frames of equal size.
enum SpadStatus spadsim_average_frames(const struct SpadCountFrame *const *frames,
                                       size_t count,
                                       struct SpadCountFrame **out);

// Inverts every pixel's count to flux; `saturated` receives the number of clamped pixels.
enum SpadStatus spadsim_invert_frame(const struct SpadCountFrame *frame,
                                     const struct SpadDetectorConfig *config,
                                     struct SpadFluxField **out,
                                     size_t *saturated);

enum SpadStatus spadsim_frame_dimensions(const struct SpadCountFrame *frame,
                                         size_t *width,
                                         size_t *height);

// Row-major counts, owned by the frame.
const double *spadsim_frame_counts(const struct SpadCountFrame *frame);

void spadsim_frame_free(struct SpadCountFrame *frame);

// PSNR in dB of two interleaved images; identical inputs give +infinity.
enum SpadStatus spadsim_psnr(const double *a,
                             const double *b,
                             size_t width,
                             size_t height,
                             size_t channels,
                             double peak,
                             double *out);

// Mean SSIM (11x11 Gaussian window, valid region; channel mean for RGB).
enum SpadStatus spadsim_ssim(const double *a,
                             const double *b,
                             size_t width,
                             size_t height,
                             size_t channels,
                             double peak,
                             double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPADSIM_H */
